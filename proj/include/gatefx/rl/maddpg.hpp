// MADDPG-style learner: per-agent deterministic actors on local observations,
// per-agent centralized critics Q_i(s, a_1..a_N), and a centralized
// extrinsic-only state-value network used by the advantage gate.
#pragma once

#include <random>
#include <vector>

#include <Eigen/Core>

#include "gatefx/env/environment.hpp"
#include "gatefx/nn/adam.hpp"
#include "gatefx/nn/mlp.hpp"
#include "gatefx/rl/replay.hpp"

namespace gatefx::rl {

using Params = nn::MlpParams<double>;
using Adam = nn::AdamState<double>;
using Grads = nn::GradBundle<double>;

struct LearnerConfig {
  std::vector<int> actor_hidden{128, 128};
  std::vector<int> critic_hidden{256, 256};
  std::vector<int> value_hidden{256, 256};
  double lr = 1e-3;
  double gamma = 0.95;
  double tau = 0.01;
  double grad_clip = 5.0;
};

struct AgentNets {
  Params actor, actor_target;
  Params critic, critic_target;
  Adam actor_opt, critic_opt;
};

struct LearnerState {
  std::vector<AgentNets> agents;
  Params value, value_target;
  Adam value_opt;
  int action_dim = 0;
  double gamma = 0.95;
  double tau = 0.01;
  double lr = 1e-3;
  double grad_clip = 5.0;

  int num_agents() const { return static_cast<int>(agents.size()); }
};

LearnerState make_learner(const env::Environment& env, const LearnerConfig& config,
                          std::mt19937_64& init_rng);

/// Deterministic joint actions (agent blocks stacked) for per-agent
/// observation batches.
Eigen::MatrixXd actor_actions(const LearnerState& learner,
                              const std::vector<Eigen::MatrixXd>& observations,
                              bool use_target = false);

/// Same, building observations from centralized states.
Eigen::MatrixXd policy_actions(const LearnerState& learner, const env::Environment& env,
                               const Eigen::MatrixXd& states, bool use_target = false);

/// Actor outputs plus seeded Gaussian noise, clamped to [-1, 1].
/// A noise scale of 0 gives the evaluation policy and draws nothing.
Eigen::VectorXd select_actions(const std::vector<Eigen::VectorXd>& observations,
                               const std::vector<const Params*>& actors, double noise_scale,
                               std::mt19937_64& rng);
Eigen::VectorXd select_actions(const LearnerState& learner,
                               const std::vector<Eigen::VectorXd>& observations,
                               double noise_scale, std::mt19937_64& rng);

/// y = r + gamma * (1 - done) * next_value, elementwise.
Eigen::VectorXd td_targets(const Eigen::VectorXd& reward, const Eigen::VectorXd& done,
                           const Eigen::VectorXd& next_value, double gamma);

/// Rows [state; joint action] for critic evaluation.
Eigen::MatrixXd critic_input(const Eigen::MatrixXd& states, const Eigen::MatrixXd& joint_actions);

/// Regresses every critic toward its agent's shaped reward target.
/// `shaped_rewards` is batch x agents. Returns the mean TD loss over agents.
double critic_update(const Batch& batch, const Eigen::MatrixXd& shaped_rewards,
                     LearnerState& learner);

/// Gradient of -mean_b Q_i(s, a with slot i replaced by mu_i(o_i)) with
/// respect to actor i's parameters. Exposed for gradient checks.
Grads actor_gradient(const Batch& batch, const LearnerState& learner, int agent,
                     double* loss = nullptr);

/// One deterministic policy-gradient step per actor. Returns mean -Q.
double actor_update(const Batch& batch, LearnerState& learner);

/// TD(0) regression of the extrinsic value network toward
/// r_ext + gamma * (1 - done) * V_target(s'). Only the extrinsic fields of
/// the batch are read.
double ext_value_update(const Batch& batch, LearnerState& learner);

void polyak_update(LearnerState& learner, double tau);

Eigen::VectorXd ext_values(const LearnerState& learner, const Eigen::MatrixXd& states,
                           bool use_target = false);

}  // namespace gatefx::rl
