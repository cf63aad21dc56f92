// Closed-loop multi-step rollouts. Step 1 applies a given joint action; later
// steps rebuild observations from the (clipped) predicted state and query the
// deterministic policies.
#pragma once

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "gatefx/env/environment.hpp"
#include "gatefx/model/forward_model.hpp"
#include "gatefx/rl/maddpg.hpp"

namespace gatefx::model {

/// Batched one-step transition, one column per sample.
class Dynamics {
 public:
  virtual ~Dynamics() = default;
  virtual Eigen::MatrixXd predict(const Eigen::MatrixXd& states, const Eigen::MatrixXd& joint_actions) = 0;
};

class LearnedDynamics final : public Dynamics {
 public:
  explicit LearnedDynamics(const ForwardModel& fm) : fm_(fm) {}
  Eigen::MatrixXd predict(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) override {
    return fm_predict_batch(fm_, s, a);
  }

 private:
  const ForwardModel& fm_;
};

/// The simulator itself. The dynamics are time-invariant, so every column is
/// stepped as if it were the first step of an episode.
class ExactDynamics final : public Dynamics {
 public:
  explicit ExactDynamics(const env::Environment& env) : env_(env) {}
  Eigen::MatrixXd predict(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) override;

 private:
  const env::Environment& env_;
};

/// Adds seeded N(0, sigma^2) noise to every predicted coordinate, then clips.
class CorruptedDynamics final : public Dynamics {
 public:
  CorruptedDynamics(Dynamics& base, const env::Environment& env, double sigma, std::uint64_t seed);
  Eigen::MatrixXd predict(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) override;
  double sigma() const { return sigma_; }

 private:
  Dynamics& base_;
  const env::Environment& env_;
  double sigma_;
  std::mt19937_64 rng_;
};

/// Deterministic joint actions for a batch of centralized states.
using Policy = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& states)>;

Policy actor_policy(const rl::LearnerState& learner, const env::Environment& env);

struct BranchRollout {
  Eigen::MatrixXd states;  // state_dim x H, predicted s_{t+1} .. s_{t+H}
  int branch = -1;         // -1 factual, otherwise counterfactual index k
  Eigen::VectorXd first_source_action;

  int horizon() const { return static_cast<int>(states.cols()); }
  bool is_factual() const { return branch < 0; }
};

/// Rollouts for many start columns at once. Returns H matrices, entry h-1
/// holding the clipped predicted states at step h.
std::vector<Eigen::MatrixXd> rollout_batch(Dynamics& dynamics, const Policy& policy,
                                           const env::Environment& env,
                                           const Eigen::MatrixXd& start_states,
                                           const Eigen::MatrixXd& first_joint_actions, int horizon);

BranchRollout rollout_branch(Dynamics& dynamics, const Policy& policy, const env::Environment& env,
                             const Eigen::VectorXd& start_state,
                             const Eigen::VectorXd& first_joint_action, int horizon,
                             int branch = -1, int source = -1);

}  // namespace gatefx::model
