// Learned one-step dynamics: [state; joint action] -> absolute next state.
#pragma once

#include <random>
#include <vector>

#include <Eigen/Core>

#include "gatefx/env/environment.hpp"
#include "gatefx/nn/adam.hpp"
#include "gatefx/nn/mlp.hpp"

namespace gatefx::model {

struct ForwardModel {
  nn::MlpParams<double> net;
  nn::AdamState<double> opt;
  int state_dim = 0;
  int action_dim = 0;  // joint
  double lr = 1e-3;
  double grad_clip = 5.0;
};

ForwardModel make_forward_model(int state_dim, int joint_action_dim, const std::vector<int>& hidden,
                                std::mt19937_64& rng, double lr = 1e-3, double grad_clip = 5.0);
ForwardModel make_forward_model(const env::Environment& env, const std::vector<int>& hidden,
                                std::mt19937_64& rng, double lr = 1e-3, double grad_clip = 5.0);

Eigen::VectorXd fm_predict(const ForwardModel& fm, const Eigen::VectorXd& state,
                           const Eigen::VectorXd& joint_action);
/// One column per sample.
Eigen::MatrixXd fm_predict_batch(const ForwardModel& fm, const Eigen::MatrixXd& states,
                                 const Eigen::MatrixXd& joint_actions);

/// Mean over the batch of the squared prediction error ||f(s,a) - s'||^2.
double fm_loss(const ForwardModel& fm, const Eigen::MatrixXd& states,
               const Eigen::MatrixXd& joint_actions, const Eigen::MatrixXd& next_states);

/// One clipped Adam step on fm_loss. Returns the loss before the step.
double fm_train_step(ForwardModel& fm, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& joint_actions, const Eigen::MatrixXd& next_states);

/// Epoch count for a forward-model update ratio in (0, 1]:
/// 0.25 -> 2, 0.50 -> 5, 0.75 -> 8, 1.00 -> 10.
int epochs_for_ratio(double ratio);

}  // namespace gatefx::model
