// Ground-truth branch futures from the simulator itself.
#pragma once

#include <vector>

#include <Eigen/Core>

#include "gatefx/effect/effect.hpp"
#include "gatefx/env/delayed_chain.hpp"
#include "gatefx/model/rollout.hpp"

namespace gatefx::oracle {

/// True H-step trajectory s_{t+1..t+H} (state_dim x H) under the same
/// closed-loop convention as the model rollouts.
Eigen::MatrixXd exact_rollout(const env::Environment& env, const Eigen::VectorXd& start_state,
                              const Eigen::VectorXd& first_joint_action, const model::Policy& policy,
                              int horizon);

/// `count` evenly spaced values covering [-1, 1].
std::vector<double> discretized_actions(int count = 5);

/// Raw score of `source` at (state, joint action) with explicit alternatives
/// (action_dim x K) and exact rollouts.
double exact_score(const env::Environment& env, const Eigen::VectorXd& state,
                   const Eigen::VectorXd& joint_action, int source, const Eigen::MatrixXd& alternatives,
                   const model::Policy& policy, int horizon, const Eigen::VectorXd& weights,
                   const effect::RunningStats& feature_stats);

/// Policy that always returns zero actions.
model::Policy zero_policy(const env::Environment& env);

}  // namespace gatefx::oracle
