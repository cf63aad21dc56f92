#include "gatefx/oracle/oracle.hpp"

#include <stdexcept>

namespace gatefx::oracle {

Eigen::MatrixXd exact_rollout(const env::Environment& env, const Eigen::VectorXd& start_state,
                              const Eigen::VectorXd& first_joint_action, const model::Policy& policy,
                              int horizon) {
  model::ExactDynamics twin(env);
  return model::rollout_branch(twin, policy, env, start_state, first_joint_action, horizon).states;
}

std::vector<double> discretized_actions(int count) {
  if (count < 2) throw std::invalid_argument("discretized_actions: need at least 2 values");
  std::vector<double> v;
  for (int i = 0; i < count; ++i) v.push_back(-1.0 + 2.0 * i / (count - 1));
  return v;
}

double exact_score(const env::Environment& env, const Eigen::VectorXd& state,
                   const Eigen::VectorXd& joint_action, int source, const Eigen::MatrixXd& alternatives,
                   const model::Policy& policy, int horizon, const Eigen::VectorXd& weights,
                   const effect::RunningStats& feature_stats) {
  effect::BranchSet set;
  set.source = source;
  set.action_dim = env.action_dim();
  set.horizon = horizon;
  set.start_state = state;
  set.factual_action = joint_action;
  set.alternatives = alternatives;
  model::ExactDynamics twin(env);
  effect::fill_rollouts(set, twin, policy, env);
  const auto d = effect::branch_distances(set, env, feature_stats);
  return effect::aggregate_score(d, weights, env.num_agents());
}

model::Policy zero_policy(const env::Environment& env) {
  const int a = env.joint_action_dim();
  return [a](const Eigen::MatrixXd& states) { return Eigen::MatrixXd::Zero(a, states.cols()); };
}

}  // namespace gatefx::oracle
