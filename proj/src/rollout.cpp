#include "gatefx/model/rollout.hpp"

#include <algorithm>
#include <stdexcept>

namespace gatefx::model {
namespace {

constexpr Eigen::Index kChunk = 1024;

}  // namespace

Eigen::MatrixXd ExactDynamics::predict(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
  if (s.cols() != a.cols()) throw nn::ShapeError("ExactDynamics: column mismatch");
  Eigen::MatrixXd out(s.rows(), s.cols());
  for (Eigen::Index c = 0; c < s.cols(); ++c)
    out.col(c) = env_.step(s.col(c), a.col(c), 0).next_state;
  return out;
}

CorruptedDynamics::CorruptedDynamics(Dynamics& base, const env::Environment& env, double sigma,
                                     std::uint64_t seed)
    : base_(base), env_(env), sigma_(sigma), rng_(seed) {
  if (!(sigma >= 0)) throw std::invalid_argument("CorruptedDynamics: noise scale must be >= 0");
}

Eigen::MatrixXd CorruptedDynamics::predict(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
  Eigen::MatrixXd out = base_.predict(s, a);
  if (sigma_ == 0) return out;
  std::normal_distribution<double> g(0.0, sigma_);
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) += g(rng_);
  env_.clip_states(out);
  return out;
}

Policy actor_policy(const rl::LearnerState& learner, const env::Environment& env) {
  return [&learner, &env](const Eigen::MatrixXd& states) {
    return rl::policy_actions(learner, env, states, false);
  };
}

std::vector<Eigen::MatrixXd> rollout_batch(Dynamics& dynamics, const Policy& policy,
                                           const env::Environment& env,
                                           const Eigen::MatrixXd& start_states,
                                           const Eigen::MatrixXd& first_joint_actions, int horizon) {
  if (horizon < 1) throw std::invalid_argument("rollout: horizon must be >= 1");
  if (start_states.rows() != env.state_dim() || first_joint_actions.rows() != env.joint_action_dim() ||
      start_states.cols() != first_joint_actions.cols())
    throw nn::ShapeError("rollout: start state/action shape mismatch");
  const Eigen::Index n = start_states.cols();
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(horizon), Eigen::MatrixXd(env.state_dim(), n));
  for (Eigen::Index c0 = 0; c0 < n; c0 += kChunk) {
    const Eigen::Index w = std::min(kChunk, n - c0);
    Eigen::MatrixXd s = dynamics.predict(start_states.middleCols(c0, w), first_joint_actions.middleCols(c0, w));
    env.clip_states(s);
    out[0].middleCols(c0, w) = s;
    for (int h = 1; h < horizon; ++h) {
      const Eigen::MatrixXd a = policy(s);
      s = dynamics.predict(s, a);
      env.clip_states(s);
      out[static_cast<std::size_t>(h)].middleCols(c0, w) = s;
    }
  }
  return out;
}

BranchRollout rollout_branch(Dynamics& dynamics, const Policy& policy, const env::Environment& env,
                             const Eigen::VectorXd& start_state,
                             const Eigen::VectorXd& first_joint_action, int horizon, int branch,
                             int source) {
  const auto steps = rollout_batch(dynamics, policy, env, start_state, first_joint_action, horizon);
  BranchRollout r;
  r.branch = branch;
  r.states.resize(env.state_dim(), horizon);
  for (int h = 0; h < horizon; ++h) r.states.col(h) = steps[static_cast<std::size_t>(h)].col(0);
  if (source >= 0) r.first_source_action = first_joint_action.segment(source * env.action_dim(), env.action_dim());
  return r;
}

}  // namespace gatefx::model
