#include "gatefx/model/forward_model.hpp"

#include <cmath>
#include <stdexcept>

#include "gatefx/run/instrument.hpp"

namespace gatefx::model {

ForwardModel make_forward_model(int state_dim, int joint_action_dim, const std::vector<int>& hidden,
                                std::mt19937_64& rng, double lr, double grad_clip) {
  std::vector<int> dims{state_dim + joint_action_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(state_dim);
  ForwardModel fm;
  fm.net = nn::make_mlp<double>(dims, nn::Activation::kRelu, nn::Activation::kIdentity, rng);
  fm.opt = nn::make_adam(fm.net);
  fm.state_dim = state_dim;
  fm.action_dim = joint_action_dim;
  fm.lr = lr;
  fm.grad_clip = grad_clip;
  return fm;
}

ForwardModel make_forward_model(const env::Environment& env, const std::vector<int>& hidden,
                                std::mt19937_64& rng, double lr, double grad_clip) {
  return make_forward_model(env.state_dim(), env.joint_action_dim(), hidden, rng, lr, grad_clip);
}

namespace {

Eigen::MatrixXd stack(const ForwardModel& fm, const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
  if (s.rows() != fm.state_dim || a.rows() != fm.action_dim || s.cols() != a.cols())
    throw nn::ShapeError("forward model: state/action shape mismatch");
  Eigen::MatrixXd x(fm.state_dim + fm.action_dim, s.cols());
  x.topRows(fm.state_dim) = s;
  x.bottomRows(fm.action_dim) = a;
  return x;
}

}  // namespace

Eigen::VectorXd fm_predict(const ForwardModel& fm, const Eigen::VectorXd& state,
                           const Eigen::VectorXd& joint_action) {
  return fm_predict_batch(fm, state, joint_action).col(0);
}

Eigen::MatrixXd fm_predict_batch(const ForwardModel& fm, const Eigen::MatrixXd& states,
                                 const Eigen::MatrixXd& joint_actions) {
  run::counters().fm_predict_columns += states.cols();
  return nn::forward_batch(fm.net, stack(fm, states, joint_actions));
}

double fm_loss(const ForwardModel& fm, const Eigen::MatrixXd& states,
               const Eigen::MatrixXd& joint_actions, const Eigen::MatrixXd& next_states) {
  const Eigen::MatrixXd pred = nn::forward_batch(fm.net, stack(fm, states, joint_actions));
  return (pred - next_states).squaredNorm() / static_cast<double>(states.cols());
}

double fm_train_step(ForwardModel& fm, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& joint_actions, const Eigen::MatrixXd& next_states) {
  if (next_states.rows() != fm.state_dim || next_states.cols() != states.cols())
    throw nn::ShapeError("fm_train_step: next-state shape mismatch");
  if (states.cols() == 0) throw std::invalid_argument("fm_train_step: empty batch");
  const auto cache = nn::forward_cached(fm.net, stack(fm, states, joint_actions));
  const Eigen::MatrixXd err = cache.output() - next_states;
  const double n = static_cast<double>(states.cols());
  const double loss = err.squaredNorm() / n;
  auto g = nn::backward(fm.net, cache, Eigen::MatrixXd((2.0 / n) * err));
  nn::clip_global_norm(g, fm.grad_clip);
  nn::adam_update(fm.net, g, fm.opt, fm.lr);
  ++run::counters().fm_train_steps;
  return loss;
}

int epochs_for_ratio(double ratio) {
  if (!(ratio > 0 && ratio <= 1)) throw std::invalid_argument("epochs_for_ratio: ratio must lie in (0,1]");
  if (ratio == 0.25) return 2;
  if (ratio == 0.50) return 5;
  if (ratio == 0.75) return 8;
  return std::max(1, static_cast<int>(std::lround(10.0 * ratio)));
}

}  // namespace gatefx::model
