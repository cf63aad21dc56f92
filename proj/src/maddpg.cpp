#include "gatefx/rl/maddpg.hpp"

#include <stdexcept>

#include "gatefx/run/instrument.hpp"

namespace gatefx::rl {
namespace {

std::vector<int> widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

// Mean squared error step: returns loss, applies clipped Adam.
double regress(Params& net, Adam& opt, const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd& targets,
               double lr, double clip) {
  const auto cache = nn::forward_cached(net, inputs);
  const Eigen::RowVectorXd err = cache.output().row(0) - targets;
  const double n = static_cast<double>(inputs.cols());
  const double loss = err.squaredNorm() / n;
  Eigen::MatrixXd upstream = (2.0 / n) * err;
  auto g = nn::backward(net, cache, upstream);
  nn::clip_global_norm(g, clip);
  nn::adam_update(net, g, opt, lr);
  return loss;
}

}  // namespace

LearnerState make_learner(const env::Environment& env, const LearnerConfig& config,
                          std::mt19937_64& init_rng) {
  using nn::Activation;
  LearnerState s;
  s.action_dim = env.action_dim();
  s.gamma = config.gamma;
  s.tau = config.tau;
  s.lr = config.lr;
  s.grad_clip = config.grad_clip;
  if (!(s.gamma > 0 && s.gamma < 1)) throw std::invalid_argument("make_learner: gamma must lie in (0,1)");
  if (!(s.tau > 0 && s.tau <= 1)) throw std::invalid_argument("make_learner: tau must lie in (0,1]");
  const int critic_in = env.state_dim() + env.joint_action_dim();
  for (int i = 0; i < env.num_agents(); ++i) {
    AgentNets a;
    a.actor = nn::make_mlp<double>(widths(env.obs_dim(), config.actor_hidden, env.action_dim()),
                                   Activation::kRelu, Activation::kTanh, init_rng);
    a.critic = nn::make_mlp<double>(widths(critic_in, config.critic_hidden, 1), Activation::kRelu,
                                    Activation::kIdentity, init_rng);
    a.actor_target = a.actor;
    a.critic_target = a.critic;
    a.actor_opt = nn::make_adam(a.actor);
    a.critic_opt = nn::make_adam(a.critic);
    s.agents.push_back(std::move(a));
  }
  s.value = nn::make_mlp<double>(widths(env.state_dim(), config.value_hidden, 1), Activation::kRelu,
                                 Activation::kIdentity, init_rng);
  s.value_target = s.value;
  s.value_opt = nn::make_adam(s.value);
  return s;
}

Eigen::MatrixXd actor_actions(const LearnerState& learner,
                              const std::vector<Eigen::MatrixXd>& observations, bool use_target) {
  if (observations.size() != learner.agents.size())
    throw nn::ShapeError("actor_actions: one observation batch per agent required");
  const int ad = learner.action_dim;
  const Eigen::Index n = observations.front().cols();
  Eigen::MatrixXd joint(ad * learner.num_agents(), n);
  for (int i = 0; i < learner.num_agents(); ++i) {
    const auto& net = use_target ? learner.agents[static_cast<std::size_t>(i)].actor_target
                                 : learner.agents[static_cast<std::size_t>(i)].actor;
    joint.middleRows(i * ad, ad) = nn::forward_batch(net, observations[static_cast<std::size_t>(i)]);
  }
  return joint;
}

Eigen::MatrixXd policy_actions(const LearnerState& learner, const env::Environment& env,
                               const Eigen::MatrixXd& states, bool use_target) {
  std::vector<Eigen::MatrixXd> obs(static_cast<std::size_t>(env.num_agents()));
  for (int i = 0; i < env.num_agents(); ++i) env.observations(states, i, obs[static_cast<std::size_t>(i)]);
  return actor_actions(learner, obs, use_target);
}

Eigen::VectorXd select_actions(const std::vector<Eigen::VectorXd>& observations,
                               const std::vector<const Params*>& actors, double noise_scale,
                               std::mt19937_64& rng) {
  if (observations.size() != actors.size())
    throw nn::ShapeError("select_actions: one observation per agent required");
  std::vector<Eigen::VectorXd> parts;
  Eigen::Index total = 0;
  for (std::size_t i = 0; i < actors.size(); ++i) {
    parts.push_back(nn::forward(*actors[i], observations[i]));
    total += parts.back().size();
  }
  Eigen::VectorXd joint(total);
  Eigen::Index k = 0;
  for (const auto& p : parts) {
    joint.segment(k, p.size()) = p;
    k += p.size();
  }
  if (noise_scale > 0) {
    std::normal_distribution<double> g(0.0, noise_scale);
    for (Eigen::Index j = 0; j < joint.size(); ++j) joint(j) += g(rng);
  }
  return joint.cwiseMax(-1.0).cwiseMin(1.0);
}

Eigen::VectorXd select_actions(const LearnerState& learner,
                               const std::vector<Eigen::VectorXd>& observations,
                               double noise_scale, std::mt19937_64& rng) {
  std::vector<const Params*> actors;
  for (const auto& a : learner.agents) actors.push_back(&a.actor);
  return select_actions(observations, actors, noise_scale, rng);
}

Eigen::VectorXd td_targets(const Eigen::VectorXd& reward, const Eigen::VectorXd& done,
                           const Eigen::VectorXd& next_value, double gamma) {
  if (reward.size() != done.size() || reward.size() != next_value.size())
    throw nn::ShapeError("td_targets: length mismatch");
  return reward.array() + gamma * (1.0 - done.array()) * next_value.array();
}

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& states, const Eigen::MatrixXd& joint_actions) {
  if (states.cols() != joint_actions.cols()) throw nn::ShapeError("critic_input: column mismatch");
  Eigen::MatrixXd x(states.rows() + joint_actions.rows(), states.cols());
  x.topRows(states.rows()) = states;
  x.bottomRows(joint_actions.rows()) = joint_actions;
  return x;
}

double critic_update(const Batch& batch, const Eigen::MatrixXd& shaped_rewards,
                     LearnerState& learner) {
  const int n_agents = learner.num_agents();
  if (shaped_rewards.rows() != batch.size() || shaped_rewards.cols() != n_agents)
    throw nn::ShapeError("critic_update: shaped rewards must be batch x agents");
  const Eigen::MatrixXd next_actions = actor_actions(learner, batch.next_observations, true);
  const Eigen::MatrixXd next_in = critic_input(batch.next_states, next_actions);
  const Eigen::MatrixXd in = critic_input(batch.states, batch.joint_actions);
  double total = 0.0;
  for (int i = 0; i < n_agents; ++i) {
    auto& a = learner.agents[static_cast<std::size_t>(i)];
    const Eigen::VectorXd next_q = nn::forward_batch(a.critic_target, next_in).row(0).transpose();
    const Eigen::VectorXd y = td_targets(shaped_rewards.col(i), batch.done, next_q, learner.gamma);
    total += regress(a.critic, a.critic_opt, in, y.transpose(), learner.lr, learner.grad_clip);
  }
  return total / n_agents;
}

Grads actor_gradient(const Batch& batch, const LearnerState& learner, int agent, double* loss) {
  const auto& a = learner.agents.at(static_cast<std::size_t>(agent));
  const int ad = learner.action_dim;
  const auto actor_cache = nn::forward_cached(a.actor, batch.observations[static_cast<std::size_t>(agent)]);
  Eigen::MatrixXd joint = batch.joint_actions;
  joint.middleRows(agent * ad, ad) = actor_cache.output();
  const auto critic_cache = nn::forward_cached(a.critic, critic_input(batch.states, joint));
  const double n = static_cast<double>(batch.size());
  if (loss) *loss = -critic_cache.output().sum() / n;
  const Eigen::MatrixXd upstream = Eigen::MatrixXd::Constant(1, batch.size(), -1.0 / n);
  const auto critic_grads = nn::backward(a.critic, critic_cache, upstream);
  const Eigen::MatrixXd dq_da =
      critic_grads.input.middleRows(batch.states.rows() + agent * ad, ad);
  return nn::backward(a.actor, actor_cache, dq_da);
}

double actor_update(const Batch& batch, LearnerState& learner) {
  double total = 0.0;
  for (int i = 0; i < learner.num_agents(); ++i) {
    double loss = 0.0;
    auto g = actor_gradient(batch, learner, i, &loss);
    nn::clip_global_norm(g, learner.grad_clip);
    auto& a = learner.agents[static_cast<std::size_t>(i)];
    nn::adam_update(a.actor, g, a.actor_opt, learner.lr);
    total += loss;
  }
  return total / learner.num_agents();
}

Eigen::VectorXd ext_values(const LearnerState& learner, const Eigen::MatrixXd& states,
                           bool use_target) {
  return nn::forward_batch(use_target ? learner.value_target : learner.value, states)
      .row(0)
      .transpose();
}

double ext_value_update(const Batch& batch, LearnerState& learner) {
  ++run::counters().value_updates;
  const Eigen::VectorXd next_v = ext_values(learner, batch.next_states, true);
  const Eigen::VectorXd y = td_targets(batch.reward_ext, batch.done, next_v, learner.gamma);
  return regress(learner.value, learner.value_opt, batch.states, y.transpose(), learner.lr,
                 learner.grad_clip);
}

void polyak_update(LearnerState& learner, double tau) {
  for (auto& a : learner.agents) {
    nn::polyak_update(a.actor_target, a.actor, tau);
    nn::polyak_update(a.critic_target, a.critic, tau);
  }
  nn::polyak_update(learner.value_target, learner.value, tau);
}

}  // namespace gatefx::rl
