#include "gatefx/env/delayed_chain.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gatefx::env {

void DelayedChainConfig::validate() const {
  if (delay < 1) throw std::invalid_argument("DelayedChainConfig: delay must be >= 1");
  if (episode_length < 1) throw std::invalid_argument("DelayedChainConfig: episode_length must be >= 1");
  if (action_cost < 0) throw std::invalid_argument("DelayedChainConfig: action_cost must be >= 0");
  if (!(gain > 0) || !(extent > 0)) throw std::invalid_argument("DelayedChainConfig: gain and extent must be positive");
}

DelayedChain::DelayedChain(DelayedChainConfig config) : config_(config) { config_.validate(); }

DelayedChain build_delayed_chain(int delay) {
  DelayedChainConfig c;
  c.delay = delay;
  return DelayedChain(c);
}

Eigen::VectorXd DelayedChain::reset(std::uint64_t episode_seed) const {
  Eigen::VectorXd s = origin_state();
  if (config_.start_spread > 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(config_.rng_seed),
                      static_cast<std::uint32_t>(config_.rng_seed >> 32),
                      static_cast<std::uint32_t>(episode_seed),
                      static_cast<std::uint32_t>(episode_seed >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> u(-config_.start_spread, config_.start_spread);
    s(kTeammate) = u(rng);
  }
  return s;
}

StepOutcome DelayedChain::step(const Eigen::VectorXd& state, const Eigen::VectorXd& joint_action,
                               int step_index) const {
  if (step_index >= config_.episode_length) throw UsageError("DelayedChain::step: episode finished");
  if (state.size() != state_dim() || joint_action.size() != 2)
    throw std::invalid_argument("DelayedChain::step: dimension mismatch");
  const double u = std::clamp(joint_action(kSource), -1.0, 1.0);
  const int w = latch_width();
  const double released = w == 0 ? u : state(2);
  StepOutcome out;
  out.next_state = state;
  Eigen::VectorXd& n = out.next_state;
  n(kSource) = std::clamp(state(kSource) + config_.gain * u, -config_.extent, config_.extent);
  n(kTeammate) =
      std::clamp(state(kTeammate) + config_.gain * released, -config_.extent, config_.extent);
  if (w > 0) {
    for (int k = 0; k + 1 < w; ++k) n(2 + k) = state(3 + k);
    n(1 + w) = u;
  }
  const double p = config_.two_sided ? std::abs(n(kTeammate)) : n(kTeammate);
  out.reward = (p >= config_.goal ? 1.0 : 0.0) - config_.action_cost * u * u;
  out.done = step_index + 1 >= config_.episode_length;
  return out;
}

void DelayedChain::observations(const Eigen::MatrixXd& states, int agent,
                                Eigen::MatrixXd& out) const {
  if (agent < 0 || agent > 1) throw std::out_of_range("DelayedChain: bad agent id");
  out = states;
}

void DelayedChain::features(const Eigen::MatrixXd& states, int agent, Eigen::MatrixXd& out) const {
  if (agent < 0 || agent > 1) throw std::out_of_range("DelayedChain: bad agent id");
  out = states.row(agent);
}

void DelayedChain::clip_states(Eigen::MatrixXd& states) const {
  states = states.unaryExpr([](double x) { return std::isfinite(x) ? x : 0.0; });
  states.topRows(2) = states.topRows(2).cwiseMax(-config_.extent).cwiseMin(config_.extent);
  if (latch_width() > 0)
    states.bottomRows(latch_width()) = states.bottomRows(latch_width()).cwiseMax(-1.0).cwiseMin(1.0);
}

}  // namespace gatefx::env
