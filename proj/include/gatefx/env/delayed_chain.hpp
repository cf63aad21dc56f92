// Two-agent deterministic world where the source agent's action reaches the
// teammate only after a fixed delay.
//
// State layout: [source_pos, teammate_pos, latch_0 .. latch_{d-2}].
// The latch register holds the source's last d-1 actions (oldest first).
// At each step the source moves immediately by gain * u, while the teammate
// moves by gain * (the action issued d-1 steps earlier). An action issued at
// t therefore leaves the teammate untouched at t+1 .. t+d-1 and moves it at
// t+d. The teammate's own action is ignored (scripted motion).
#pragma once

#include "gatefx/env/environment.hpp"

namespace gatefx::env {

struct DelayedChainConfig {
  int delay = 2;
  int episode_length = 12;
  double gain = 0.25;
  double extent = 1.5;
  /// Team reward of 1 per step while the teammate sits at or beyond this.
  double goal = 1.0;
  /// Also reward positions at or below -goal.
  bool two_sided = false;
  /// Team reward is reduced by action_cost * u^2 for source action u.
  double action_cost = 0.0;
  /// Half-width of the uniform teammate start interval.
  double start_spread = 0.25;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

class DelayedChain final : public Environment {
 public:
  static constexpr int kSource = 0;
  static constexpr int kTeammate = 1;

  explicit DelayedChain(DelayedChainConfig config);

  const DelayedChainConfig& config() const { return config_; }

  std::string name() const override { return "delayed-chain"; }
  int num_agents() const override { return 2; }
  int action_dim() const override { return 1; }
  int state_dim() const override { return 2 + latch_width(); }
  int obs_dim() const override { return state_dim(); }
  int feature_dim() const override { return 1; }
  int episode_length() const override { return config_.episode_length; }

  Eigen::VectorXd reset(std::uint64_t episode_seed) const override;
  StepOutcome step(const Eigen::VectorXd& state, const Eigen::VectorXd& joint_action,
                   int step_index) const override;
  void observations(const Eigen::MatrixXd& states, int agent, Eigen::MatrixXd& out) const override;
  void features(const Eigen::MatrixXd& states, int agent, Eigen::MatrixXd& out) const override;
  void clip_states(Eigen::MatrixXd& states) const override;

  /// Start state with both agents at the origin and an empty latch.
  Eigen::VectorXd origin_state() const { return Eigen::VectorXd::Zero(state_dim()); }

 private:
  int latch_width() const { return config_.delay - 1; }

  DelayedChainConfig config_;
};

/// Convenience constructor for theory checks.
DelayedChain build_delayed_chain(int delay);

}  // namespace gatefx::env
