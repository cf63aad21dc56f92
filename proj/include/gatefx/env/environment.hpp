// Common interface for simulators driven by the trainer, the rollout engine
// and the diagnostics. States are the flat centralized state vectors; batched
// routines take one state per column.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace gatefx::env {

struct StepOutcome {
  Eigen::VectorXd next_state;
  double reward = 0.0;
  bool done = false;
};

class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual int num_agents() const = 0;
  /// Per-agent action width; every component lives in [-1, 1].
  virtual int action_dim() const = 0;
  virtual int state_dim() const = 0;
  virtual int obs_dim() const = 0;
  /// Width of the per-agent feature block compared between branches.
  virtual int feature_dim() const = 0;
  virtual int episode_length() const = 0;

  virtual Eigen::VectorXd reset(std::uint64_t episode_seed) const = 0;

  /// Exact one-step dynamics. `step_index` is the index of `state` within
  /// its episode; done is reported when the successor reaches the episode
  /// length.
  virtual StepOutcome step(const Eigen::VectorXd& state, const Eigen::VectorXd& joint_action,
                           int step_index) const = 0;

  /// Local observations of `agent` for every column of `states`
  /// (out is resized to obs_dim x cols).
  virtual void observations(const Eigen::MatrixXd& states, int agent,
                            Eigen::MatrixXd& out) const = 0;

  /// Raw (unnormalized) feature block of `agent` for every column.
  virtual void features(const Eigen::MatrixXd& states, int agent, Eigen::MatrixXd& out) const = 0;

  /// Projects states onto the valid box and speed limits, column by column.
  virtual void clip_states(Eigen::MatrixXd& states) const = 0;

  Eigen::VectorXd observation(const Eigen::VectorXd& state, int agent) const {
    Eigen::MatrixXd out;
    observations(state, agent, out);
    return out.col(0);
  }

  Eigen::VectorXd feature(const Eigen::VectorXd& state, int agent) const {
    Eigen::MatrixXd out;
    features(state, agent, out);
    return out.col(0);
  }

  int joint_action_dim() const { return num_agents() * action_dim(); }
};

}  // namespace gatefx::env
