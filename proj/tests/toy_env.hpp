// Tiny deterministic environments for learner tests.
#pragma once

#include <cmath>

#include "gatefx/env/environment.hpp"

namespace gatefx::testing {

/// One-step, two-agent bandit on a constant state. Team reward peaks when
/// agent 0 plays `target`; agent 1 is irrelevant.
class Bandit final : public env::Environment {
 public:
  explicit Bandit(double target = 0.3, int episode_length = 1)
      : target_(target), length_(episode_length) {}

  std::string name() const override { return "bandit"; }
  int num_agents() const override { return 2; }
  int action_dim() const override { return 1; }
  int state_dim() const override { return 1; }
  int obs_dim() const override { return 1; }
  int feature_dim() const override { return 1; }
  int episode_length() const override { return length_; }

  Eigen::VectorXd reset(std::uint64_t) const override { return Eigen::VectorXd::Ones(1); }
  env::StepOutcome step(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                        int step_index) const override {
    const double e = a(0) - target_;
    return {s, -e * e, step_index + 1 >= length_};
  }
  void observations(const Eigen::MatrixXd& states, int, Eigen::MatrixXd& out) const override {
    out = states;
  }
  void features(const Eigen::MatrixXd& states, int, Eigen::MatrixXd& out) const override {
    out = states;
  }
  void clip_states(Eigen::MatrixXd&) const override {}

 private:
  double target_;
  int length_;
};

/// N agents whose feature block is the whole state, with trivial dynamics
/// s' = s + 0.1 * sum(a). Used where the feature map must be the identity.
class IdentityFeatures final : public env::Environment {
 public:
  IdentityFeatures(int agents, int state_dim) : n_(agents), d_(state_dim) {}

  std::string name() const override { return "identity-features"; }
  int num_agents() const override { return n_; }
  int action_dim() const override { return 1; }
  int state_dim() const override { return d_; }
  int obs_dim() const override { return d_; }
  int feature_dim() const override { return d_; }
  int episode_length() const override { return 10; }

  Eigen::VectorXd reset(std::uint64_t) const override { return Eigen::VectorXd::Zero(d_); }
  env::StepOutcome step(const Eigen::VectorXd& s, const Eigen::VectorXd& a, int t) const override {
    return {(s.array() + 0.1 * a.sum()).matrix(), 0.0, t + 1 >= 10};
  }
  void observations(const Eigen::MatrixXd& states, int, Eigen::MatrixXd& out) const override {
    out = states;
  }
  void features(const Eigen::MatrixXd& states, int, Eigen::MatrixXd& out) const override {
    out = states;
  }
  void clip_states(Eigen::MatrixXd&) const override {}

 private:
  int n_;
  int d_;
};

}  // namespace gatefx::testing
