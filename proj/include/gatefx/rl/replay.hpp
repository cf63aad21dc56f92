// Transition storage and uniform mini-batch sampling.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "gatefx/env/environment.hpp"

namespace gatefx::rl {

/// One environment step as seen by the learner.
struct Transition {
  Eigen::VectorXd state;
  std::vector<Eigen::VectorXd> observations;
  Eigen::VectorXd joint_action;
  double reward_ext = 0.0;
  Eigen::VectorXd next_state;
  std::vector<Eigen::VectorXd> next_observations;
  bool done = false;
};

/// A sampled mini-batch, one column (or entry) per transition. Observations
/// are rebuilt from the stored centralized states through the environment's
/// observation layout.
class Batch {
 public:
  std::vector<std::int64_t> indices;
  Eigen::MatrixXd states;
  Eigen::MatrixXd joint_actions;
  Eigen::VectorXd reward_ext;
  Eigen::MatrixXd next_states;
  Eigen::VectorXd done;  // 1.0 for terminal, 0.0 otherwise
  std::vector<Eigen::MatrixXd> observations;
  std::vector<Eigen::MatrixXd> next_observations;

  Eigen::Index size() const { return states.cols(); }

  /// Per-agent intrinsic rewards (size() x agents), attached after the
  /// effect computation. Reads are counted so callers can prove which
  /// consumers touched the field.
  const Eigen::MatrixXd& intrinsic() const {
    ++intrinsic_reads_;
    return intrinsic_;
  }
  void set_intrinsic(Eigen::MatrixXd r) { intrinsic_ = std::move(r); }
  bool has_intrinsic() const { return intrinsic_.size() > 0; }
  std::int64_t intrinsic_reads() const { return intrinsic_reads_; }

 private:
  Eigen::MatrixXd intrinsic_;
  mutable std::int64_t intrinsic_reads_ = 0;
};

class ReplayBuffer {
 public:
  ReplayBuffer(std::int64_t capacity, int state_dim, int joint_action_dim);

  void add(const Eigen::VectorXd& state, const Eigen::VectorXd& joint_action, double reward_ext,
           const Eigen::VectorXd& next_state, bool done);
  void add(const Transition& t) { add(t.state, t.joint_action, t.reward_ext, t.next_state, t.done); }

  std::int64_t size() const { return size_; }
  std::int64_t capacity() const { return capacity_; }
  std::int64_t cursor() const { return cursor_; }

  /// Uniform indices over the filled region.
  std::vector<std::int64_t> sample_indices(std::int64_t n, std::mt19937_64& rng) const;

  Batch gather(const std::vector<std::int64_t>& indices, const env::Environment& env) const;
  Batch sample(std::int64_t n, std::mt19937_64& rng, const env::Environment& env) const {
    return gather(sample_indices(n, rng), env);
  }

  /// Column range [first, first + count) in insertion order, for consumers
  /// that walk fresh data (the forward-model epochs).
  Batch gather_range(std::int64_t first, std::int64_t count, const env::Environment& env) const;

  /// Total transitions ever added (not capped by capacity).
  std::int64_t total_added() const { return total_added_; }

 private:
  void grow_to(std::int64_t columns);

  std::int64_t capacity_;
  std::int64_t size_ = 0;
  std::int64_t cursor_ = 0;
  std::int64_t total_added_ = 0;
  Eigen::MatrixXd states_;
  Eigen::MatrixXd actions_;
  Eigen::VectorXd rewards_;
  Eigen::MatrixXd next_states_;
  Eigen::VectorXd done_;
};

}  // namespace gatefx::rl
