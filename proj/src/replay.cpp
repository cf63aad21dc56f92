#include "gatefx/rl/replay.hpp"

#include <algorithm>
#include <stdexcept>

namespace gatefx::rl {

ReplayBuffer::ReplayBuffer(std::int64_t capacity, int state_dim, int joint_action_dim)
    : capacity_(capacity) {
  if (capacity <= 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  states_.resize(state_dim, 0);
  actions_.resize(joint_action_dim, 0);
  next_states_.resize(state_dim, 0);
}

void ReplayBuffer::grow_to(std::int64_t columns) {
  // Storage grows geometrically up to the capacity.
  const std::int64_t target = std::min(capacity_, std::max<std::int64_t>(columns, 2 * states_.cols()));
  states_.conservativeResize(Eigen::NoChange, target);
  actions_.conservativeResize(Eigen::NoChange, target);
  next_states_.conservativeResize(Eigen::NoChange, target);
  rewards_.conservativeResize(target);
  done_.conservativeResize(target);
}

void ReplayBuffer::add(const Eigen::VectorXd& state, const Eigen::VectorXd& joint_action,
                       double reward_ext, const Eigen::VectorXd& next_state, bool done) {
  if (state.size() != states_.rows() || next_state.size() != states_.rows() ||
      joint_action.size() != actions_.rows())
    throw std::invalid_argument("ReplayBuffer::add: vector length mismatch");
  if (cursor_ >= states_.cols()) grow_to(cursor_ + 1);
  states_.col(cursor_) = state;
  actions_.col(cursor_) = joint_action;
  rewards_(cursor_) = reward_ext;
  next_states_.col(cursor_) = next_state;
  done_(cursor_) = done ? 1.0 : 0.0;
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  ++total_added_;
}

std::vector<std::int64_t> ReplayBuffer::sample_indices(std::int64_t n, std::mt19937_64& rng) const {
  if (size_ == 0) throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
  std::uniform_int_distribution<std::int64_t> pick(0, size_ - 1);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch ReplayBuffer::gather(const std::vector<std::int64_t>& indices,
                           const env::Environment& env) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  Batch b;
  b.indices = indices;
  b.states.resize(states_.rows(), n);
  b.next_states.resize(states_.rows(), n);
  b.joint_actions.resize(actions_.rows(), n);
  b.reward_ext.resize(n);
  b.done.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto i = indices[static_cast<std::size_t>(c)];
    if (i < 0 || i >= size_) throw std::out_of_range("ReplayBuffer::gather: index outside filled region");
    b.states.col(c) = states_.col(i);
    b.next_states.col(c) = next_states_.col(i);
    b.joint_actions.col(c) = actions_.col(i);
    b.reward_ext(c) = rewards_(i);
    b.done(c) = done_(i);
  }
  b.observations.resize(static_cast<std::size_t>(env.num_agents()));
  b.next_observations.resize(static_cast<std::size_t>(env.num_agents()));
  for (int a = 0; a < env.num_agents(); ++a) {
    env.observations(b.states, a, b.observations[static_cast<std::size_t>(a)]);
    env.observations(b.next_states, a, b.next_observations[static_cast<std::size_t>(a)]);
  }
  return b;
}

Batch ReplayBuffer::gather_range(std::int64_t first, std::int64_t count,
                                 const env::Environment& env) const {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) idx[static_cast<std::size_t>(k)] = (first + k) % capacity_;
  return gather(idx, env);
}

}  // namespace gatefx::rl
