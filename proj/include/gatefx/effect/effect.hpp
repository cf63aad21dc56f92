// Counterfactual action-effect scores.
//
// For source agent i at transition t, K alternative source actions are rolled
// out next to the factual joint action. Teammate features of the predicted
// states are normalized with shared running stats and compared:
//   d[j,h,k] = || zbar_j(s^f_{t+h}) - zbar_j(s^k_{t+h}) ||_2
//   raw      = sum_h w_h * mean_{j != i} mean_k d[j,h,k]
//   scaled   = clip(raw / (sigma_c + eps), 0, c_max)
#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "gatefx/effect/running_stats.hpp"
#include "gatefx/env/environment.hpp"
#include "gatefx/model/rollout.hpp"

namespace gatefx::effect {

class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Componentwise tolerance under which a sampled alternative counts as the
/// executed action.
inline constexpr double kSameActionTol = 1e-9;

struct BranchSet {
  int source = 0;
  int action_dim = 0;
  int horizon = 1;
  Eigen::VectorXd start_state;
  Eigen::VectorXd factual_action;  // joint
  Eigen::MatrixXd alternatives;    // action_dim x K
  model::BranchRollout factual;
  std::vector<model::BranchRollout> counterfactual;

  int num_branches() const { return static_cast<int>(alternatives.cols()); }
  /// Joint action of branch k (k < 0 gives the factual one).
  Eigen::VectorXd joint_action(int k) const;
  bool has_rollouts() const {
    return factual.states.size() > 0 && static_cast<int>(counterfactual.size()) == num_branches();
  }
};

/// Samples K alternatives uniformly from [-1, 1]^action_dim. A draw equal to
/// the executed source action (within kSameActionTol) is redrawn once.
BranchSet build_branches(const Eigen::VectorXd& state, const Eigen::VectorXd& joint_action,
                         int source, int action_dim, int K, int horizon, std::mt19937_64& rng);

void fill_rollouts(BranchSet& set, model::Dynamics& dynamics, const model::Policy& policy,
                   const env::Environment& env);

/// Normalized feature block of one teammate.
Eigen::VectorXd teammate_features(const env::Environment& env, const Eigen::VectorXd& state,
                                  int teammate, const RunningStats& stats);

/// Distances indexed (teammate slot, horizon, branch). Teammate slots list the
/// agents other than the source in increasing id order.
class DistanceTensor {
 public:
  DistanceTensor() = default;
  DistanceTensor(int teammates, int horizon, int branches)
      : j_(teammates), h_(horizon), k_(branches),
        data_(static_cast<std::size_t>(teammates * horizon * branches), 0.0) {}

  int teammates() const { return j_; }
  int horizon() const { return h_; }
  int branches() const { return k_; }
  double& operator()(int j, int h, int k) { return data_[index(j, h, k)]; }
  double operator()(int j, int h, int k) const { return data_[index(j, h, k)]; }
  const std::vector<double>& data() const { return data_; }

  /// mean_j mean_k d at horizon h.
  double horizon_mean(int h) const;

 private:
  std::size_t index(int j, int h, int k) const {
    return static_cast<std::size_t>((j * h_ + h) * k_ + k);
  }
  int j_ = 0, h_ = 0, k_ = 0;
  std::vector<double> data_;
};

DistanceTensor branch_distances(const BranchSet& set, const env::Environment& env,
                                const RunningStats& feature_stats);

/// Throws std::invalid_argument unless w is a probability vector (1e-9 slack).
void check_weights(const Eigen::VectorXd& w);
Eigen::VectorXd uniform_weights(int horizon);

/// Raw score. Degenerate N = 1 gives 0.
double aggregate_score(const DistanceTensor& d, const Eigen::VectorXd& w, int num_agents);

/// clip(raw / (sigma_c + eps), 0, c_max). Negative raw is an internal error.
double scale_score(double raw, const RunningStats& score_stats, double c_max);

struct EffectScore {
  double raw = 0.0;
  double scaled = 0.0;
  Eigen::VectorXd horizon_means;  // per-horizon teammate/branch means
  DistanceTensor distances;
};

/// Scores of every source agent for a batch of transitions (columns).
struct EffectBatch {
  Eigen::MatrixXd raw;     // B x N
  Eigen::MatrixXd scaled;  // B x N
  /// horizon_means[h] is B x N.
  std::vector<Eigen::MatrixXd> horizon_means;
  /// Optional per-(transition, source) tensors, row-major over (b, i).
  std::vector<DistanceTensor> distances;
};

struct EffectParams {
  int K = 64;
  int horizon = 3;
  Eigen::VectorXd weights;  // empty means uniform
  double c_max = 5.0;
  bool keep_distances = false;
};

/// Same arithmetic and RNG order as calling build_branches for every
/// (transition, source) pair in row-major order, then the per-set routines.
/// Uses frozen stats; committing new stats is the caller's job.
EffectBatch compute_effect_scores(const Eigen::MatrixXd& states, const Eigen::MatrixXd& joint_actions,
                                  const env::Environment& env, model::Dynamics& dynamics,
                                  const model::Policy& policy, const RunningStats& feature_stats,
                                  const RunningStats& score_stats, const EffectParams& params,
                                  std::mt19937_64& rng);

/// Pooled teammate features of every agent in the given states, for the
/// feature-stat commit.
Eigen::MatrixXd pooled_features(const env::Environment& env, const Eigen::MatrixXd& states);

/// Rows: transition_id,source,raw,scaled,h1..hH.
void write_effect_csv(std::ostream& os, const EffectBatch& batch,
                      const std::vector<std::int64_t>& transition_ids, bool header);

}  // namespace gatefx::effect
