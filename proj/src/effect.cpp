#include "gatefx/effect/effect.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "gatefx/run/instrument.hpp"

namespace gatefx::effect {

Eigen::VectorXd BranchSet::joint_action(int k) const {
  Eigen::VectorXd a = factual_action;
  if (k >= 0) a.segment(source * action_dim, action_dim) = alternatives.col(k);
  return a;
}

BranchSet build_branches(const Eigen::VectorXd& state, const Eigen::VectorXd& joint_action,
                         int source, int action_dim, int K, int horizon, std::mt19937_64& rng) {
  if (K < 1) throw std::invalid_argument("build_branches: K must be >= 1");
  if (horizon < 1) throw std::invalid_argument("build_branches: horizon must be >= 1");
  if (source < 0 || (source + 1) * action_dim > joint_action.size())
    throw std::out_of_range("build_branches: bad source agent");
  BranchSet set;
  set.source = source;
  set.action_dim = action_dim;
  set.horizon = horizon;
  set.start_state = state;
  set.factual_action = joint_action;
  set.alternatives.resize(action_dim, K);
  const Eigen::VectorXd executed = joint_action.segment(source * action_dim, action_dim);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto draw = [&](Eigen::Index k) {
    for (int d = 0; d < action_dim; ++d) set.alternatives(d, k) = u(rng);
  };
  for (Eigen::Index k = 0; k < K; ++k) {
    draw(k);
    if ((set.alternatives.col(k) - executed).cwiseAbs().maxCoeff() <= kSameActionTol) draw(k);
  }
  ++run::counters().branch_sets;
  return set;
}

void fill_rollouts(BranchSet& set, model::Dynamics& dynamics, const model::Policy& policy,
                   const env::Environment& env) {
  const int K = set.num_branches();
  Eigen::MatrixXd starts = set.start_state.replicate(1, K + 1);
  Eigen::MatrixXd actions(set.factual_action.size(), K + 1);
  actions.col(0) = set.factual_action;
  for (int k = 0; k < K; ++k) actions.col(k + 1) = set.joint_action(k);
  const auto steps = model::rollout_batch(dynamics, policy, env, starts, actions, set.horizon);
  auto extract = [&](int col, int tag) {
    model::BranchRollout r;
    r.branch = tag;
    r.states.resize(starts.rows(), set.horizon);
    for (int h = 0; h < set.horizon; ++h) r.states.col(h) = steps[static_cast<std::size_t>(h)].col(col);
    r.first_source_action = actions.col(col).segment(set.source * set.action_dim, set.action_dim);
    return r;
  };
  set.factual = extract(0, -1);
  set.counterfactual.clear();
  for (int k = 0; k < K; ++k) set.counterfactual.push_back(extract(k + 1, k));
}

Eigen::VectorXd teammate_features(const env::Environment& env, const Eigen::VectorXd& state,
                                  int teammate, const RunningStats& stats) {
  if (teammate < 0 || teammate >= env.num_agents())
    throw std::out_of_range("teammate_features: unknown teammate id");
  return stats.normalize(env.feature(state, teammate)).col(0);
}

double DistanceTensor::horizon_mean(int h) const {
  double s = 0;
  for (int j = 0; j < j_; ++j)
    for (int k = 0; k < k_; ++k) s += (*this)(j, h, k);
  return j_ * k_ > 0 ? s / (j_ * k_) : 0.0;
}

DistanceTensor branch_distances(const BranchSet& set, const env::Environment& env,
                                const RunningStats& feature_stats) {
  if (!set.has_rollouts()) throw std::logic_error("branch_distances: rollouts missing");
  const int N = env.num_agents();
  DistanceTensor d(N - 1, set.horizon, set.num_branches());
  int slot = 0;
  for (int j = 0; j < N; ++j) {
    if (j == set.source) continue;
    for (int h = 0; h < set.horizon; ++h) {
      const Eigen::VectorXd zf = teammate_features(env, set.factual.states.col(h), j, feature_stats);
      for (int k = 0; k < set.num_branches(); ++k) {
        const Eigen::VectorXd zk =
            teammate_features(env, set.counterfactual[static_cast<std::size_t>(k)].states.col(h), j, feature_stats);
        d(slot, h, k) = (zf - zk).norm();
      }
    }
    ++slot;
  }
  return d;
}

void check_weights(const Eigen::VectorXd& w) {
  if (w.size() < 1 || (w.array() < 0).any() || !w.allFinite() || std::abs(w.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("horizon weights must be nonnegative and sum to 1");
}

Eigen::VectorXd uniform_weights(int horizon) {
  if (horizon < 1) throw std::invalid_argument("uniform_weights: horizon must be >= 1");
  return Eigen::VectorXd::Constant(horizon, 1.0 / horizon);
}

double aggregate_score(const DistanceTensor& d, const Eigen::VectorXd& w, int num_agents) {
  check_weights(w);
  if (w.size() != d.horizon()) throw std::invalid_argument("aggregate_score: weight length != horizon");
  if (num_agents < 2) return 0.0;
  if (d.teammates() != num_agents - 1) throw std::invalid_argument("aggregate_score: teammate count mismatch");
  double c = 0;
  for (int h = 0; h < d.horizon(); ++h) {
    double over_j = 0;
    for (int j = 0; j < d.teammates(); ++j) {
      double over_k = 0;
      for (int k = 0; k < d.branches(); ++k) over_k += d(j, h, k);
      over_j += over_k / d.branches();
    }
    c += w(h) * over_j / (num_agents - 1);
  }
  return c;
}

double scale_score(double raw, const RunningStats& score_stats, double c_max) {
  if (!(raw >= 0)) throw InvariantError("scale_score: raw score must be nonnegative");
  return std::clamp(raw / (score_stats.std()(0) + score_stats.eps()), 0.0, c_max);
}

Eigen::MatrixXd pooled_features(const env::Environment& env, const Eigen::MatrixXd& states) {
  const int N = env.num_agents();
  const Eigen::Index B = states.cols();
  Eigen::MatrixXd out(env.feature_dim(), B * N);
  Eigen::MatrixXd f;
  for (int j = 0; j < N; ++j) {
    env.features(states, j, f);
    out.middleCols(j * B, B) = f;
  }
  return out;
}

EffectBatch compute_effect_scores(const Eigen::MatrixXd& states, const Eigen::MatrixXd& joint_actions,
                                  const env::Environment& env, model::Dynamics& dynamics,
                                  const model::Policy& policy, const RunningStats& feature_stats,
                                  const RunningStats& score_stats, const EffectParams& params,
                                  std::mt19937_64& rng) {
  const int N = env.num_agents();
  const int H = params.horizon;
  const int K = params.K;
  const int ad = env.action_dim();
  const Eigen::Index B = states.cols();
  const Eigen::VectorXd w = params.weights.size() ? params.weights : uniform_weights(H);
  check_weights(w);
  if (w.size() != H) throw std::invalid_argument("compute_effect_scores: weight length != horizon");
  if (joint_actions.cols() != B) throw nn::ShapeError("compute_effect_scores: column mismatch");

  EffectBatch out;
  out.raw = Eigen::MatrixXd::Zero(B, N);
  out.scaled = Eigen::MatrixXd::Zero(B, N);
  out.horizon_means.assign(static_cast<std::size_t>(H), Eigen::MatrixXd::Zero(B, N));
  ++run::counters().effect_batches;
  if (N < 2 || B == 0) return out;

  const Eigen::Index cols = B * N * K;
  Eigen::MatrixXd cf_states(states.rows(), cols);
  Eigen::MatrixXd cf_actions(joint_actions.rows(), cols);
  for (Eigen::Index b = 0; b < B; ++b)
    for (int i = 0; i < N; ++i) {
      const BranchSet set = build_branches(states.col(b), joint_actions.col(b), i, ad, K, H, rng);
      for (int k = 0; k < K; ++k) {
        const Eigen::Index c = (b * N + i) * K + k;
        cf_states.col(c) = states.col(b);
        cf_actions.col(c) = set.joint_action(k);
      }
    }

  const auto fact = model::rollout_batch(dynamics, policy, env, states, joint_actions, H);
  const auto cf = model::rollout_batch(dynamics, policy, env, cf_states, cf_actions, H);

  if (params.keep_distances)
    out.distances.assign(static_cast<std::size_t>(B * N), DistanceTensor(N - 1, H, K));
  Eigen::MatrixXd ff, fc;
  for (int h = 0; h < H; ++h) {
    auto& hm = out.horizon_means[static_cast<std::size_t>(h)];
    for (int j = 0; j < N; ++j) {
      env.features(fact[static_cast<std::size_t>(h)], j, ff);
      env.features(cf[static_cast<std::size_t>(h)], j, fc);
      const Eigen::MatrixXd zf = feature_stats.normalize(ff);
      const Eigen::MatrixXd zc = feature_stats.normalize(fc);
      for (Eigen::Index b = 0; b < B; ++b)
        for (int i = 0; i < N; ++i) {
          if (i == j) continue;
          const int slot = j < i ? j : j - 1;
          double sum = 0;
          for (int k = 0; k < K; ++k) {
            const double d = (zf.col(b) - zc.col((b * N + i) * K + k)).norm();
            sum += d;
            if (params.keep_distances) out.distances[static_cast<std::size_t>(b * N + i)](slot, h, k) = d;
          }
          hm(b, i) += sum / K / (N - 1);
        }
    }
    out.raw += w(h) * hm;
  }
  for (Eigen::Index b = 0; b < B; ++b)
    for (int i = 0; i < N; ++i) out.scaled(b, i) = scale_score(out.raw(b, i), score_stats, params.c_max);
  return out;
}

void write_effect_csv(std::ostream& os, const EffectBatch& batch,
                      const std::vector<std::int64_t>& transition_ids, bool header) {
  const auto H = batch.horizon_means.size();
  if (header) {
    os << "transition_id,source,raw,scaled";
    for (std::size_t h = 0; h < H; ++h) os << ",h" << (h + 1);
    os << '\n';
  }
  for (Eigen::Index b = 0; b < batch.raw.rows(); ++b)
    for (Eigen::Index i = 0; i < batch.raw.cols(); ++i) {
      os << transition_ids.at(static_cast<std::size_t>(b)) << ',' << i << ',' << batch.raw(b, i) << ','
         << batch.scaled(b, i);
      for (std::size_t h = 0; h < H; ++h) os << ',' << batch.horizon_means[h](b, i);
      os << '\n';
    }
}

}  // namespace gatefx::effect
