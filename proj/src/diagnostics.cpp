#include "gatefx/diag/diagnostics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "gatefx/effect/effect.hpp"
#include "gatefx/run/rng_streams.hpp"

namespace gatefx::diag {

double rank_auc(const std::vector<double>& score, const std::vector<int>& label) {
  if (score.size() != label.size()) throw std::invalid_argument("rank_auc: length mismatch");
  const std::size_t n = score.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && score[order[j + 1]] == score[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double pos = 0, rank_sum = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (label[i]) {
      pos += 1;
      rank_sum += rank[i];
    }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("rank_auc: both labels must be present");
  return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

Eigen::MatrixXd collect_contexts(const env::Environment& env, const model::Policy& policy, int M,
                                 double noise, std::mt19937_64& rng) {
  if (M < 1) throw std::invalid_argument("collect_contexts: M must be >= 1");
  const int L = env.episode_length();
  const int episodes = (M + L - 1) / L + 1;
  std::vector<Eigen::VectorXd> pool;
  std::normal_distribution<double> g(0.0, noise > 0 ? noise : 1.0);
  for (int e = 0; e < episodes; ++e) {
    Eigen::VectorXd s = env.reset(run::evaluation_episode_seed(rng(), e));
    for (int t = 0; t < L; ++t) {
      pool.push_back(s);
      Eigen::VectorXd a = policy(s).col(0);
      if (noise > 0)
        for (Eigen::Index k = 0; k < a.size(); ++k) a(k) += g(rng);
      a = a.cwiseMax(-1.0).cwiseMin(1.0);
      s = env.step(s, a, t).next_state;
    }
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  Eigen::MatrixXd out(env.state_dim(), M);
  for (int c = 0; c < M; ++c) out.col(c) = pool[static_cast<std::size_t>(c)];
  return out;
}

namespace {

double rollout_mse(model::Dynamics& model, const env::Environment& twin, const model::Policy& policy,
                   const Eigen::MatrixXd& starts, const Eigen::MatrixXd& actions, int horizon) {
  model::ExactDynamics exact(twin);
  const auto pred = model::rollout_batch(model, policy, twin, starts, actions, horizon);
  const auto truth = model::rollout_batch(exact, policy, twin, starts, actions, horizon);
  double s = 0;
  for (int h = 0; h < horizon; ++h)
    s += (pred[static_cast<std::size_t>(h)] - truth[static_cast<std::size_t>(h)]).squaredNorm();
  return s / (static_cast<double>(twin.state_dim()) * static_cast<double>(starts.cols()) * horizon);
}

struct Interventions {
  Eigen::MatrixXd starts;   // S x (M*K)
  Eigen::MatrixXd actions;  // A x (M*K)
  std::vector<int> source;  // per context
};

Interventions sample_interventions(const env::Environment& env, const model::Policy& policy,
                                   const Eigen::MatrixXd& contexts, int horizon, int K,
                                   std::mt19937_64& rng) {
  const Eigen::Index M = contexts.cols();
  const Eigen::MatrixXd factual = policy(contexts);
  Interventions iv;
  iv.starts.resize(contexts.rows(), M * K);
  iv.actions.resize(factual.rows(), M * K);
  std::uniform_int_distribution<int> pick(0, env.num_agents() - 1);
  for (Eigen::Index c = 0; c < M; ++c) {
    const int i = pick(rng);
    iv.source.push_back(i);
    const auto set = effect::build_branches(contexts.col(c), factual.col(c), i, env.action_dim(), K, horizon, rng);
    for (int k = 0; k < K; ++k) {
      iv.starts.col(c * K + k) = contexts.col(c);
      iv.actions.col(c * K + k) = set.joint_action(k);
    }
  }
  return iv;
}

}  // namespace

double in_mse(model::Dynamics& model, const env::Environment& twin, const model::Policy& policy,
              const Eigen::MatrixXd& contexts, int horizon) {
  if (contexts.cols() == 0) throw std::invalid_argument("in_mse: no contexts");
  return rollout_mse(model, twin, policy, contexts, policy(contexts), horizon);
}

double int_mse(model::Dynamics& model, const env::Environment& twin, const model::Policy& policy,
               const Eigen::MatrixXd& contexts, int horizon, int K, std::mt19937_64& rng) {
  if (contexts.cols() == 0) throw std::invalid_argument("int_mse: no contexts");
  const auto iv = sample_interventions(twin, policy, contexts, horizon, K, rng);
  return rollout_mse(model, twin, policy, iv.starts, iv.actions, horizon);
}

SepAucResult sep_auc(model::Dynamics& model, const env::Environment& twin,
                     const model::Policy& policy, const Eigen::MatrixXd& contexts, int horizon,
                     int K, const Eigen::VectorXd& weights, const effect::RunningStats& feature_stats,
                     std::mt19937_64& rng) {
  if (contexts.cols() == 0) throw std::invalid_argument("sep_auc: no contexts");
  effect::check_weights(weights);
  if (weights.size() != horizon) throw std::invalid_argument("sep_auc: weight length != horizon");
  const Eigen::Index M = contexts.cols();
  const int N = twin.num_agents();
  const Eigen::MatrixXd factual = policy(contexts);
  const auto iv = sample_interventions(twin, policy, contexts, horizon, K, rng);
  model::ExactDynamics exact(twin);
  const auto fp = model::rollout_batch(model, policy, twin, contexts, factual, horizon);
  const auto cp = model::rollout_batch(model, policy, twin, iv.starts, iv.actions, horizon);
  const auto ft = model::rollout_batch(exact, policy, twin, contexts, factual, horizon);
  const auto ct = model::rollout_batch(exact, policy, twin, iv.starts, iv.actions, horizon);

  SepAucResult r;
  r.predicted.assign(static_cast<std::size_t>(M * K), 0.0);
  r.truth.assign(static_cast<std::size_t>(M * K), 0.0);
  Eigen::MatrixXd a, b;
  for (int h = 0; h < horizon; ++h) {
    const auto hs = static_cast<std::size_t>(h);
    for (int j = 0; j < N; ++j) {
      auto zs = [&](const Eigen::MatrixXd& states) {
        twin.features(states, j, a);
        return feature_stats.normalize(a);
      };
      const Eigen::MatrixXd zfp = zs(fp[hs]), zcp = zs(cp[hs]), zft = zs(ft[hs]), zct = zs(ct[hs]);
      for (Eigen::Index c = 0; c < M; ++c) {
        if (iv.source[static_cast<std::size_t>(c)] == j) continue;
        for (int k = 0; k < K; ++k) {
          const Eigen::Index col = c * K + k;
          r.predicted[static_cast<std::size_t>(col)] += weights(h) * (zfp.col(c) - zcp.col(col)).norm() / (N - 1);
          r.truth[static_cast<std::size_t>(col)] += weights(h) * (zft.col(c) - zct.col(col)).norm() / (N - 1);
        }
      }
    }
  }
  std::vector<double> sorted = r.truth;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  for (double q : r.truth) r.label.push_back(q > median ? 1 : 0);
  r.auc = rank_auc(r.predicted, r.label);
  return r;
}

model::CorruptedDynamics corrupt_model(model::Dynamics& base, const env::Environment& env,
                                       double noise_scale, std::uint64_t seed) {
  return model::CorruptedDynamics(base, env, noise_scale, seed);
}

DiagnosticReport diagnose(model::Dynamics& model, const env::Environment& env,
                          const model::Policy& policy, const effect::RunningStats& feature_stats,
                          const DiagnoseParams& p) {
  DiagnosticReport rep;
  rep.horizon = p.horizon;
  rep.K = p.K;
  rep.contexts = p.contexts;
  rep.corruption = p.corruption;
  std::mt19937_64 ctx_rng(run::splitmix64(p.seed ^ 0x11));
  const Eigen::MatrixXd contexts = collect_contexts(env, policy, p.contexts, p.context_noise, ctx_rng);
  const Eigen::VectorXd w = effect::uniform_weights(p.horizon);
  {
    auto m = corrupt_model(model, env, p.corruption, run::splitmix64(p.seed ^ 0x21));
    rep.in_mse = in_mse(m, env, policy, contexts, p.horizon);
  }
  {
    auto m = corrupt_model(model, env, p.corruption, run::splitmix64(p.seed ^ 0x22));
    std::mt19937_64 rng(run::splitmix64(p.seed ^ 0x31));
    rep.int_mse = int_mse(m, env, policy, contexts, p.horizon, p.K, rng);
  }
  {
    auto m = corrupt_model(model, env, p.corruption, run::splitmix64(p.seed ^ 0x23));
    std::mt19937_64 rng(run::splitmix64(p.seed ^ 0x32));
    rep.sep_auc = sep_auc(m, env, policy, contexts, p.horizon, p.K, w, feature_stats, rng).auc;
  }
  return rep;
}

}  // namespace gatefx::diag
