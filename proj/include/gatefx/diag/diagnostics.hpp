// Forward-model reliability diagnostics against the exact simulator twin.
//
// Errors are per state dimension: mean over contexts and horizons of
// ||s_hat - s||^2 / state_dim. Sep. AUC is computed over branches: the model
// effect p and the true effect q of each branch are
//   sum_h w_h mean_j d[j,h]
// and a branch is labelled positive when q exceeds the pooled median.
#pragma once

#include <random>
#include <vector>

#include <Eigen/Core>

#include "gatefx/effect/running_stats.hpp"
#include "gatefx/env/environment.hpp"
#include "gatefx/model/rollout.hpp"

namespace gatefx::diag {

struct DiagnosticReport {
  double in_mse = 0;
  double int_mse = 0;
  double sep_auc = 0.5;
  int horizon = 1;
  int K = 1;
  int contexts = 0;
  double corruption = 0;
};

/// Mann-Whitney AUC with midranks for ties. Throws unless both labels occur.
double rank_auc(const std::vector<double>& score, const std::vector<int>& label);

/// M context states drawn uniformly from noisy policy episodes.
Eigen::MatrixXd collect_contexts(const env::Environment& env, const model::Policy& policy, int M,
                                 double noise, std::mt19937_64& rng);

double in_mse(model::Dynamics& model, const env::Environment& twin, const model::Policy& policy,
              const Eigen::MatrixXd& contexts, int horizon);

/// Like in_mse, with K first-step source replacements per context (source
/// agent drawn uniformly per context).
double int_mse(model::Dynamics& model, const env::Environment& twin, const model::Policy& policy,
               const Eigen::MatrixXd& contexts, int horizon, int K, std::mt19937_64& rng);

struct SepAucResult {
  double auc = 0.5;
  std::vector<double> predicted;  // p per branch
  std::vector<double> truth;      // q per branch
  std::vector<int> label;
};

SepAucResult sep_auc(model::Dynamics& model, const env::Environment& twin,
                     const model::Policy& policy, const Eigen::MatrixXd& contexts, int horizon,
                     int K, const Eigen::VectorXd& weights, const effect::RunningStats& feature_stats,
                     std::mt19937_64& rng);

/// Model wrapper adding seeded Gaussian output noise, then clipping.
model::CorruptedDynamics corrupt_model(model::Dynamics& base, const env::Environment& env,
                                       double noise_scale, std::uint64_t seed);

struct DiagnoseParams {
  int horizon = 3;
  int K = 16;
  int contexts = 500;
  double corruption = 0;
  double context_noise = 0.1;
  std::uint64_t seed = 0;
};

/// Full report for one (model, policy) pair. All three metrics share the
/// same context set; the corruption noise stream is reseeded per metric.
DiagnosticReport diagnose(model::Dynamics& model, const env::Environment& env,
                          const model::Policy& policy, const effect::RunningStats& feature_stats,
                          const DiagnoseParams& params);

}  // namespace gatefx::diag
