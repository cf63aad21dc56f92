// Extrinsic-advantage gate and reward composition.
//   A      = r_ext + gamma * (1 - done) * V(s') - V(s)
//   kappa  = sigmoid(((A - mu_A) / (sigma_A + eps)) / tau)
//   r_int  = lambda * kappa * c_i
//   r_tot  = r_ext + r_int   (per agent)
#pragma once

#include <iosfwd>

#include <Eigen/Core>

#include "gatefx/effect/running_stats.hpp"

namespace gatefx::gate {

struct GateConfig {
  double lambda_int = 0.05;
  double tau = 1.0;
  double gamma = 0.95;
  /// false turns the gate off (kappa = 1), as in the ungated ablation.
  bool enabled = true;

  void validate() const;
};

double extrinsic_advantage(double r_ext, double v_s, double v_next, double gamma, bool done);
double sigmoid(double x);
/// Normalized gate input (A - mu_A) / (sigma_A + eps).
double gate_input(double advantage, const effect::RunningStats& stats);
double gate(double advantage, const effect::RunningStats& stats, double tau);
double intrinsic_reward(double kappa, double score, double lambda_int);
double compose_total(double r_ext, double r_int);

/// Upper bound on a discounted intrinsic return: N * lambda * c_max / (1 - gamma).
double intrinsic_return_bound(int num_agents, double lambda_int, double c_max, double gamma);

struct GateBatch {
  Eigen::VectorXd advantage;  // B
  Eigen::VectorXd kappa;      // B, shared by all agents
  Eigen::MatrixXd r_int;      // B x N
  Eigen::MatrixXd r_total;    // B x N
};

/// Uses the frozen advantage stats; the caller commits the batch advantages
/// afterwards.
GateBatch apply_gate(const Eigen::VectorXd& r_ext, const Eigen::VectorXd& v_s,
                     const Eigen::VectorXd& v_next, const Eigen::VectorXd& done,
                     const Eigen::MatrixXd& scaled_scores, const effect::RunningStats& adv_stats,
                     const GateConfig& config);

struct GateSummary {
  double mean_kappa = 0;
  double frac_low = 0;   // kappa < 0.1
  double frac_high = 0;  // kappa > 0.9
  double mean_r_int = 0;
};

GateSummary summarize(const GateBatch& g);

/// Columns: step,mean_kappa,frac_kappa_lt_0.1,frac_kappa_gt_0.9,mean_r_int.
void write_gate_csv(std::ostream& os, long long step, const GateSummary& s, bool header);

}  // namespace gatefx::gate
