#include "gatefx/gate/gate.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "gatefx/run/instrument.hpp"

namespace gatefx::gate {

void GateConfig::validate() const {
  if (!(lambda_int >= 0)) throw std::invalid_argument("GateConfig: lambda_int must be >= 0");
  if (!(tau > 0)) throw std::invalid_argument("GateConfig: tau must be positive");
  if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("GateConfig: gamma must lie in (0,1)");
}

double extrinsic_advantage(double r_ext, double v_s, double v_next, double gamma, bool done) {
  return r_ext + (done ? 0.0 : gamma * v_next) - v_s;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double gate_input(double advantage, const effect::RunningStats& stats) {
  return (advantage - stats.mean()(0)) / (stats.std()(0) + stats.eps());
}

double gate(double advantage, const effect::RunningStats& stats, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("gate: tau must be positive");
  return sigmoid(gate_input(advantage, stats) / tau);
}

double intrinsic_reward(double kappa, double score, double lambda_int) { return lambda_int * kappa * score; }

double compose_total(double r_ext, double r_int) { return r_ext + r_int; }

double intrinsic_return_bound(int num_agents, double lambda_int, double c_max, double gamma) {
  return num_agents * lambda_int * c_max / (1.0 - gamma);
}

GateBatch apply_gate(const Eigen::VectorXd& r_ext, const Eigen::VectorXd& v_s,
                     const Eigen::VectorXd& v_next, const Eigen::VectorXd& done,
                     const Eigen::MatrixXd& scaled_scores, const effect::RunningStats& adv_stats,
                     const GateConfig& config) {
  config.validate();
  const Eigen::Index B = r_ext.size();
  if (v_s.size() != B || v_next.size() != B || done.size() != B || scaled_scores.rows() != B)
    throw std::invalid_argument("apply_gate: batch length mismatch");
  GateBatch g;
  g.advantage.resize(B);
  g.kappa.resize(B);
  g.r_int.resize(B, scaled_scores.cols());
  g.r_total.resize(B, scaled_scores.cols());
  for (Eigen::Index b = 0; b < B; ++b) {
    g.advantage(b) = extrinsic_advantage(r_ext(b), v_s(b), v_next(b), config.gamma, done(b) > 0.5);
    g.kappa(b) = config.enabled ? gate(g.advantage(b), adv_stats, config.tau) : 1.0;
    for (Eigen::Index i = 0; i < scaled_scores.cols(); ++i) {
      g.r_int(b, i) = intrinsic_reward(g.kappa(b), scaled_scores(b, i), config.lambda_int);
      g.r_total(b, i) = compose_total(r_ext(b), g.r_int(b, i));
    }
  }
  run::counters().gate_evaluations += B;
  return g;
}

GateSummary summarize(const GateBatch& g) {
  GateSummary s;
  const auto n = static_cast<double>(g.kappa.size());
  if (n == 0) return s;
  s.mean_kappa = g.kappa.mean();
  s.frac_low = (g.kappa.array() < 0.1).cast<double>().sum() / n;
  s.frac_high = (g.kappa.array() > 0.9).cast<double>().sum() / n;
  s.mean_r_int = g.r_int.size() ? g.r_int.mean() : 0.0;
  return s;
}

void write_gate_csv(std::ostream& os, long long step, const GateSummary& s, bool header) {
  if (header) os << "step,mean_kappa,frac_kappa_lt_0.1,frac_kappa_gt_0.9,mean_r_int\n";
  os << step << ',' << s.mean_kappa << ',' << s.frac_low << ',' << s.frac_high << ',' << s.mean_r_int << '\n';
}

}  // namespace gatefx::gate
