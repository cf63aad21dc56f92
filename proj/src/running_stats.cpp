#include "gatefx/effect/running_stats.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace gatefx::effect {

RunningStats::RunningStats(int dim, double momentum, double eps)
    : mean_(Eigen::VectorXd::Zero(dim)),
      std_(Eigen::VectorXd::Ones(dim)),
      momentum_(momentum),
      eps_(eps) {
  if (dim < 1) throw std::invalid_argument("RunningStats: dim must be >= 1");
  if (!(momentum >= 0 && momentum < 1)) throw std::invalid_argument("RunningStats: momentum must lie in [0,1)");
  if (!(eps > 0)) throw std::invalid_argument("RunningStats: eps must be positive");
}

void RunningStats::commit(const Eigen::MatrixXd& samples) {
  if (samples.rows() != dim()) throw std::invalid_argument("RunningStats::commit: dimension mismatch");
  if (samples.cols() == 0) return;
  const Eigen::VectorXd m = samples.rowwise().mean();
  const Eigen::VectorXd s =
      ((samples.colwise() - m).array().square().rowwise().sum() / static_cast<double>(samples.cols()))
          .sqrt()
          .matrix();
  if (commits_ == 0) {
    mean_ = m;
    std_ = s;
  } else {
    mean_ = momentum_ * mean_ + (1 - momentum_) * m;
    std_ = momentum_ * std_ + (1 - momentum_) * s;
  }
  ++commits_;
}

Eigen::MatrixXd RunningStats::normalize(const Eigen::MatrixXd& x) const {
  if (x.rows() != dim()) throw std::invalid_argument("RunningStats::normalize: dimension mismatch");
  return ((x.colwise() - mean_).array().colwise() / (std_.array() + eps_)).matrix();
}

void RunningStats::set(const Eigen::VectorXd& mean, const Eigen::VectorXd& std, std::int64_t commits) {
  if (mean.size() != std.size() || mean.size() < 1) throw std::invalid_argument("RunningStats::set: bad sizes");
  if ((std.array() < 0).any()) throw std::invalid_argument("RunningStats::set: negative std");
  mean_ = mean;
  std_ = std;
  commits_ = commits;
}

std::string RunningStats::serialize() const {
  std::ostringstream os;
  char buf[32];
  auto hex = [&](double v) {
    std::snprintf(buf, sizeof buf, "%a", v);
    return std::string(buf);
  };
  os << dim() << ' ' << hex(momentum_) << ' ' << hex(eps_) << ' ' << commits_;
  for (int i = 0; i < dim(); ++i) os << ' ' << hex(mean_(i));
  for (int i = 0; i < dim(); ++i) os << ' ' << hex(std_(i));
  return os.str();
}

RunningStats RunningStats::deserialize(std::string_view text) {
  std::istringstream is{std::string(text)};
  int dim = 0;
  std::string tok;
  std::int64_t commits = 0;
  auto next = [&]() {
    if (!(is >> tok)) throw std::invalid_argument("RunningStats::deserialize: truncated");
    return std::strtod(tok.c_str(), nullptr);
  };
  if (!(is >> dim)) throw std::invalid_argument("RunningStats::deserialize: missing dim");
  const double m = next();
  const double e = next();
  if (!(is >> commits)) throw std::invalid_argument("RunningStats::deserialize: missing count");
  RunningStats r(dim, m, e);
  Eigen::VectorXd mean(dim), std(dim);
  for (int i = 0; i < dim; ++i) mean(i) = next();
  for (int i = 0; i < dim; ++i) std(i) = next();
  r.set(mean, std, commits);
  return r;
}

}  // namespace gatefx::effect
