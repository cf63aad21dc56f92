// Per-dimension EMA mean / standard deviation.
//
// Before the first commit the stats are (mean 0, std 1). The first commit
// copies the batch moments; later commits blend with momentum m:
//   mean <- m * mean + (1 - m) * batch_mean
//   std  <- m * std  + (1 - m) * batch_std
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace gatefx::effect {

class RunningStats {
 public:
  RunningStats() : RunningStats(1) {}
  explicit RunningStats(int dim, double momentum = 0.99, double eps = 1e-5);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& std() const { return std_; }
  double momentum() const { return momentum_; }
  double eps() const { return eps_; }
  std::int64_t commits() const { return commits_; }

  /// One batch commit; columns are samples.
  void commit(const Eigen::MatrixXd& samples);

  /// (x - mean) / (std + eps), column by column.
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& x) const;

  /// Directly set the moments (tests and checkpoint restore).
  void set(const Eigen::VectorXd& mean, const Eigen::VectorXd& std, std::int64_t commits = 1);

  std::string serialize() const;
  static RunningStats deserialize(std::string_view text);

  bool operator==(const RunningStats& o) const {
    return mean_ == o.mean_ && std_ == o.std_ && momentum_ == o.momentum_ && eps_ == o.eps_ &&
           commits_ == o.commits_;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd std_;
  double momentum_;
  double eps_;
  std::int64_t commits_ = 0;
};

}  // namespace gatefx::effect
