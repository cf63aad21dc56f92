// Process-wide counters and wall-clock buckets used to prove which code
// paths ran during training and evaluation.
#pragma once

#include <chrono>
#include <cstdint>

namespace gatefx::run {

struct Counters {
  std::int64_t fm_predict_columns = 0;
  std::int64_t fm_train_steps = 0;
  std::int64_t branch_sets = 0;
  std::int64_t effect_batches = 0;
  std::int64_t gate_evaluations = 0;
  std::int64_t value_updates = 0;
  /// Intrinsic-field reads observed while the extrinsic value net trained.
  std::int64_t value_intrinsic_reads = 0;

  void reset() { *this = Counters{}; }
};

Counters& counters();

enum class Bucket : int { kEnv = 0, kBackbone, kForwardModel, kEffect, kGate, kEval, kOther, kCount };

const char* to_string(Bucket b);

struct Timings {
  double seconds[static_cast<int>(Bucket::kCount)] = {};

  double& operator[](Bucket b) { return seconds[static_cast<int>(b)]; }
  double operator[](Bucket b) const { return seconds[static_cast<int>(b)]; }
  double total() const {
    double t = 0;
    for (double s : seconds) t += s;
    return t;
  }
};

/// Adds the lifetime of the guard to one bucket.
class ScopedTimer {
 public:
  ScopedTimer(Timings& t, Bucket b) : t_(t), b_(b), start_(std::chrono::steady_clock::now()) {}
  ~ScopedTimer() {
    t_[b_] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;

 private:
  Timings& t_;
  Bucket b_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace gatefx::run
