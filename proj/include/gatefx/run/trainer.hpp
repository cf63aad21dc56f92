// Training loop, evaluation, checkpoints and sweeps.
//
// Run directory layout:
//   config.txt          canonical config
//   learning_curve.csv  step,mean_return,std_return
//   diagnostics.csv     per-update effect/gate/loss summaries
//   metrics.json        flat summary
//   checkpoint/         network snapshots + manifest
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gatefx/effect/running_stats.hpp"
#include "gatefx/env/environment.hpp"
#include "gatefx/model/forward_model.hpp"
#include "gatefx/rl/maddpg.hpp"
#include "gatefx/run/config.hpp"
#include "gatefx/run/instrument.hpp"
#include "gatefx/run/rng_streams.hpp"

namespace gatefx::run {

std::unique_ptr<env::Environment> make_environment(const RunConfig& c);
rl::LearnerConfig learner_config(const RunConfig& c);

/// Exploration scale at a given env step: linear from noise_start to
/// noise_end over the first half of training, then constant.
double exploration_scale(const RunConfig& c, std::int64_t step);

struct EvalResult {
  double mean = 0;
  double std = 0;
  std::vector<double> returns;
  Timings timings;
  /// Counter increments observed during the evaluation.
  Counters counters;
};

/// Noise-free episodes on seeds from the evaluation seed space.
EvalResult evaluate_policy(const env::Environment& env, const rl::LearnerState& learner,
                           int episodes, std::uint64_t eval_seed);

/// Per-step trace of one deterministic evaluation episode:
/// step,reward,s0..s{S-1},a0..a{A-1}.
void write_episode_trace(std::ostream& os, const env::Environment& env,
                         const rl::LearnerState& learner, std::uint64_t episode_seed);

struct LearningPoint {
  std::int64_t step = 0;
  double mean = 0;
  double std = 0;
};

/// Mean of the last `last` points.
double final_return(const std::vector<LearningPoint>& curve, int last = 10);
double best_return(const std::vector<LearningPoint>& curve);
/// Trapezoid area of mean return over steps divided by the step span.
double normalized_auc(const std::vector<LearningPoint>& curve);

struct TrainSummary {
  std::vector<LearningPoint> curve;
  double final_return = 0;
  double best_return = 0;
  double auc = 0;
  double wall_seconds = 0;
  Timings timings;
  Counters counters;
  /// Share of training wall time spent in fm + effect + gate.
  double effect_overhead = 0;
  /// Largest realized discounted intrinsic return (summed over agents) of
  /// any completed training episode, using the latest r_int per transition.
  double max_intrinsic_return = 0;
  double intrinsic_bound = 0;
  double max_step_intrinsic = 0;
  std::int64_t updates = 0;
};

struct TrainOptions {
  std::ostream* log = nullptr;
  bool write_checkpoint = true;
};

TrainSummary train(const RunConfig& config, const std::filesystem::path& out_dir,
                   const TrainOptions& options = {});

void write_metrics(const std::filesystem::path& path, const RunConfig& config, const TrainSummary& s);

struct Checkpoint {
  RunConfig config;
  std::int64_t step = 0;
  rl::LearnerState learner;
  std::optional<model::ForwardModel> fm;
  RngStreams streams;
  effect::RunningStats feature_stats, score_stats, adv_stats;
};

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ck);
/// Throws ConfigError if the directory is missing or inconsistent.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

EvalResult evaluate_checkpoint(const std::filesystem::path& dir, int episodes,
                               std::optional<std::uint64_t> eval_seed = std::nullopt);

struct SweepRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string task;
  std::string method;
  int H = 1;
  int K = 1;
  double lambda_int = 0;
  double corruption = 0;
  /// Diagnostics are absent for runs without a forward model.
  std::optional<double> in_mse, int_mse, sep_auc;
  double final_return = 0;
  double auc_return = 0;
  double wall_seconds = 0;
  /// Non-empty when the cell failed; numeric fields are then blank in the CSV.
  std::string error;
};

/// Header of sweep.csv.
inline constexpr const char* kSweepHeader =
    "run_id,seed,task,method,H,K,lambda_int,corruption,in_mse,int_mse,sep_auc,final_return,auc_return,"
    "wall_seconds";

std::string sweep_csv_row(const SweepRow& r);

/// Grid keys are config keys plus `preset`, `config`, `corruption` (default
/// 0) and `contexts` (default 500). Cells that differ only in corruption
/// share one training run in out_dir/run_XXX. Rows are appended to
/// out_dir/sweep.csv in grid order; a failing cell is recorded in
/// out_dir/sweep_errors.txt and the sweep continues.
std::vector<SweepRow> run_sweep(const std::string& grid_text, const std::filesystem::path& out_dir,
                                std::ostream* log = nullptr);

}  // namespace gatefx::run
