#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "gatefx/diag/diagnostics.hpp"
#include "gatefx/run/config.hpp"
#include "gatefx/run/trainer.hpp"

namespace fs = std::filesystem;
using namespace gatefx;

namespace {

int cmd_train(const std::string& config_path, const std::string& preset_name,
              std::optional<std::uint64_t> seed, const std::string& out) {
  run::RunConfig cfg = preset_name.empty() ? run::RunConfig{} : run::preset(preset_name);
  if (!config_path.empty()) cfg = run::load_config(config_path, cfg);
  if (seed) cfg.seed = *seed;
  cfg.validate();
  const fs::path dir = out.empty() ? fs::path("runs") / (std::string(run::to_string(cfg.method)) + "_s" +
                                                          std::to_string(cfg.seed))
                                   : fs::path(out);
  const auto s = run::train(cfg, dir, run::TrainOptions{&std::cerr, true});
  std::printf("out=%s\nfinal_return=%.6f\nbest_return=%.6f\nauc=%.6f\nwall_seconds=%.2f\neffect_overhead=%.4f\n",
              dir.string().c_str(), s.final_return, s.best_return, s.auc, s.wall_seconds, s.effect_overhead);
  return 0;
}

int cmd_evaluate(const std::string& ckpt, int episodes, std::optional<std::uint64_t> seed,
                 const std::string& trace) {
  const auto r = run::evaluate_checkpoint(ckpt, episodes, seed);
  std::printf("episodes=%d\nmean_return=%.6f\nstd_return=%.6f\nseconds_eval=%.4f\n", episodes, r.mean, r.std,
              r.timings[run::Bucket::kEval]);
  std::printf("seconds_fm=%.4f\nseconds_effect=%.4f\nfm_predict_columns=%lld\nbranch_sets=%lld\n",
              r.timings[run::Bucket::kForwardModel], r.timings[run::Bucket::kEffect],
              static_cast<long long>(r.counters.fm_predict_columns),
              static_cast<long long>(r.counters.branch_sets));
  if (!trace.empty()) {
    const auto ck = run::load_checkpoint(ckpt);
    const auto env = run::make_environment(ck.config);
    std::ofstream f(trace);
    run::write_episode_trace(f, *env, ck.learner,
                             run::evaluation_episode_seed(seed.value_or(run::stream_seed(ck.config.seed, run::StreamKey::kEval)), 0));
    if (!f) throw std::runtime_error("cannot write " + trace);
  }
  return 0;
}

int cmd_sweep(const std::string& grid, const std::string& out) {
  std::ifstream f(grid);
  if (!f) throw run::ConfigError("cannot open grid " + grid);
  std::stringstream ss;
  ss << f.rdbuf();
  const auto rows = run::run_sweep(ss.str(), out.empty() ? fs::path("sweep") : fs::path(out), &std::cerr);
  std::cout << run::kSweepHeader << '\n';
  int failed = 0;
  for (const auto& r : rows) {
    std::cout << run::sweep_csv_row(r) << '\n';
    failed += !r.error.empty();
  }
  if (failed) std::cerr << failed << " of " << rows.size() << " cells failed\n";
  return failed ? 1 : 0;
}

int cmd_diagnose(const std::string& ckpt, double sigma, int horizon, int contexts, std::optional<int> K,
                 std::uint64_t seed) {
  const auto ck = run::load_checkpoint(ckpt);
  if (!ck.fm) throw run::ConfigError("diagnose: checkpoint has no forward model (backbone run)");
  const auto env = run::make_environment(ck.config);
  model::LearnedDynamics dyn(*ck.fm);
  const auto policy = model::actor_policy(ck.learner, *env);
  diag::DiagnoseParams p;
  p.horizon = horizon;
  p.K = K.value_or(ck.config.K);
  p.contexts = contexts;
  p.corruption = sigma;
  p.seed = seed;
  const auto r = diag::diagnose(dyn, *env, policy, ck.feature_stats, p);
  std::printf("horizon=%d\nK=%d\ncontexts=%d\ncorruption=%g\nin_mse=%.6g\nint_mse=%.6g\nsep_auc=%.6f\n", r.horizon,
              r.K, r.contexts, r.corruption, r.in_mse, r.int_mse, r.sep_auc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gatefx: gated counterfactual intrinsic rewards for cooperative MARL"};
  app.require_subcommand(1);

  std::string config, preset_name, out, ckpt, trace, grid;
  std::uint64_t seed = 0;
  int episodes = 10, horizon = 3, contexts = 500, K = 1;
  double sigma = 0;

  auto* tr = app.add_subcommand("train", "Train one run");
  tr->add_option("--config", config, "key=value config file");
  tr->add_option("--preset", preset_name, "paper | desk")->check(CLI::IsMember({"paper", "desk"}));
  auto* seed_opt = tr->add_option("--seed", seed, "master seed");
  tr->add_option("--out", out, "run directory");

  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", ckpt)->required();
  ev->add_option("--episodes", episodes)->required();
  auto* ev_seed = ev->add_option("--seed", seed, "evaluation seed");
  ev->add_option("--trace", trace, "write one episode trace CSV");

  auto* sw = app.add_subcommand("sweep", "Train every point of a grid");
  sw->add_option("--grid", grid)->required();
  sw->add_option("--out", out, "sweep directory");

  auto* dg = app.add_subcommand("diagnose", "Forward-model reliability report");
  dg->add_option("--checkpoint", ckpt)->required();
  dg->add_option("--corruption", sigma)->required()->check(CLI::NonNegativeNumber);
  dg->add_option("--horizon", horizon)->required()->check(CLI::PositiveNumber);
  dg->add_option("--contexts", contexts)->check(CLI::PositiveNumber);
  auto* dg_k = dg->add_option("--K", K, "branches per context (default: the run's K)")->check(CLI::PositiveNumber);
  dg->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (tr->parsed())
      return cmd_train(config, preset_name, *seed_opt ? std::optional(seed) : std::nullopt, out);
    if (ev->parsed()) return cmd_evaluate(ckpt, episodes, *ev_seed ? std::optional(seed) : std::nullopt, trace);
    if (sw->parsed()) return cmd_sweep(grid, out);
    if (dg->parsed()) return cmd_diagnose(ckpt, sigma, horizon, contexts, *dg_k ? std::optional(K) : std::nullopt, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
