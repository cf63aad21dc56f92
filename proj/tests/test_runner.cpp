#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "gatefx/env/delayed_chain.hpp"
#include "gatefx/run/config.hpp"
#include "gatefx/run/rng_streams.hpp"
#include "gatefx/run/trainer.hpp"

using namespace gatefx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gatefx_runner_" + name);
  fs::remove_all(p);
  return p;
}

/// A few-second run on the delayed chain.
run::RunConfig tiny(run::Method m, std::uint64_t seed = 3) {
  run::RunConfig c;
  c.task = "delayed-chain";
  c.delay = 2;
  c.episode_length = 12;
  c.total_env_steps = 1200;
  c.eval_every = 400;
  c.eval_episodes = 3;
  c.warmup = 240;
  c.update_every = 4;
  c.diag_every = 10;
  c.actor_hidden = {16};
  c.critic_hidden = {16};
  c.value_hidden = {16};
  c.fm_hidden = {16};
  c.fm_batch = 64;
  c.fm_epochs = 2;
  c.batch_size = 32;
  c.buffer_size = 2000;
  c.K = 4;
  c.method = m;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("paper defaults") {
  const run::RunConfig c;
  CHECK(c.total_env_steps == 4000000);
  CHECK(c.eval_every == 10000);
  CHECK(c.eval_episodes == 10);
  CHECK(c.horizon == 3);
  CHECK(c.K == 64);
  CHECK(c.lambda_int == 0.05);
  CHECK(c.c_max == 5.0);
  CHECK(c.gate_tau == 1.0);
  CHECK(c.fm_epochs == 10);
  CHECK(c.batch_size == 1024);
  CHECK(c.buffer_size == 1000000);
  CHECK(c.lr == 1e-3);
  CHECK(c.gamma == 0.95);
  CHECK(c.polyak == 0.01);
  CHECK(c.fm_hidden == std::vector<int>{256, 256});
  CHECK(c.effective_weights() == std::vector<double>(3, 1.0 / 3));
  CHECK_NOTHROW(c.validate());
  CHECK(run::preset("paper").to_text() == c.to_text());
}

TEST_CASE("desk preset") {
  const auto d = run::preset("desk");
  CHECK(d.agents == 3);
  CHECK(d.total_env_steps == 200000);
  CHECK(d.task == "predator-prey");
  CHECK_NOTHROW(d.validate());
  CHECK_THROWS_AS(run::preset("huge"), run::ConfigError);
}

TEST_CASE("delayed-chain config keys reach the environment") {
  auto c = run::apply_text(run::RunConfig{}, "task=delayed-chain\nchain-gain=0.1\nchain-goal=1.4\n"
                                             "chain-two-sided=true\nchain-action-cost=0.02\n");
  CHECK(c.chain_two_sided);
  CHECK(run::apply_text(run::RunConfig{}, c.to_text()).to_text() == c.to_text());
  const auto env = run::make_environment(c);
  const auto& chain = dynamic_cast<const env::DelayedChain&>(*env);
  CHECK(chain.config().gain == 0.1);
  CHECK(chain.config().goal == 1.4);
  CHECK(chain.config().two_sided);
  CHECK(chain.config().action_cost == 0.02);
  CHECK_THROWS_AS(run::apply_text(c, "chain-two-sided=maybe"), run::ConfigError);
  c.chain_goal = 0;
  CHECK_THROWS_AS(c.validate(), run::ConfigError);
}

TEST_CASE("config text parsing") {
  auto c = run::apply_text(run::RunConfig{}, "# comment\nmethod = magic-no-gate\nK=16\n\ntotal-env-steps=2e5\nseed=7 # trailing\n");
  CHECK(c.method == run::Method::kMagicNoGate);
  CHECK(c.K == 16);
  CHECK(c.total_env_steps == 200000);
  CHECK(c.seed == 7);
  CHECK_THROWS_AS(run::apply_text(c, "bogus=1"), run::ConfigError);
  CHECK_THROWS_AS(run::apply_text(c, "K=abc"), run::ConfigError);
  CHECK_THROWS_AS(run::apply_text(c, "K=1.5"), run::ConfigError);
  CHECK_THROWS_AS(run::apply_text(c, "method=qmix"), run::ConfigError);
  CHECK_THROWS_AS(run::apply_text(c, "no equals sign"), run::ConfigError);
  CHECK_THROWS_AS(run::apply_text(c, "K=2\npreset=desk"), run::ConfigError);
  CHECK(run::apply_text(c, "preset=desk\nK=2").agents == 3);
  CHECK(run::apply_text(c, "fm-ratio=0.25").fm_epochs == 2);
  CHECK(run::apply_text(c, "fm-ratio=0.75").fm_epochs == 8);
  CHECK_THROWS_AS(run::apply_text(c, "fm-ratio=0"), run::ConfigError);
  CHECK(run::apply_text(c, "seed=18446744073709551615").seed == 18446744073709551615ULL);
}

TEST_CASE("config validation") {
  auto bad = [](const std::string& text) { return run::apply_text(run::RunConfig{}, text); };
  CHECK_THROWS_AS(bad("H=0").validate(), run::ConfigError);
  CHECK_THROWS_AS(bad("K=0").validate(), run::ConfigError);
  CHECK_THROWS_AS(bad("weights=0.5,0.5").validate(), run::ConfigError);
  CHECK_THROWS_AS(bad("weights=0.5,0.6,-0.1").validate(), run::ConfigError);
  CHECK_NOTHROW(bad("weights=0.5,0.3,0.2").validate());
  CHECK_THROWS_AS(bad("tau=0").validate(), run::ConfigError);
  CHECK_THROWS_AS(bad("lambda-int=-1").validate(), run::ConfigError);
  CHECK_THROWS_AS(bad("gamma=1").validate(), run::ConfigError);
  CHECK_THROWS_AS(bad("task=smac").validate(), run::ConfigError);
}

TEST_CASE("config text round trip") {
  auto c = run::preset("desk");
  c.method = run::Method::kMagicH1;
  c.weights = {0.2, 0.3, 0.5};
  c.seeds = {4, 5};
  const auto back = run::apply_text(run::RunConfig{}, c.to_text());
  CHECK(back.to_text() == c.to_text());
}

TEST_CASE("method variants") {
  run::RunConfig c;
  c.method = run::Method::kMagicH1;
  c.weights = {0.2, 0.3, 0.5};
  CHECK(c.effective_horizon() == 1);
  CHECK(c.effective_weights() == std::vector<double>{1.0});
  c.method = run::Method::kBackbone;
  CHECK_FALSE(c.uses_effect());
  CHECK(c.effective_horizon() == 3);
}

TEST_CASE("grid expansion") {
  const auto g = run::expand_grid("preset=desk\nmethod=backbone|magic\nseed=1|2|3\n");
  REQUIRE(g.size() == 6);
  CHECK(g[0].at("method") == "backbone");
  CHECK(g[0].at("seed") == "1");
  CHECK(g[1].at("seed") == "2");
  CHECK(g[3].at("method") == "magic");
  CHECK_THROWS_AS(run::expand_grid("K=1\nK=2"), run::ConfigError);
}

TEST_CASE("rng streams") {
  auto a = run::derive_streams(11), b = run::derive_streams(11);
  CHECK(a == b);
  std::set<std::uint64_t> firsts{a.env_reset(), a.exploration(), a.counterfactual(), a.init(),
                                 a.corruption(), a.replay(), a.model()};
  CHECK(firsts.size() == 7);
  for (int i = 0; i < 100; ++i) b.replay();
  const auto text = b.serialize();
  auto c = run::RngStreams::deserialize(text);
  CHECK(c == b);
  CHECK(c.replay() == b.replay());
  CHECK(run::derive_streams(12).init() != run::derive_streams(11).init());
  run::Rng r(5);
  for (int i = 0; i < 100; ++i) {
    CHECK((run::training_episode_seed(r) >> 63) == 0);
    CHECK((run::evaluation_episode_seed(9, i) >> 63) == 1);
  }
}

TEST_CASE("exploration schedule") {
  auto c = run::preset("desk");
  CHECK(run::exploration_scale(c, 0) == doctest::Approx(0.3));
  CHECK(run::exploration_scale(c, 50000) == doctest::Approx(0.175));
  CHECK(run::exploration_scale(c, 100000) == doctest::Approx(0.05));
  CHECK(run::exploration_scale(c, 199999) == doctest::Approx(0.05));
}

TEST_CASE("learning-curve summaries") {
  std::vector<run::LearningPoint> curve;
  for (int i = 1; i <= 12; ++i) curve.push_back({i * 10, static_cast<double>(i), 0.0});
  CHECK(run::final_return(curve) == doctest::Approx(7.5));
  CHECK(run::best_return(curve) == 12.0);
  CHECK(run::normalized_auc(curve) == doctest::Approx(6.5));
  std::vector<run::LearningPoint> two{{0, 0.0, 0}, {10, 2.0, 0}};
  CHECK(run::normalized_auc(two) == 1.0);
  CHECK(run::final_return({{5, 3.0, 0}}) == 3.0);
}

TEST_CASE("training is deterministic and writes its outputs") {
  const auto cfg = tiny(run::Method::kMagic);
  const auto d1 = scratch("det1"), d2 = scratch("det2");
  const auto s1 = run::train(cfg, d1);
  const auto s2 = run::train(cfg, d2);
  const auto curve = slurp(d1 / "learning_curve.csv");
  CHECK(curve == slurp(d2 / "learning_curve.csv"));
  CHECK(slurp(d1 / "diagnostics.csv") == slurp(d2 / "diagnostics.csv"));
  CHECK(curve.rfind("step,mean_return,std_return\n", 0) == 0);
  CHECK(s1.curve.size() == 3);
  CHECK(s1.curve.back().step == 1200);
  CHECK(fs::exists(d1 / "metrics.json"));
  CHECK(fs::exists(d1 / "checkpoint" / "fm.bin"));
  CHECK(s1.final_return == s2.final_return);
}

TEST_CASE("backbone never touches the effect path; magic does, and the value net never reads r_int") {
  const auto b = run::train(tiny(run::Method::kBackbone), scratch("bb"));
  CHECK(b.counters.branch_sets == 0);
  CHECK(b.counters.fm_predict_columns == 0);
  CHECK(b.counters.fm_train_steps == 0);
  CHECK(b.counters.gate_evaluations == 0);
  CHECK(b.max_intrinsic_return == 0.0);
  CHECK(b.timings[run::Bucket::kEffect] == 0.0);
  CHECK_FALSE(fs::exists(scratch("bb") / "checkpoint" / "fm.bin"));

  const auto m = run::train(tiny(run::Method::kMagic), scratch("mg"));
  CHECK(m.counters.branch_sets == m.updates * 32 * 2);
  CHECK(m.counters.fm_train_steps > 0);
  CHECK(m.counters.value_updates == m.updates);
  CHECK(m.counters.value_intrinsic_reads == 0);
  CHECK(m.max_intrinsic_return <= m.intrinsic_bound);
  CHECK(m.intrinsic_bound == doctest::Approx(2 * 0.05 * 5.0 / 0.05));
  CHECK(m.max_step_intrinsic <= 2 * 0.25 + 1e-12);
  CHECK(m.effect_overhead > 0.0);
  CHECK(std::abs(m.timings.total() - m.wall_seconds) <= 0.02 * m.wall_seconds);
}

TEST_CASE("checkpoint evaluation") {
  const auto dir = scratch("ck");
  const auto cfg = tiny(run::Method::kMagicNoGate);
  const auto s = run::train(cfg, dir);
  const auto ck = run::load_checkpoint(dir / "checkpoint");
  CHECK(ck.step == cfg.total_env_steps);
  CHECK(ck.config.to_text() == cfg.to_text());
  CHECK(ck.fm.has_value());
  CHECK(ck.feature_stats.commits() > 0);

  const auto e1 = run::evaluate_checkpoint(dir / "checkpoint", cfg.eval_episodes);
  const auto e2 = run::evaluate_checkpoint(dir / "checkpoint", cfg.eval_episodes);
  CHECK(e1.mean == e2.mean);
  CHECK(e1.std == e2.std);
  CHECK(e1.mean == s.curve.back().mean);
  CHECK(e1.counters.branch_sets == 0);
  CHECK(e1.counters.fm_predict_columns == 0);
  CHECK(e1.counters.fm_train_steps == 0);
  CHECK(e1.timings[run::Bucket::kForwardModel] == 0.0);
  CHECK(e1.timings[run::Bucket::kEffect] == 0.0);
  CHECK_THROWS(run::evaluate_checkpoint(dir / "checkpoint", 0));
  CHECK_THROWS_AS(run::load_checkpoint(dir / "nope"), run::ConfigError);

  fs::remove(dir / "checkpoint" / "actor_1.bin");
  CHECK_THROWS_AS(run::load_checkpoint(dir / "checkpoint"), run::ConfigError);

  std::ostringstream trace;
  const auto env = run::make_environment(cfg);
  run::write_episode_trace(trace, *env, ck.learner, run::evaluation_episode_seed(1, 0));
  std::string line;
  std::istringstream is(trace.str());
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 1 + cfg.episode_length);
  CHECK(trace.str().rfind("step,reward,s0,s1,s2,a0,a1\n", 0) == 0);
}

TEST_CASE("sweep") {
  const auto dir = scratch("sweep");
  std::ostringstream grid;
  grid << "task=delayed-chain\ntotal-env-steps=600\neval-every=300\neval-episodes=2\nwarmup=100\n"
          "update-every=10\nactor-hidden=8\ncritic-hidden=8\nvalue-hidden=8\nfm-hidden=8\nbatch-size=16\n"
          "buffer-size=1000\nK=2\nfm-epochs=1\ncontexts=20\nmethod=backbone|magic\nseed=1|2\n"
          "corruption=0|0.5\n";
  const auto rows = run::run_sweep(grid.str(), dir);
  REQUIRE(rows.size() == 8);
  for (const auto& r : rows) CHECK(r.error.empty());
  CHECK(rows[0].method == "backbone");
  CHECK_FALSE(rows[0].sep_auc.has_value());
  CHECK(rows[0].run_id == rows[1].run_id);
  CHECK(rows[7].method == "magic");
  CHECK(rows[7].seed == 2);
  CHECK(rows[7].H == 3);
  CHECK(rows[7].corruption == 0.5);
  REQUIRE(rows[6].in_mse.has_value());
  CHECK(*rows[7].in_mse > *rows[6].in_mse);
  CHECK(rows[6].final_return == rows[7].final_return);
  CHECK(*rows[6].sep_auc >= 0.0);
  CHECK(*rows[6].sep_auc <= 1.0);
  const auto csv = slurp(dir / "sweep.csv");
  CHECK(csv.rfind(std::string(run::kSweepHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  CHECK(fs::exists(dir / "run_003" / "learning_curve.csv"));
  CHECK_FALSE(fs::exists(dir / "run_004"));

  // Every field except the measured wall time repeats exactly.
  const auto again_dir = scratch("sweep_again");
  run::run_sweep(grid.str(), again_dir);
  auto strip_wall = [](const std::string& text) {
    std::istringstream is(text);
    std::string line, out;
    while (std::getline(is, line)) out += line.substr(0, line.rfind(',')) + '\n';
    return out;
  };
  CHECK(strip_wall(slurp(again_dir / "sweep.csv")) == strip_wall(csv));

  CHECK_THROWS_AS(run::run_sweep("bogus=1|2", scratch("sweep_bad")), run::ConfigError);
  CHECK_THROWS_AS(run::run_sweep("corruption=-1", scratch("sweep_bad")), run::ConfigError);
}

TEST_CASE("sweep: a failing cell is recorded and the sweep continues") {
  const auto dir = scratch("sweep_fail");
  // With delay 2 a one-step horizon sees no true effect, so every branch is
  // labelled negative and the separation AUC is undefined.
  std::ostringstream grid;
  grid << "task=delayed-chain\ntotal-env-steps=200\neval-every=100\neval-episodes=1\nwarmup=50\n"
          "update-every=10\nactor-hidden=4\ncritic-hidden=4\nvalue-hidden=4\nfm-hidden=4\nbatch-size=8\n"
          "buffer-size=500\nK=1\nfm-epochs=1\ncontexts=1\nmethod=magic-h1|backbone\n";
  const auto rows = run::run_sweep(grid.str(), dir);
  REQUIRE(rows.size() == 2);
  CHECK_FALSE(rows[0].error.empty());
  CHECK(rows[1].error.empty());
  CHECK(fs::exists(dir / "sweep_errors.txt"));
  const auto csv = slurp(dir / "sweep.csv");
  CHECK(csv.find("run_000,0,delayed-chain,magic-h1,1,1,0.05,0,,,,,,\n") != std::string::npos);
}
