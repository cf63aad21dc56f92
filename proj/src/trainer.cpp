#include "gatefx/run/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "gatefx/diag/diagnostics.hpp"
#include "gatefx/effect/effect.hpp"
#include "gatefx/env/delayed_chain.hpp"
#include "gatefx/env/particle_env.hpp"
#include "gatefx/gate/gate.hpp"
#include "gatefx/model/rollout.hpp"
#include "gatefx/nn/snapshot.hpp"
#include "gatefx/rl/replay.hpp"

namespace gatefx::run {
namespace fs = std::filesystem;

std::unique_ptr<env::Environment> make_environment(const RunConfig& c) {
  if (c.task == "delayed-chain") {
    env::DelayedChainConfig d;
    d.delay = c.delay;
    d.episode_length = c.episode_length;
    d.gain = c.chain_gain;
    d.goal = c.chain_goal;
    d.two_sided = c.chain_two_sided;
    d.action_cost = c.chain_action_cost;
    return std::make_unique<env::DelayedChain>(d);
  }
  env::EnvConfig e;
  e.task = env::parse_task(c.task);
  e.num_agents = c.agents;
  e.episode_length = c.episode_length;
  return std::make_unique<env::ParticleEnv>(e);
}

rl::LearnerConfig learner_config(const RunConfig& c) {
  rl::LearnerConfig l;
  l.actor_hidden = c.actor_hidden;
  l.critic_hidden = c.critic_hidden;
  l.value_hidden = c.value_hidden;
  l.lr = c.lr;
  l.gamma = c.gamma;
  l.tau = c.polyak;
  l.grad_clip = c.grad_clip;
  return l;
}

double exploration_scale(const RunConfig& c, std::int64_t step) {
  const double half = 0.5 * static_cast<double>(c.total_env_steps);
  const double f = std::min(1.0, static_cast<double>(step) / std::max(1.0, half));
  return c.noise_start + (c.noise_end - c.noise_start) * f;
}

namespace {

std::vector<Eigen::VectorXd> observe(const env::Environment& env, const Eigen::VectorXd& s) {
  std::vector<Eigen::VectorXd> obs(static_cast<std::size_t>(env.num_agents()));
  Eigen::MatrixXd tmp;
  for (int i = 0; i < env.num_agents(); ++i) {
    env.observations(s, i, tmp);
    obs[static_cast<std::size_t>(i)] = tmp.col(0);
  }
  return obs;
}

Counters diff(const Counters& a, const Counters& b) {
  Counters d;
  d.fm_predict_columns = a.fm_predict_columns - b.fm_predict_columns;
  d.fm_train_steps = a.fm_train_steps - b.fm_train_steps;
  d.branch_sets = a.branch_sets - b.branch_sets;
  d.effect_batches = a.effect_batches - b.effect_batches;
  d.gate_evaluations = a.gate_evaluations - b.gate_evaluations;
  d.value_updates = a.value_updates - b.value_updates;
  d.value_intrinsic_reads = a.value_intrinsic_reads - b.value_intrinsic_reads;
  return d;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

void check_stream(std::ostream& os, const fs::path& p) {
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

/// Walks fresh transitions in shuffled minibatches for a number of epochs.
double train_forward_model(model::ForwardModel& fm, const rl::ReplayBuffer& replay,
                           const env::Environment& env, std::int64_t first, std::int64_t count,
                           int epochs, int batch, Rng& rng) {
  if (count <= 0 || epochs <= 0) return 0.0;
  const rl::Batch fresh = replay.gather_range(first, count, env);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(count));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  double last = 0;
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(idx.begin(), idx.end(), rng);
    double sum = 0;
    int n = 0;
    for (std::int64_t b = 0; b < count; b += batch) {
      const Eigen::Index w = static_cast<Eigen::Index>(std::min<std::int64_t>(batch, count - b));
      Eigen::MatrixXd s(fresh.states.rows(), w), a(fresh.joint_actions.rows(), w), s2(fresh.states.rows(), w);
      for (Eigen::Index q = 0; q < w; ++q) {
        const Eigen::Index j = idx[static_cast<std::size_t>(b + q)];
        s.col(q) = fresh.states.col(j);
        a.col(q) = fresh.joint_actions.col(j);
        s2.col(q) = fresh.next_states.col(j);
      }
      sum += model::fm_train_step(fm, s, a, s2);
      ++n;
    }
    last = sum / n;
  }
  return last;
}

const char* kDiagHeader =
    "step,update,mean_kappa,frac_kappa_lt_0.1,frac_kappa_gt_0.9,mean_r_int,mean_raw_score,"
    "mean_scaled_score,fm_loss,critic_loss,value_loss,actor_loss";

}  // namespace

EvalResult evaluate_policy(const env::Environment& env, const rl::LearnerState& learner,
                           int episodes, std::uint64_t eval_seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  EvalResult r;
  const Counters before = counters();
  Rng unused(0);
  {
    ScopedTimer t(r.timings, Bucket::kEval);
    for (int e = 0; e < episodes; ++e) {
      Eigen::VectorXd s = env.reset(evaluation_episode_seed(eval_seed, e));
      double ret = 0;
      for (int t = 0; t < env.episode_length(); ++t) {
        const Eigen::VectorXd a = rl::select_actions(learner, observe(env, s), 0.0, unused);
        const auto out = env.step(s, a, t);
        ret += out.reward;
        s = out.next_state;
        if (out.done) break;
      }
      r.returns.push_back(ret);
    }
  }
  const double n = static_cast<double>(r.returns.size());
  r.mean = std::accumulate(r.returns.begin(), r.returns.end(), 0.0) / n;
  double v = 0;
  for (double x : r.returns) v += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(v / n);
  r.counters = diff(counters(), before);
  return r;
}

void write_episode_trace(std::ostream& os, const env::Environment& env,
                         const rl::LearnerState& learner, std::uint64_t episode_seed) {
  os << "step,reward";
  for (int k = 0; k < env.state_dim(); ++k) os << ",s" << k;
  for (int k = 0; k < env.joint_action_dim(); ++k) os << ",a" << k;
  os << '\n';
  Rng unused(0);
  Eigen::VectorXd s = env.reset(episode_seed);
  for (int t = 0; t < env.episode_length(); ++t) {
    const Eigen::VectorXd a = rl::select_actions(learner, observe(env, s), 0.0, unused);
    const auto out = env.step(s, a, t);
    os << t << ',' << fmt(out.reward);
    for (Eigen::Index k = 0; k < s.size(); ++k) os << ',' << fmt(s(k));
    for (Eigen::Index k = 0; k < a.size(); ++k) os << ',' << fmt(a(k));
    os << '\n';
    s = out.next_state;
    if (out.done) break;
  }
}

double final_return(const std::vector<LearningPoint>& curve, int last) {
  if (curve.empty()) return 0.0;
  const std::size_t n = std::min<std::size_t>(curve.size(), static_cast<std::size_t>(last));
  double s = 0;
  for (std::size_t i = curve.size() - n; i < curve.size(); ++i) s += curve[i].mean;
  return s / static_cast<double>(n);
}

double best_return(const std::vector<LearningPoint>& curve) {
  double b = -HUGE_VAL;
  for (const auto& p : curve) b = std::max(b, p.mean);
  return curve.empty() ? 0.0 : b;
}

double normalized_auc(const std::vector<LearningPoint>& curve) {
  if (curve.empty()) return 0.0;
  if (curve.size() == 1) return curve[0].mean;
  double area = 0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    area += 0.5 * (curve[i].mean + curve[i - 1].mean) * static_cast<double>(curve[i].step - curve[i - 1].step);
  return area / static_cast<double>(curve.back().step - curve.front().step);
}

TrainSummary train(const RunConfig& cfg, const fs::path& out_dir, const TrainOptions& opt) {
  cfg.validate();
  const auto wall0 = std::chrono::steady_clock::now();
  TrainSummary sum;
  Timings& tm = sum.timings;
  const Counters counters0 = counters();
  fs::create_directories(out_dir);
  {
    auto f = open_out(out_dir / "config.txt");
    f << cfg.to_text();
    check_stream(f, out_dir / "config.txt");
  }
  auto curve_file = open_out(out_dir / "learning_curve.csv");
  curve_file << "step,mean_return,std_return\n";
  auto diag_file = open_out(out_dir / "diagnostics.csv");
  diag_file << kDiagHeader << '\n';

  const auto env_ptr = make_environment(cfg);
  const env::Environment& env = *env_ptr;
  const int N = env.num_agents();
  const int L = env.episode_length();
  RngStreams streams = derive_streams(cfg.seed);
  const std::uint64_t eval_seed = stream_seed(cfg.seed, StreamKey::kEval);
  rl::LearnerState learner = rl::make_learner(env, learner_config(cfg), streams.init);
  std::optional<model::ForwardModel> fm;
  if (cfg.uses_effect()) fm = model::make_forward_model(env, cfg.fm_hidden, streams.init, cfg.fm_lr, cfg.grad_clip);
  rl::ReplayBuffer replay(cfg.buffer_size, env.state_dim(), env.joint_action_dim());
  effect::RunningStats feature_stats(env.feature_dim()), score_stats(1), adv_stats(1);

  effect::EffectParams ep;
  ep.K = cfg.K;
  ep.horizon = cfg.effective_horizon();
  const auto w = cfg.effective_weights();
  ep.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  ep.c_max = cfg.c_max;
  gate::GateConfig gc;
  gc.lambda_int = cfg.lambda_int;
  gc.tau = cfg.gate_tau;
  gc.gamma = cfg.gamma;
  gc.enabled = cfg.method != Method::kMagicNoGate;
  gc.validate();

  // Latest summed-over-agents r_int of each global transition.
  std::vector<float> rint(static_cast<std::size_t>(cfg.total_env_steps), 0.0f);
  std::vector<std::int64_t> slot_global(static_cast<std::size_t>(cfg.buffer_size), -1);
  std::int64_t fm_cursor = 0;
  double fm_loss = 0;

  tm[Bucket::kOther] += std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  Eigen::VectorXd s;
  int t_ep = 0;
  {
    ScopedTimer t(tm, Bucket::kEnv);
    s = env.reset(training_episode_seed(streams.env_reset));
  }
  for (std::int64_t step = 0; step < cfg.total_env_steps; ++step) {
    {
      ScopedTimer t(tm, Bucket::kEnv);
      const Eigen::VectorXd a =
          rl::select_actions(learner, observe(env, s), exploration_scale(cfg, step), streams.exploration);
      const auto out = env.step(s, a, t_ep);
      slot_global[static_cast<std::size_t>(replay.cursor())] = step;
      // Episodes end only by the time limit, which is not an absorbing state.
      replay.add(s, a, out.reward, out.next_state, false);
      s = out.next_state;
      ++t_ep;
      if (out.done) {
        s = env.reset(training_episode_seed(streams.env_reset));
        t_ep = 0;
      }
    }

    const bool ready = replay.size() >= std::max<std::int64_t>(cfg.warmup, cfg.batch_size);
    if (ready && (step + 1) % cfg.update_every == 0) {
      if (fm) {
        ScopedTimer t(tm, Bucket::kForwardModel);
        const std::int64_t total = replay.total_added();
        const std::int64_t first = std::max(fm_cursor, total - replay.size());
        const std::int64_t count = total - first;
        fm_loss = train_forward_model(*fm, replay, env, first, count, cfg.fm_epochs, cfg.fm_batch, streams.model);
        fm_cursor = total;
      }
      for (int u = 0; u < cfg.updates_per_iteration; ++u) {
        rl::Batch batch;
        {
          ScopedTimer t(tm, Bucket::kOther);
          batch = replay.sample(cfg.batch_size, streams.replay, env);
        }
        const Eigen::Index B = batch.size();
        Eigen::MatrixXd shaped = batch.reward_ext.replicate(1, N);
        gate::GateSummary gsum;
        double mean_raw = 0, mean_scaled = 0;
        if (fm) {
          model::LearnedDynamics dyn(*fm);
          const auto policy = model::actor_policy(learner, env);
          effect::EffectBatch eb;
          {
            ScopedTimer t(tm, Bucket::kEffect);
            eb = effect::compute_effect_scores(batch.states, batch.joint_actions, env, dyn, policy,
                                               feature_stats, score_stats, ep, streams.counterfactual);
          }
          gate::GateBatch g;
          {
            ScopedTimer t(tm, Bucket::kGate);
            const Eigen::VectorXd vs = rl::ext_values(learner, batch.states);
            const Eigen::VectorXd vn = rl::ext_values(learner, batch.next_states);
            g = gate::apply_gate(batch.reward_ext, vs, vn, batch.done, eb.scaled, adv_stats, gc);
            gsum = gate::summarize(g);
            batch.set_intrinsic(g.r_int);
            shaped += batch.intrinsic();
            // Stats are committed only after every read of this batch.
            feature_stats.commit(effect::pooled_features(env, batch.states));
            score_stats.commit(Eigen::Map<const Eigen::RowVectorXd>(eb.raw.data(), eb.raw.size()));
            adv_stats.commit(g.advantage.transpose());
          }
          mean_raw = eb.raw.mean();
          mean_scaled = eb.scaled.mean();
          ScopedTimer t(tm, Bucket::kOther);
          const Eigen::VectorXd per_t = g.r_int.rowwise().sum();
          sum.max_step_intrinsic = std::max(sum.max_step_intrinsic, per_t.maxCoeff());
          for (Eigen::Index b = 0; b < B; ++b) {
            const std::int64_t gidx = slot_global[static_cast<std::size_t>(batch.indices[static_cast<std::size_t>(b)])];
            rint[static_cast<std::size_t>(gidx)] = static_cast<float>(per_t(b));
          }
        }
        double critic_loss = 0, value_loss = 0, actor_loss = 0;
        {
          ScopedTimer t(tm, Bucket::kBackbone);
          critic_loss = rl::critic_update(batch, shaped, learner);
          if (cfg.uses_effect()) {
            const std::int64_t reads = batch.intrinsic_reads();
            value_loss = rl::ext_value_update(batch, learner);
            counters().value_intrinsic_reads += batch.intrinsic_reads() - reads;
          }
          actor_loss = rl::actor_update(batch, learner);
          rl::polyak_update(learner, cfg.polyak);
        }
        ++sum.updates;
        if (sum.updates % cfg.diag_every == 0) {
          ScopedTimer t(tm, Bucket::kOther);
          diag_file << step + 1 << ',' << sum.updates << ',' << fmt(gsum.mean_kappa) << ','
                    << fmt(gsum.frac_low) << ',' << fmt(gsum.frac_high) << ',' << fmt(gsum.mean_r_int)
                    << ',' << fmt(mean_raw) << ',' << fmt(mean_scaled) << ',' << fmt(fm_loss) << ','
                    << fmt(critic_loss) << ',' << fmt(value_loss) << ',' << fmt(actor_loss) << '\n';
          check_stream(diag_file, out_dir / "diagnostics.csv");
        }
      }
    }

    if ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.total_env_steps) {
      const auto ev = evaluate_policy(env, learner, cfg.eval_episodes, eval_seed);
      tm[Bucket::kEval] += ev.timings[Bucket::kEval];
      ScopedTimer t(tm, Bucket::kOther);
      sum.curve.push_back({step + 1, ev.mean, ev.std});
      curve_file << step + 1 << ',' << fmt(ev.mean) << ',' << fmt(ev.std) << '\n';
      curve_file.flush();
      check_stream(curve_file, out_dir / "learning_curve.csv");
      if (opt.log)
        *opt.log << to_string(cfg.method) << " seed " << cfg.seed << " step " << step + 1 << " return "
                 << fmt(ev.mean) << '\n';
    }
  }

  {
    ScopedTimer t(tm, Bucket::kOther);
    const std::int64_t episodes = cfg.total_env_steps / L;
    for (std::int64_t e = 0; e < episodes; ++e) {
      double ret = 0, disc = 1;
      for (int k = 0; k < L; ++k, disc *= cfg.gamma) ret += disc * rint[static_cast<std::size_t>(e * L + k)];
      sum.max_intrinsic_return = std::max(sum.max_intrinsic_return, ret);
    }
    sum.intrinsic_bound = gate::intrinsic_return_bound(N, cfg.lambda_int, cfg.c_max, cfg.gamma);
    if (opt.write_checkpoint) {
      Checkpoint ck{cfg, cfg.total_env_steps, learner, fm, streams, feature_stats, score_stats, adv_stats};
      save_checkpoint(out_dir / "checkpoint", ck);
    }
  }
  sum.final_return = final_return(sum.curve);
  sum.best_return = best_return(sum.curve);
  sum.auc = normalized_auc(sum.curve);
  sum.counters = diff(counters(), counters0);
  sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  const double training = sum.wall_seconds - tm[Bucket::kEval];
  sum.effect_overhead =
      training > 0 ? (tm[Bucket::kForwardModel] + tm[Bucket::kEffect] + tm[Bucket::kGate]) / training : 0.0;
  write_metrics(out_dir / "metrics.json", cfg, sum);
  return sum;
}

void write_metrics(const fs::path& path, const RunConfig& cfg, const TrainSummary& s) {
  nlohmann::ordered_json j;
  j["method"] = to_string(cfg.method);
  j["task"] = cfg.task;
  j["seed"] = cfg.seed;
  j["total_env_steps"] = cfg.total_env_steps;
  j["final_return"] = s.final_return;
  j["best_return"] = s.best_return;
  j["auc"] = s.auc;
  j["eval_points"] = s.curve.size();
  j["updates"] = s.updates;
  j["wall_seconds"] = s.wall_seconds;
  for (int b = 0; b < static_cast<int>(Bucket::kCount); ++b)
    j[std::string("seconds_") + to_string(static_cast<Bucket>(b))] = s.timings.seconds[b];
  j["seconds_bucket_total"] = s.timings.total();
  j["effect_overhead"] = s.effect_overhead;
  j["fm_predict_columns"] = s.counters.fm_predict_columns;
  j["fm_train_steps"] = s.counters.fm_train_steps;
  j["branch_sets"] = s.counters.branch_sets;
  j["effect_batches"] = s.counters.effect_batches;
  j["gate_evaluations"] = s.counters.gate_evaluations;
  j["value_updates"] = s.counters.value_updates;
  j["value_intrinsic_reads"] = s.counters.value_intrinsic_reads;
  j["max_discounted_intrinsic_return"] = s.max_intrinsic_return;
  j["intrinsic_return_bound"] = s.intrinsic_bound;
  j["max_step_intrinsic_reward"] = s.max_step_intrinsic;
  std::ofstream f(path);
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

namespace {

void save_net(const nn::Params& p, const fs::path& path) { nn::save_snapshot(p, path); }

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError("checkpoint: missing " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + p.string());
}

void load_net(nn::Params& into, const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("checkpoint: missing " + path.string());
  nn::Params p = nn::load_snapshot(path);
  if (p.layers.size() != into.layers.size()) throw ConfigError("checkpoint: incompatible " + path.string());
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    if (p.layers[l].weight.rows() != into.layers[l].weight.rows() ||
        p.layers[l].weight.cols() != into.layers[l].weight.cols())
      throw ConfigError("checkpoint: incompatible " + path.string());
  into = std::move(p);
}

}  // namespace

void save_checkpoint(const fs::path& dir, const Checkpoint& ck) {
  fs::create_directories(dir);
  write_file(dir / "config.txt", ck.config.to_text());
  for (int i = 0; i < ck.learner.num_agents(); ++i) {
    const auto& a = ck.learner.agents[static_cast<std::size_t>(i)];
    const std::string k = std::to_string(i);
    save_net(a.actor, dir / ("actor_" + k + ".bin"));
    save_net(a.actor_target, dir / ("actor_target_" + k + ".bin"));
    save_net(a.critic, dir / ("critic_" + k + ".bin"));
    save_net(a.critic_target, dir / ("critic_target_" + k + ".bin"));
  }
  save_net(ck.learner.value, dir / "value.bin");
  save_net(ck.learner.value_target, dir / "value_target.bin");
  if (ck.fm) save_net(ck.fm->net, dir / "fm.bin");
  write_file(dir / "streams.txt", ck.streams.serialize());
  write_file(dir / "feature_stats.txt", ck.feature_stats.serialize());
  write_file(dir / "score_stats.txt", ck.score_stats.serialize());
  write_file(dir / "adv_stats.txt", ck.adv_stats.serialize());
  std::ostringstream m;
  m << "format=1\nstep=" << ck.step << "\nmethod=" << to_string(ck.config.method)
    << "\nagents=" << ck.learner.num_agents() << "\nforward_model=" << (ck.fm ? 1 : 0) << '\n';
  write_file(dir / "manifest.txt", m.str());
}

Checkpoint load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("checkpoint: not a directory: " + dir.string());
  Checkpoint ck;
  ck.config = apply_text(RunConfig{}, read_file(dir / "config.txt"));
  ck.config.validate();
  const auto manifest = read_file(dir / "manifest.txt");
  std::istringstream is(manifest);
  std::string line;
  bool has_fm = false;
  int agents = -1;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "format" && v != "1") throw ConfigError("checkpoint: unsupported format " + v);
    if (k == "step") ck.step = std::stoll(v);
    if (k == "forward_model") has_fm = v == "1";
    if (k == "agents") agents = std::stoi(v);
  }
  const auto env = make_environment(ck.config);
  if (agents != env->num_agents()) throw ConfigError("checkpoint: agent count does not match config");
  Rng scratch(0);
  ck.learner = rl::make_learner(*env, learner_config(ck.config), scratch);
  for (int i = 0; i < agents; ++i) {
    auto& a = ck.learner.agents[static_cast<std::size_t>(i)];
    const std::string k = std::to_string(i);
    load_net(a.actor, dir / ("actor_" + k + ".bin"));
    load_net(a.actor_target, dir / ("actor_target_" + k + ".bin"));
    load_net(a.critic, dir / ("critic_" + k + ".bin"));
    load_net(a.critic_target, dir / ("critic_target_" + k + ".bin"));
  }
  load_net(ck.learner.value, dir / "value.bin");
  load_net(ck.learner.value_target, dir / "value_target.bin");
  if (has_fm) {
    ck.fm = model::make_forward_model(*env, ck.config.fm_hidden, scratch, ck.config.fm_lr, ck.config.grad_clip);
    load_net(ck.fm->net, dir / "fm.bin");
  }
  try {
    ck.streams = RngStreams::deserialize(read_file(dir / "streams.txt"));
    ck.feature_stats = effect::RunningStats::deserialize(read_file(dir / "feature_stats.txt"));
    ck.score_stats = effect::RunningStats::deserialize(read_file(dir / "score_stats.txt"));
    ck.adv_stats = effect::RunningStats::deserialize(read_file(dir / "adv_stats.txt"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
  if (ck.feature_stats.dim() != env->feature_dim()) throw ConfigError("checkpoint: feature stats dimension mismatch");
  return ck;
}

EvalResult evaluate_checkpoint(const fs::path& dir, int episodes, std::optional<std::uint64_t> eval_seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  const Checkpoint ck = load_checkpoint(dir);
  const auto env = make_environment(ck.config);
  return evaluate_policy(*env, ck.learner, episodes,
                         eval_seed.value_or(stream_seed(ck.config.seed, StreamKey::kEval)));
}

std::string sweep_csv_row(const SweepRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  std::ostringstream os;
  os << r.run_id << ',' << r.seed << ',' << r.task << ',' << r.method << ',' << r.H << ',' << r.K << ','
     << fmt(r.lambda_int) << ',' << fmt(r.corruption) << ',';
  if (r.error.empty())
    os << opt(r.in_mse) << ',' << opt(r.int_mse) << ',' << opt(r.sep_auc) << ',' << fmt(r.final_return) << ','
       << fmt(r.auc_return) << ',' << fmt(r.wall_seconds);
  else
    os << ",,,,,";
  return os.str();
}

namespace {

struct SweepCell {
  RunConfig config;
  double corruption = 0;
  int contexts = 500;
};

double parse_sweep_number(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !std::isfinite(x)) throw ConfigError("sweep: bad value for " + key + ": " + v);
  return x;
}

}  // namespace

std::vector<SweepRow> run_sweep(const std::string& grid_text, const fs::path& out_dir, std::ostream* log) {
  std::vector<SweepCell> cells;
  for (const auto& point : expand_grid(grid_text)) {
    SweepCell cell;
    if (const auto it = point.find("preset"); it != point.end()) cell.config = preset(it->second);
    if (const auto it = point.find("config"); it != point.end()) cell.config = load_config(it->second, cell.config);
    for (const auto& [k, v] : point) {
      if (k == "preset" || k == "config") continue;
      if (k == "corruption") {
        cell.corruption = parse_sweep_number(k, v);
        if (cell.corruption < 0) throw ConfigError("sweep: corruption must be >= 0");
      } else if (k == "contexts") {
        const double c = parse_sweep_number(k, v);
        if (c < 1 || c != std::floor(c)) throw ConfigError("sweep: contexts must be a positive integer");
        cell.contexts = static_cast<int>(c);
      } else {
        cell.config.set(k, v);
      }
    }
    cell.config.validate();
    cells.push_back(cell);
  }

  fs::create_directories(out_dir);
  auto csv = open_out(out_dir / "sweep.csv");
  csv << kSweepHeader << '\n';
  std::ofstream errors;
  std::map<std::string, std::string> trained;  // config text -> run id
  std::vector<SweepRow> rows;
  for (const auto& cell : cells) {
    const RunConfig& cfg = cell.config;
    SweepRow r;
    r.seed = cfg.seed;
    r.task = cfg.task;
    r.method = to_string(cfg.method);
    r.H = cfg.effective_horizon();
    r.K = cfg.K;
    r.lambda_int = cfg.lambda_int;
    r.corruption = cell.corruption;
    const std::string key = cfg.to_text();
    auto it = trained.find(key);
    const bool fresh = it == trained.end();
    if (fresh) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%03zu", trained.size());
      it = trained.emplace(key, name).first;
    }
    r.run_id = it->second;
    const fs::path dir = out_dir / r.run_id;
    try {
      if (fresh) {
        fs::remove_all(dir);
        train(cfg, dir, TrainOptions{log, true});
      }
      const auto metrics = nlohmann::json::parse(std::ifstream(dir / "metrics.json"));
      r.final_return = metrics.at("final_return").get<double>();
      r.auc_return = metrics.at("auc").get<double>();
      r.wall_seconds = metrics.at("wall_seconds").get<double>();
      const auto ck = load_checkpoint(dir / "checkpoint");
      if (ck.fm) {
        const auto env = make_environment(cfg);
        model::LearnedDynamics dyn(*ck.fm);
        diag::DiagnoseParams p;
        p.horizon = r.H;
        p.K = r.K;
        p.contexts = cell.contexts;
        p.corruption = cell.corruption;
        p.seed = stream_seed(cfg.seed, StreamKey::kCorruption);
        const auto rep = diag::diagnose(dyn, *env, model::actor_policy(ck.learner, *env), ck.feature_stats, p);
        r.in_mse = rep.in_mse;
        r.int_mse = rep.int_mse;
        r.sep_auc = rep.sep_auc;
      }
    } catch (const std::exception& e) {
      r.error = e.what();
      if (!errors.is_open()) errors = open_out(out_dir / "sweep_errors.txt");
      errors << r.run_id << " corruption=" << fmt(r.corruption) << ": " << r.error << '\n';
      errors.flush();
      if (log) *log << "sweep cell " << r.run_id << " failed: " << r.error << '\n';
    }
    csv << sweep_csv_row(r) << '\n';
    csv.flush();
    check_stream(csv, out_dir / "sweep.csv");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace gatefx::run
