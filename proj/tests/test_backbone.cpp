#include "doctest.h"

#include <cmath>
#include <random>

#include "gatefx/env/particle_env.hpp"
#include "gatefx/rl/maddpg.hpp"
#include "gatefx/rl/replay.hpp"
#include "toy_env.hpp"

using namespace gatefx;
using gatefx::testing::Bandit;

namespace {

rl::LearnerConfig small_config() {
  rl::LearnerConfig c;
  c.actor_hidden = {16};
  c.critic_hidden = {32, 32};
  c.value_hidden = {16};
  return c;
}

rl::Batch bandit_batch(const Bandit& env, int n, std::mt19937_64& rng, double done = 1.0) {
  rl::ReplayBuffer buf(n, env.state_dim(), env.joint_action_dim());
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::VectorXd s = env.reset(0);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd a(2);
    a << u(rng), u(rng);
    const auto o = env.step(s, a, 0);
    buf.add(s, a, o.reward, o.next_state, done > 0.5);
  }
  return buf.gather_range(0, n, env);
}

void zero(rl::Params& p) {
  for (auto& l : p.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

}  // namespace

TEST_CASE("select_actions: zero actors without noise give zero actions") {
  Bandit env;
  std::mt19937_64 init(1);
  auto learner = rl::make_learner(env, small_config(), init);
  for (auto& a : learner.agents) zero(a.actor);
  std::mt19937_64 rng(5);
  const auto before = rng;
  const auto a = rl::select_actions(learner, {Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)}, 0.0, rng);
  CHECK(a.isZero());
  CHECK(rng == before);
}

TEST_CASE("select_actions: noise is clamped and reproducible") {
  Bandit env;
  std::mt19937_64 init(1);
  auto learner = rl::make_learner(env, small_config(), init);
  for (auto& a : learner.agents) {
    zero(a.actor);
    a.actor.layers.back().bias(0) = std::atanh(0.9);
  }
  const std::vector<Eigen::VectorXd> obs{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
  std::mt19937_64 rng(12);
  auto replay = rng;
  const auto a1 = rl::select_actions(learner, obs, 0.5, rng);
  const auto a2 = rl::select_actions(learner, obs, 0.5, replay);
  CHECK(a1 == a2);
  std::mt19937_64 probe(12);
  std::normal_distribution<double> g(0.0, 0.5);
  for (int i = 0; i < 2; ++i) {
    const double expect = std::clamp(0.9 + g(probe), -1.0, 1.0);
    CHECK(a1(i) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(a1.cwiseAbs().maxCoeff() <= 1.0);
  // Large noise saturates at the bounds.
  std::mt19937_64 big(3);
  for (int t = 0; t < 200; ++t) CHECK(rl::select_actions(learner, obs, 10.0, big).cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("td targets") {
  Eigen::VectorXd r(3), done(3), next(3);
  r << 1.0, 1.0, 1.0;
  done << 0.0, 1.0, 0.0;
  next << 2.0, 2.0, 7.0;
  const auto y = rl::td_targets(r, done, next, 0.95);
  CHECK(y(0) == doctest::Approx(2.9).epsilon(1e-15));
  CHECK(y(1) == 1.0);
  CHECK(y(2) == doctest::Approx(1.0 + 0.95 * 7.0));
  CHECK(rl::td_targets(r, Eigen::VectorXd::Zero(3), next, 0.0) == r);
  CHECK_THROWS_AS(rl::td_targets(r, done.head(2), next, 0.95), nn::ShapeError);
}

TEST_CASE("make_learner shapes and validation") {
  env::EnvConfig c;
  c.num_agents = 3;
  env::ParticleEnv env(c);
  std::mt19937_64 init(0);
  auto learner = rl::make_learner(env, rl::LearnerConfig{}, init);
  CHECK(learner.num_agents() == 3);
  const auto& a = learner.agents[0];
  CHECK(a.actor.in_dim() == env.obs_dim());
  CHECK(a.actor.out_dim() == 2);
  CHECK(a.actor.layers.size() == 3);
  CHECK(a.actor.layers[0].weight.rows() == 128);
  CHECK(a.critic.in_dim() == env.state_dim() + 6);
  CHECK(a.critic.layers[1].weight.rows() == 256);
  CHECK(learner.value.in_dim() == env.state_dim());
  CHECK(a.actor_target.layers[0].weight == a.actor.layers[0].weight);
  auto bad = rl::LearnerConfig{};
  bad.gamma = 1.0;
  CHECK_THROWS(rl::make_learner(env, bad, init));
  bad = rl::LearnerConfig{};
  bad.tau = 0.0;
  CHECK_THROWS(rl::make_learner(env, bad, init));
}

TEST_CASE("critic_update rejects misaligned shaped rewards") {
  Bandit env;
  std::mt19937_64 rng(2);
  auto learner = rl::make_learner(env, small_config(), rng);
  auto batch = bandit_batch(env, 8, rng);
  CHECK_THROWS_AS(rl::critic_update(batch, Eigen::MatrixXd::Zero(8, 3), learner), nn::ShapeError);
  CHECK_THROWS_AS(rl::critic_update(batch, Eigen::MatrixXd::Zero(7, 2), learner), nn::ShapeError);
}

TEST_CASE("critics regress toward their own agent's shaped reward") {
  Bandit env;
  std::mt19937_64 rng(3);
  auto learner = rl::make_learner(env, small_config(), rng);
  auto batch = bandit_batch(env, 64, rng);
  Eigen::MatrixXd shaped(64, 2);
  shaped.col(0).setConstant(1.0);
  shaped.col(1).setConstant(-1.0);
  double loss = 0;
  for (int it = 0; it < 1500; ++it) loss = rl::critic_update(batch, shaped, learner);
  CHECK(loss < 1e-3);
  const auto in = rl::critic_input(batch.states, batch.joint_actions);
  CHECK(nn::forward_batch(learner.agents[0].critic, in).mean() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(nn::forward_batch(learner.agents[1].critic, in).mean() == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("actor gradient vanishes when the critic ignores the action") {
  Bandit env;
  std::mt19937_64 rng(4);
  auto learner = rl::make_learner(env, small_config(), rng);
  auto& critic = learner.agents[0].critic;
  critic.layers[0].weight.rightCols(2).setZero();
  auto batch = bandit_batch(env, 16, rng);
  const auto g = rl::actor_gradient(batch, learner, 0);
  CHECK(nn::global_norm(g) == 0.0);
}

TEST_CASE("actor gradient matches finite differences and ignores other actors") {
  env::EnvConfig c;
  c.num_agents = 3;
  env::ParticleEnv env(c);
  std::mt19937_64 rng(5);
  auto cfg = small_config();
  cfg.actor_hidden = {6};
  cfg.critic_hidden = {8};
  cfg.value_hidden = {4};
  auto learner = rl::make_learner(env, cfg, rng);
  for (auto& a : learner.agents)
    for (auto& l : a.actor.layers) l.activation = l.activation == nn::Activation::kRelu ? nn::Activation::kTanh : l.activation;
  for (auto& a : learner.agents)
    for (auto& l : a.critic.layers) l.activation = l.activation == nn::Activation::kRelu ? nn::Activation::kTanh : l.activation;
  rl::ReplayBuffer buf(32, env.state_dim(), env.joint_action_dim());
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 5; ++k) {
    auto s = env.reset(k);
    Eigen::VectorXd a(6);
    for (int j = 0; j < 6; ++j) a(j) = u(rng);
    auto o = env.step(s, a, 0);
    buf.add(s, a, o.reward, o.next_state, false);
  }
  const auto batch = buf.gather_range(0, 5, env);
  const int agent = 1;
  const auto g = rl::actor_gradient(batch, learner, agent);
  auto loss_of = [&](const rl::LearnerState& l) {
    double v = 0;
    rl::actor_gradient(batch, l, agent, &v);
    return v;
  };
  const double h = 1e-6;
  int checked = 0;
  for (std::size_t li = 0; li < learner.agents[agent].actor.layers.size(); ++li) {
    auto& w = learner.agents[agent].actor.layers[li].weight;
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index cc = 0; cc < w.cols(); ++cc) {
        const double orig = w(r, cc);
        w(r, cc) = orig + h;
        const double fp = loss_of(learner);
        w(r, cc) = orig - h;
        const double fm = loss_of(learner);
        w(r, cc) = orig;
        const double num = (fp - fm) / (2 * h);
        CHECK(std::abs(num - g.weight[li](r, cc)) <= 1e-6 + 1e-4 * std::abs(num));
        ++checked;
      }
  }
  CHECK(checked > 50);
  // Perturbing a different agent's actor leaves this agent's objective alone.
  const double base = loss_of(learner);
  learner.agents[0].actor.layers[0].weight.array() += 0.5;
  learner.agents[2].actor.layers[0].bias.array() -= 0.5;
  CHECK(loss_of(learner) == base);
}

TEST_CASE("actor climbs a quadratic critic toward its peak") {
  Bandit env(0.3);
  std::mt19937_64 rng(6);
  auto cfg = small_config();
  cfg.lr = 3e-3;
  auto learner = rl::make_learner(env, cfg, rng);
  auto batch = bandit_batch(env, 256, rng);
  Eigen::MatrixXd shaped(256, 2);
  shaped.col(0) = batch.reward_ext;
  shaped.col(1) = batch.reward_ext;
  for (int it = 0; it < 2000; ++it) rl::critic_update(batch, shaped, learner);
  const Eigen::VectorXd obs = Eigen::VectorXd::Ones(1);
  const double start = nn::forward(learner.agents[0].actor, obs)(0);
  double prev_gap = std::abs(start - 0.3);
  for (int round = 0; round < 4; ++round) {
    for (int it = 0; it < 100; ++it) rl::actor_update(batch, learner);
    const double gap = std::abs(nn::forward(learner.agents[0].actor, obs)(0) - 0.3);
    CHECK(gap <= prev_gap + 1e-3);
    prev_gap = gap;
  }
  CHECK(prev_gap < 0.05);
}

TEST_CASE("extrinsic value converges to the geometric sum on a one-state chain") {
  Bandit env;
  std::mt19937_64 rng(7);
  auto cfg = small_config();
  cfg.lr = 1e-2;
  cfg.value_hidden = {8};
  auto learner = rl::make_learner(env, cfg, rng);
  rl::ReplayBuffer buf(16, 1, 2);
  for (int k = 0; k < 16; ++k) buf.add(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(2), 1.0, Eigen::VectorXd::Ones(1), false);
  const auto batch = buf.gather_range(0, 16, env);
  const double gamma = learner.gamma;
  // Fitted value iteration: refit, then copy into the target.
  for (int sweep = 0; sweep < 400; ++sweep) {
    for (int it = 0; it < 50; ++it) rl::ext_value_update(batch, learner);
    nn::polyak_update(learner.value_target, learner.value, 1.0);
  }
  const double v = rl::ext_values(learner, batch.states)(0);
  const double truncated = (1 - std::pow(gamma, 400)) / (1 - gamma);
  CHECK(v == doctest::Approx(truncated).epsilon(0.01));
}

TEST_CASE("extrinsic value target on terminal transitions is the reward") {
  Bandit env;
  std::mt19937_64 rng(8);
  auto cfg = small_config();
  cfg.lr = 1e-2;
  auto learner = rl::make_learner(env, cfg, rng);
  rl::ReplayBuffer buf(4, 1, 2);
  for (int k = 0; k < 4; ++k) buf.add(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(2), 2.5, Eigen::VectorXd::Ones(1), true);
  const auto batch = buf.gather_range(0, 4, env);
  for (int it = 0; it < 1500; ++it) rl::ext_value_update(batch, learner);
  CHECK(rl::ext_values(learner, batch.states)(0) == doctest::Approx(2.5).epsilon(0.01));
}

TEST_CASE("extrinsic value update never reads intrinsic rewards") {
  Bandit env;
  std::mt19937_64 rng(9);
  auto learner = rl::make_learner(env, small_config(), rng);
  auto batch = bandit_batch(env, 32, rng, 0.0);
  batch.set_intrinsic(Eigen::MatrixXd::Constant(32, 2, 1e6));
  const auto reads = batch.intrinsic_reads();
  auto twin = learner;
  rl::ext_value_update(batch, learner);
  CHECK(batch.intrinsic_reads() == reads);
  // Same result as a batch without intrinsic data attached.
  rl::Batch stripped;
  stripped.states = batch.states;
  stripped.next_states = batch.next_states;
  stripped.reward_ext = batch.reward_ext;
  stripped.done = batch.done;
  stripped.joint_actions = batch.joint_actions;
  rl::ext_value_update(stripped, twin);
  CHECK(twin.value.layers[0].weight == learner.value.layers[0].weight);
}

TEST_CASE("polyak updates cover every network") {
  Bandit env;
  std::mt19937_64 rng(10);
  auto learner = rl::make_learner(env, small_config(), rng);
  for (auto& a : learner.agents) {
    zero(a.actor_target);
    zero(a.critic_target);
    for (auto& l : a.actor.layers) l.weight.setOnes();
  }
  zero(learner.value_target);
  rl::polyak_update(learner, 0.01);
  CHECK(learner.agents[1].actor_target.layers[0].weight(0, 0) == doctest::Approx(0.01));
  rl::polyak_update(learner, 1.0);
  for (const auto& a : learner.agents) {
    CHECK(a.actor_target.layers[0].weight == a.actor.layers[0].weight);
    CHECK(a.critic_target.layers.back().bias == a.critic.layers.back().bias);
  }
  CHECK(learner.value_target.layers[0].weight == learner.value.layers[0].weight);
}

TEST_CASE("replay samples uniformly over the filled region") {
  Bandit env;
  rl::ReplayBuffer buf(1000, 1, 2);
  for (int k = 0; k < 50; ++k) buf.add(Eigen::VectorXd::Constant(1, k), Eigen::VectorXd::Zero(2), 0, Eigen::VectorXd::Zero(1), false);
  std::mt19937_64 rng(11);
  const int draws = 100000;
  std::vector<int> hist(50, 0);
  for (auto i : buf.sample_indices(draws, rng)) {
    REQUIRE(i >= 0);
    REQUIRE(i < 50);
    ++hist[static_cast<std::size_t>(i)];
  }
  const double p = 1.0 / 50;
  const double mean = draws * p;
  const double sd = std::sqrt(draws * p * (1 - p));
  int outside = 0;
  for (int h : hist) outside += std::abs(h - mean) > 3 * sd;
  CHECK(outside <= 1);
}

TEST_CASE("replay ring wraps at capacity") {
  Bandit env;
  rl::ReplayBuffer buf(3, 1, 2);
  for (int k = 0; k < 5; ++k) buf.add(Eigen::VectorXd::Constant(1, k), Eigen::VectorXd::Zero(2), k, Eigen::VectorXd::Zero(1), false);
  CHECK(buf.size() == 3);
  CHECK(buf.total_added() == 5);
  CHECK(buf.cursor() == 2);
  const auto b = buf.gather({0, 1, 2}, env);
  CHECK(b.reward_ext(0) == 3);
  CHECK(b.reward_ext(1) == 4);
  CHECK(b.reward_ext(2) == 2);
  CHECK_THROWS(rl::ReplayBuffer(0, 1, 1));
  CHECK_THROWS(buf.gather({5}, env));
  rl::ReplayBuffer empty(3, 1, 2);
  std::mt19937_64 rng(0);
  CHECK_THROWS(empty.sample_indices(1, rng));
}
