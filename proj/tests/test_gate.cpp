#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "gatefx/gate/gate.hpp"

using namespace gatefx;
using effect::RunningStats;

TEST_CASE("extrinsic advantage") {
  CHECK(gate::extrinsic_advantage(0, 0, 0, 0.95, false) == 0.0);
  CHECK(gate::extrinsic_advantage(1.0, 2.5, 2.0, 0.95, false) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(gate::extrinsic_advantage(1.0, 2.5, 100.0, 0.95, true) == -1.5);
}

TEST_CASE("gate values") {
  RunningStats st(1);
  CHECK(gate::gate(0.0, st, 1.0) == 0.5);
  st.set(Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 0.5));
  CHECK(gate::gate(2.0, st, 1.0) == 0.5);
  const double a4 = 2.0 + 4.0 * (0.5 + 1e-5);
  CHECK(gate::gate_input(a4, st) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(gate::gate(a4, st, 1.0) == doctest::Approx(0.982).epsilon(5e-4));
  CHECK(gate::gate(a4, st, 2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  CHECK(gate::sigmoid(-800) >= 0.0);
  CHECK(gate::sigmoid(800) == 1.0);
  CHECK_THROWS(gate::gate(0.0, st, 0.0));
}

TEST_CASE("gate is bounded and monotone in the advantage") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 5.0);
  RunningStats st(1);
  st.set(Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Constant(1, 1.7));
  for (int t = 0; t < 1000; ++t) {
    double a = g(rng), b = g(rng);
    if (a > b) std::swap(a, b);
    const double ka = gate::gate(a, st, 1.0), kb = gate::gate(b, st, 1.0);
    CHECK(ka >= 0.0);
    CHECK(kb <= 1.0);
    CHECK(ka <= kb);
  }
}

TEST_CASE("intrinsic and total rewards") {
  CHECK(gate::intrinsic_reward(0.7, 0.0, 0.05) == 0.0);
  CHECK(gate::intrinsic_reward(1.0, 5.0, 0.05) == doctest::Approx(0.25));
  CHECK(gate::intrinsic_reward(0.5, 2.0, 0.05) == doctest::Approx(0.05));
  CHECK(gate::compose_total(-1.0, 0.1) == doctest::Approx(-0.9));
  CHECK(gate::intrinsic_return_bound(5, 0.05, 5.0, 0.95) == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("batch gate: shared kappa, agent-specific totals") {
  Eigen::VectorXd r(3), vs(3), vn(3), done(3);
  r << 1.0, 0.0, 2.0;
  vs << 0.5, 0.2, 1.0;
  vn << 0.4, 0.1, 3.0;
  done << 0.0, 0.0, 1.0;
  Eigen::MatrixXd c(3, 2);
  c << 1.0, 3.0, 0.0, 0.0, 5.0, 2.0;
  RunningStats st(1);
  gate::GateConfig cfg;
  const auto g = gate::apply_gate(r, vs, vn, done, c, st, cfg);
  for (int b = 0; b < 3; ++b) {
    CHECK(g.kappa(b) == gate::gate(g.advantage(b), st, 1.0));
    CHECK(g.r_total(b, 0) - g.r_total(b, 1) == doctest::Approx(0.05 * g.kappa(b) * (c(b, 0) - c(b, 1))));
    for (int i = 0; i < 2; ++i) CHECK(g.r_total(b, i) == r(b) + g.r_int(b, i));
  }
  CHECK(g.advantage(2) == 2.0 - 1.0);

  const auto zero = gate::apply_gate(r, vs, vn, done, Eigen::MatrixXd::Zero(3, 2), st, cfg);
  for (int i = 0; i < 2; ++i) CHECK(zero.r_total.col(i) == r);

  cfg.enabled = false;
  const auto open = gate::apply_gate(r, vs, vn, done, c, st, cfg);
  CHECK(open.kappa == Eigen::VectorXd::Ones(3));
  CHECK_THROWS(gate::apply_gate(r, vs.head(2), vn, done, c, st, cfg));
}

TEST_CASE("gating never increases the second moment of the intrinsic reward") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::normal_distribution<double> g(0.0, 2.0);
  RunningStats st(1);
  gate::GateConfig cfg;
  for (int t = 0; t < 1000; ++t) {
    const int B = 64;
    Eigen::VectorXd r(B), vs(B), vn(B);
    for (int b = 0; b < B; ++b) r(b) = g(rng), vs(b) = g(rng), vn(b) = g(rng);
    Eigen::MatrixXd c(B, 3);
    for (Eigen::Index k = 0; k < c.size(); ++k) c.data()[k] = u(rng);
    const auto out = gate::apply_gate(r, vs, vn, Eigen::VectorXd::Zero(B), c, st, cfg);
    const double gated = out.r_int.array().square().mean();
    const double ungated = (0.05 * c).array().square().mean();
    CHECK(gated <= ungated);
    CHECK(out.r_int.minCoeff() >= 0.0);
    CHECK(out.r_int.maxCoeff() <= 0.25);
    st.commit(out.advantage.transpose());
  }
}

TEST_CASE("low-gate transitions contribute little") {
  RunningStats st(1);
  st.set(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
  const double bound = 0.05 * gate::sigmoid(-4.0) * 5.0;
  for (double a = -20; a <= -4.0; a += 0.01) {
    const double k = gate::gate(a, st, 1.0);
    CHECK(gate::intrinsic_reward(k, 5.0, 0.05) <= bound + 1e-15);
  }
}

TEST_CASE("gate summary and csv") {
  gate::GateBatch g;
  g.kappa.resize(4);
  g.kappa << 0.05, 0.5, 0.95, 0.99;
  g.r_int = Eigen::MatrixXd::Constant(4, 2, 0.1);
  const auto s = gate::summarize(g);
  CHECK(s.mean_kappa == doctest::Approx(0.6225));
  CHECK(s.frac_low == 0.25);
  CHECK(s.frac_high == 0.5);
  CHECK(s.mean_r_int == doctest::Approx(0.1));
  std::ostringstream os;
  gate::write_gate_csv(os, 10, s, true);
  CHECK(os.str().rfind("step,mean_kappa,frac_kappa_lt_0.1,frac_kappa_gt_0.9,mean_r_int\n10,", 0) == 0);
}

TEST_CASE("gate config validation") {
  gate::GateConfig c;
  c.lambda_int = -0.1;
  CHECK_THROWS(c.validate());
  c = {};
  c.tau = 0;
  CHECK_THROWS(c.validate());
}
