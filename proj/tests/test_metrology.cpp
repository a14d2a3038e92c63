#include "oracles.hpp"
#include "rydberg/metrology.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rydberg;

namespace {

std::vector<double> angles(int n = 16) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(kPi * i / n);
  return t;
}

DenseOp projector(const StateVec& v) { return v * v.adjoint(); }

StateVec psi_plus() {
  StateVec v = StateVec::Zero(4);
  v(1) = v(2) = 1.0 / std::sqrt(2.0);
  return v;
}

DenseOp random_density(int d, std::mt19937& gen) {
  std::normal_distribution<double> g;
  DenseOp a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = cplx(g(gen), g(gen));
  DenseOp r = a * a.adjoint();
  return r / r.trace().real();
}

}  // namespace

TEST(Parity, IdealBellState) {
  const DenseOp rho = projector(psi_plus());
  const auto ps = parity_scan(rho, angles());
  EXPECT_NEAR(ps.contrast, 1.0, 1e-9);
  EXPECT_LT(ps.residual, 1e-10);
  for (double t : {0.1, 0.7, 1.3}) EXPECT_NEAR(parity_at(rho, t + kPi), parity_at(rho, t), 1e-12);
  // period pi, not pi/2
  EXPECT_GT(std::abs(parity_at(rho, 0.3 + kPi / 2) - parity_at(rho, 0.3)), 0.1);
}

TEST(Parity, ProductAndDephasedStates) {
  StateVec v = StateVec::Zero(4);
  v(1) = 1.0;
  EXPECT_NEAR(parity_scan(projector(v), angles()).contrast, 0.0, 1e-9);
  DenseOp deph = projector(psi_plus());
  deph(1, 2) *= 0.5;
  deph(2, 1) *= 0.5;
  EXPECT_NEAR(parity_scan(deph, angles()).contrast, 0.5, 1e-9);
  EXPECT_THROW(parity_scan(deph, {0.0, 1.0, 2.0}), Error);
  EXPECT_THROW(parity_scan(DenseOp::Identity(2, 2), angles()), Error);
}

TEST(Parity, BoundedForRandomStates) {
  std::mt19937 gen(4);
  for (int i = 0; i < 50; ++i) {
    const DenseOp rho = random_density(4, gen);
    for (double t : angles(9)) EXPECT_LE(std::abs(parity_at(rho, t)), 1.0 + 1e-12);
    const auto ps = parity_scan(rho, angles());
    // the two-frequency model is exact for any two-qubit state
    EXPECT_LT(ps.residual, 1e-10);
  }
}

TEST(Bell, EstimatorEqualsOverlapOnValidationFamily) {
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double p = u(gen);
    Eigen::Vector4d d(u(gen), u(gen), u(gen), u(gen));
    d /= d.sum();
    const DenseOp rho = p * projector(psi_plus()) + (1 - p) * DenseOp(d.cast<cplx>().asDiagonal());
    const double est = bell_fidelity_estimate(rho, angles());
    EXPECT_NEAR(est, bell_overlap(rho), 1e-9);
    EXPECT_LE(est, 1.0);
  }
}

TEST(Bell, FullDephasingGivesOneHalf) {
  DenseOp rho = DenseOp::Zero(4, 4);
  rho(1, 1) = rho(2, 2) = 0.5;
  EXPECT_NEAR(bell_fidelity_estimate(rho, angles()), 0.5, 1e-12);
  EXPECT_NEAR(bell_fidelity_estimate(0.5, 0.5, 0.0), 0.5, 0.0);
  EXPECT_NEAR(bell_fidelity_estimate(0.5, 0.5, 1.0), 1.0, 0.0);
}

TEST(Bell, EstimatorNeverExceedsOne) {
  std::mt19937 gen(10);
  for (int i = 0; i < 100; ++i) EXPECT_LE(bell_fidelity_estimate(random_density(4, gen), angles()), 1.0);
  DenseOp over = 0.6 * DenseOp::Identity(4, 4);
  EXPECT_THROW(bell_fidelity_estimate(over, angles()), Error);
}

TEST(TruthTable, PerfectUniformAndLossy) {
  const DenseOp cnot = ideal_gate("CNOT");
  const Eigen::MatrixXd perfect = cnot.cwiseAbs2();
  EXPECT_NEAR(truth_table_fidelity(perfect, cnot).fidelity, 1.0, 0.0);
  const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(4, 4, 0.25);
  EXPECT_NEAR(truth_table_fidelity(uniform, cnot).fidelity, 0.25, 1e-15);
  const Eigen::MatrixXd lossy = 0.8 * perfect;
  const auto r = truth_table_fidelity(lossy, cnot);
  EXPECT_NEAR(r.fidelity, 1.0, 1e-15);
  EXPECT_NEAR(r.survival, 0.8, 1e-15);
  Eigen::MatrixXd bad = perfect;
  bad(0, 0) = 1.5;
  EXPECT_THROW(truth_table_fidelity(bad, cnot), Error);
  EXPECT_THROW(truth_table_fidelity(Eigen::MatrixXd::Identity(3, 3), cnot), Error);
  bad(0, 0) = -0.1;
  EXPECT_THROW(truth_table_fidelity(bad, cnot), Error);
}

TEST(Ghz, ParityPeriodAndContrast) {
  const int n = 4;
  StateVec g = StateVec::Zero(16);
  g(static_cast<Eigen::Index>(alternating_pattern(n, 0))) = 1.0 / std::sqrt(2.0);
  g(static_cast<Eigen::Index>(alternating_pattern(n, 1))) = 1.0 / std::sqrt(2.0);
  const DenseOp rho = projector(g);
  for (double p : {0.1, 0.4, 1.2}) EXPECT_NEAR(ghz_parity(rho, p + kTwoPi / n), ghz_parity(rho, p), 1e-12);
  std::vector<double> phis;
  for (int i = 0; i < 12; ++i) phis.push_back(kTwoPi * i / 12);
  EXPECT_NEAR(ghz_contrast(rho, n, phis), 1.0, 1e-12);
  EXPECT_NEAR(ghz_fidelity_bound(rho), 1.0, 1e-12);
  EXPECT_NEAR(ghz_overlap(rho), 1.0, 1e-12);
  // product state has no N-fold component
  StateVec prod = StateVec::Zero(16);
  prod(static_cast<Eigen::Index>(alternating_pattern(n, 0))) = 1.0;
  EXPECT_NEAR(ghz_contrast(projector(prod), n, phis), 0.0, 1e-12);
}

TEST(Ghz, ContrastIsTwiceCoherence) {
  std::mt19937 gen(12);
  std::vector<double> phis;
  for (int i = 0; i < 16; ++i) phis.push_back(kTwoPi * i / 16);
  const auto a = static_cast<Eigen::Index>(alternating_pattern(4, 0));
  const auto b = static_cast<Eigen::Index>(alternating_pattern(4, 1));
  for (int i = 0; i < 20; ++i) {
    const DenseOp rho = random_density(16, gen);
    EXPECT_NEAR(ghz_contrast(rho, 4, phis), 2.0 * std::abs(rho(a, b)), 1e-10);
    EXPECT_GE(ghz_fidelity_bound(rho) + 1e-12, ghz_overlap(rho));
  }
}

TEST(Coherence, Conversions) {
  auto c = coherence_conversions(CoherenceInput::t2, 3.0, kTwoPi);
  EXPECT_NEAR(c.gamma, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(c.t_rabi, 6.0, 1e-15);
  EXPECT_NEAR(c.eps_pi, kPi / (2 * kTwoPi * 6.0), 1e-15);
  auto g = coherence_conversions(CoherenceInput::gamma, 0.5, kTwoPi);
  EXPECT_NEAR(g.t2, 4.0, 1e-15);
  auto r = coherence_conversions(CoherenceInput::t_rabi, 8.0, kTwoPi);
  EXPECT_NEAR(r.t2, 4.0, 1e-15);
  EXPECT_THROW(coherence_conversions(CoherenceInput::t2, 0.0, kTwoPi), Error);
  EXPECT_THROW(coherence_conversions(CoherenceInput::t2, 1.0, -1.0), Error);
}

TEST(Coherence, DecayFit) {
  std::vector<double> t, a;
  for (int i = 0; i < 10; ++i) {
    t.push_back(0.5 * i);
    a.push_back(0.8 * std::exp(-t.back() / 2.5));
  }
  EXPECT_NEAR(fit_decay_time(t, a), 2.5, 1e-10);
  EXPECT_THROW(fit_decay_time({0.0, 1.0}, {1.0, 2.0}), Error);
  EXPECT_THROW(fit_decay_time({0.0}, {1.0}), Error);
}

TEST(Depth, Examples) {
  EXPECT_EQ(dsquare_digital(0.99).dsquare, 10);
  EXPECT_EQ(dsquare_lifetime(0.05, 5.0).dsquare, 10);
  EXPECT_NEAR(dsquare_lifetime(0.05, 5.0).ngates, 50.0, 0.0);
  EXPECT_EQ(dsquare_lifetime(0.05, 100.0).dsquare, 44);
  EXPECT_NEAR(dsquare_lifetime(0.05, 100.0).ngates, 968.0, 0.0);
  const auto loss = dsquare_loss(1000, 0.05, 1e8);
  EXPECT_EQ(loss.dsquare, 1000);
  EXPECT_NEAR(loss.ngates, 5e5, 0.0);
  EXPECT_NEAR(dsquare_analog(kTwoPi * 1.0, 100.0).epsilon, kPi / (kTwoPi * 100.0), 1e-15);
}

TEST(Depth, ExactSquaresAndMonotonicity) {
  for (long k = 1; k <= 2000; k += 37) EXPECT_EQ(depth_from_epsilon(DepthSource::digital, 1.0 / (k * k)).dsquare, k);
  long prev = 1L << 40;
  for (double e = 1e-8; e < 1.0; e *= 1.3) {
    const auto d = depth_from_epsilon(DepthSource::digital, e);
    EXPECT_LE(d.dsquare, prev);
    prev = d.dsquare;
  }
  EXPECT_TRUE(dsquare_digital(1.0).unbounded);
  EXPECT_THROW(dsquare_digital(0.0), Error);
  EXPECT_THROW(dsquare_digital(1.2), Error);
  EXPECT_THROW(depth_from_epsilon(DepthSource::loss, -1e-3), Error);
  EXPECT_THROW(dsquare_lifetime(0.0, 1.0), Error);
  EXPECT_THROW(dsquare_loss(10, 0.05, 0.0), Error);
}
