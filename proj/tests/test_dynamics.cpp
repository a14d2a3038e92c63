#include "oracles.hpp"
#include "rydberg/metrology.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rydberg;

namespace {

struct Atom {
  Register reg = Register({Site{Vec3::Zero()}});
  SystemModel sys = SystemModel::make(reg, {});
  StateVec ground() const { return computational_state(sys.basis, "0"); }
};

PulseSchedule drive(double omega, double delta, double t, double phi = 0.0) {
  PulseSchedule s;
  s.steps.push_back({{DriveSegment{{0}, Level::g0, Level::r, omega, delta, phi, t}}, t, true, "drive"});
  return s;
}

PulseSchedule wait(double t) {
  PulseSchedule s;
  s.steps.push_back({{}, t, true, "wait"});
  return s;
}

}  // namespace

TEST(Evolution, ResonantPiPulse) {
  Atom a;
  const double om = kTwoPi * 1.3;
  auto out = propagate(QuantumState::pure(a.sys.basis, a.ground()), drive(om, 0.0, kPi / om), a.sys);
  EXPECT_NEAR(out.populations()(1), 1.0, 1e-10);
  EXPECT_NEAR(out.psi().norm(), 1.0, 1e-12);
}

TEST(Evolution, DetunedRabiMatchesClosedForm) {
  Atom a;
  const double om = kTwoPi, de = 0.8 * kTwoPi;
  for (double t : {0.1, 0.37, 0.9, 2.2}) {
    auto out = propagate(QuantumState::pure(a.sys.basis, a.ground()), drive(om, de, t), a.sys);
    EXPECT_NEAR(out.populations()(1), oracle::rabi_p1(om, de, t), 1e-10) << t;
  }
}

TEST(Evolution, ObserverSamplesOnGrid) {
  Atom a;
  const double om = kTwoPi;
  std::vector<double> ts, ps;
  PropagateOptions opt;
  opt.sample_dt = 0.05;
  opt.observer = [&](double t, const QuantumState& s) {
    ts.push_back(t);
    ps.push_back(s.populations()(1));
  };
  propagate(QuantumState::pure(a.sys.basis, a.ground()), drive(om, 0.0, 1.0), a.sys, nullptr, opt);
  ASSERT_EQ(ts.size(), 20u);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    EXPECT_NEAR(ts[i], 0.05 * (i + 1), 1e-12);
    EXPECT_NEAR(ps[i], oracle::rabi_p1(om, 0.0, ts[i]), 1e-10);
  }
}

TEST(Evolution, RampedStepConvergesUnderRefinement) {
  auto reg = build_lattice(LatticeKind::chain, {3}, 5.0);
  auto sys = SystemModel::make(reg, {PairCoupling::vdw_for(kTwoPi * 5, 5.0)});
  PulseSchedule s;
  DriveSegment seg{{0, 1, 2}, Level::g0, Level::r, 0.0, -kTwoPi * 3, 0.0, 2.0, kTwoPi * 2, kTwoPi * 3};
  s.steps.push_back({{seg}, 2.0, true, "ramp"});
  auto psi0 = QuantumState::pure(sys.basis, computational_state(sys.basis, "000"));
  PropagateOptions coarse, fine;
  fine.integrator.steps_per_period = 2 * coarse.integrator.steps_per_period;
  auto a = propagate(psi0, s, sys, nullptr, coarse).psi();
  auto b = propagate(psi0, s, sys, nullptr, fine).psi();
  EXPECT_GT(std::norm(a.dot(b)), 1.0 - 1e-8);
  EXPECT_NEAR(a.norm(), 1.0, 1e-12);
}

TEST(Evolution, EnergyConservedForConstantH) {
  auto reg = build_lattice(LatticeKind::chain, {4}, 5.0);
  auto sys = SystemModel::make(reg, {PairCoupling::vdw_for(kTwoPi * 3, 5.0)});
  PulseStep st{{DriveSegment{{0, 1, 2, 3}, Level::g0, Level::r, kTwoPi, 0.4, 0.0, 3.0}}, 3.0, true, "drive"};
  PulseSchedule s{{st}};
  const SparseOp h = step_hamiltonian(sys, st).fixed;
  auto psi0 = QuantumState::pure(sys.basis, computational_state(sys.basis, "0110"));
  auto out = propagate(psi0, s, sys);
  EXPECT_NEAR(expectation(out, h), expectation(psi0, h), 1e-9);
}

TEST(Lindblad, PureDephasingDecaysCoherence) {
  Atom a;
  NoiseModel n;
  n.dephasing = 0.4;
  StateVec plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  for (double t : {0.5, 2.0, 5.0}) {
    auto out = propagate(QuantumState::pure(a.sys.basis, plus), wait(t), a.sys, &n);
    EXPECT_NEAR(std::abs(out.rho()(0, 1)), 0.5 * std::exp(-0.5 * n.dephasing * t), 1e-9) << t;
    EXPECT_NEAR(out.rho()(1, 1).real(), 0.5, 1e-12);
  }
}

TEST(Lindblad, DecayToGroundAndSink) {
  Atom a;
  auto excited = computational_state(a.sys.basis, "1");
  auto n = NoiseModel::from_t1_t2(2.0, 0.0);
  auto out = propagate(QuantumState::pure(a.sys.basis, excited), wait(1.5), a.sys, &n);
  EXPECT_NEAR(out.populations()(1), std::exp(-0.75), 1e-9);
  n.branching_to_zero = 0.25;
  auto lost = propagate(QuantumState::pure(a.sys.basis, excited), wait(1.5), a.sys, &n);
  ASSERT_EQ(lost.dim(), 3);
  EXPECT_NEAR(lost.populations()(2), 0.75 * (1 - std::exp(-0.75)), 1e-9);
  EXPECT_NEAR(lost.populations()(0), 0.25 * (1 - std::exp(-0.75)), 1e-9);
}

TEST(Lindblad, TracePreservedAndPositive) {
  auto reg = build_lattice(LatticeKind::chain, {2}, 5.0);
  auto sys = SystemModel::make(reg, {PairCoupling::vdw_for(kTwoPi * 4, 5.0)});
  NoiseModel n;
  n.decay_rate = 0.3;
  n.dephasing = 0.2;
  n.branching_to_zero = 0.5;
  PulseSchedule s;
  s.steps.push_back({{DriveSegment{{0, 1}, Level::g0, Level::r, kTwoPi, 0.5, 0.3, 1.7}}, 1.7, true, "d"});
  auto out = propagate(QuantumState::pure(sys.basis, computational_state(sys.basis, "00")), s, sys, &n);
  EXPECT_NEAR(out.rho().trace().real(), 1.0, 1e-9);
  EXPECT_NO_THROW(out.validate());
  Eigen::SelfAdjointEigenSolver<DenseOp> es(out.rho());
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9);
}

TEST(Trajectories, AgreeWithLindblad) {
  Atom a;
  NoiseModel n;
  n.decay_rate = 0.5;
  n.dephasing = 0.3;
  const auto s = drive(kTwoPi, 0.0, 2.0);
  auto exact = propagate(QuantumState::pure(a.sys.basis, a.ground()), s, a.sys, &n);
  TrajectoryOptions opt;
  opt.trajectories = 2000;
  opt.seed = 4;
  auto tr = propagate_trajectories(a.ground(), a.sys.basis, s, a.sys, n, opt);
  const double p = exact.populations()(1);
  const double sigma = std::sqrt(p * (1 - p) / opt.trajectories);
  EXPECT_NEAR(tr.populations(1), p, 4 * sigma + 1e-3);
  EXPECT_NEAR(tr.rho.trace().real(), 1.0, 1e-9);
}

TEST(Trajectories, DeterministicPerSeed) {
  Atom a;
  NoiseModel n;
  n.decay_rate = 1.0;
  TrajectoryOptions opt;
  opt.trajectories = 50;
  opt.seed = 99;
  const auto s = drive(kTwoPi, 0.0, 1.0);
  auto x = propagate_trajectories(a.ground(), a.sys.basis, s, a.sys, n, opt);
  auto y = propagate_trajectories(a.ground(), a.sys.basis, s, a.sys, n, opt);
  EXPECT_EQ(x.jumps_per_trajectory, y.jumps_per_trajectory);
  EXPECT_EQ((x.rho - y.rho).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Observables, PauliExpectations) {
  auto b = Basis::full({2, 2});
  EXPECT_NEAR(expectation(QuantumState::pure(b, basis_state(b, {0, 0})), z_operator(b, 0)), 1.0, 0.0);
  EXPECT_NEAR(expectation(QuantumState::pure(b, basis_state(b, {1, 0})), z_operator(b, 0)), -1.0, 0.0);
  StateVec plus = StateVec::Zero(4);
  plus(0) = plus(2) = 1.0 / std::sqrt(2.0);  // |+>|0>
  EXPECT_NEAR(expectation(QuantumState::pure(b, plus), x_operator(b, 0)), 1.0, 1e-15);
  StateVec bell = StateVec::Zero(4);
  bell(1) = bell(2) = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(expectation(QuantumState::pure(b, bell), zz_operator(b, 0, 1)), -1.0, 1e-15);
  EXPECT_NEAR(expectation(QuantumState::pure(b, bell), level_projector(b, 1, 1)), 0.5, 1e-15);
  EXPECT_THROW(expectation(QuantumState::pure(b, bell), z_operator(Basis::full({2}), 0)), Error);
}

TEST(Sampling, ProductAndBellStates) {
  auto b = Basis::full({2, 2});
  auto c0 = sample_measurements(QuantumState::pure(b, basis_state(b, {0, 0})), 1000, 1);
  ASSERT_EQ(c0.size(), 1u);
  EXPECT_EQ(c0["00"], 1000);
  StateVec bell = StateVec::Zero(4);
  bell(1) = bell(2) = 1.0 / std::sqrt(2.0);
  const long shots = 100000;
  auto cb = sample_measurements(QuantumState::pure(b, bell), shots, 7);
  EXPECT_EQ(cb.count("00") + cb.count("11"), 0u);
  EXPECT_NEAR(static_cast<double>(cb["01"]) / shots, 0.5, 0.005);
  EXPECT_EQ(cb, sample_measurements(QuantumState::pure(b, bell), shots, 7));
  EXPECT_NE(cb, sample_measurements(QuantumState::pure(b, bell), shots, 8));
  EXPECT_THROW(sample_measurements(QuantumState::pure(b, bell), 0, 1), Error);
}

TEST(Sampling, GhzOnlyTwoPatterns) {
  auto b = Basis::full({2, 2, 2, 2});
  StateVec g = StateVec::Zero(16);
  g(0b0101) = g(0b1010) = 1.0 / std::sqrt(2.0);
  auto c = sample_measurements(QuantumState::pure(b, g), 20000, 3);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_TRUE(c.count("0101") && c.count("1010"));
}

TEST(Sampling, LostAtomsLabelled) {
  Atom a;
  auto n = NoiseModel::from_t1_t2(0.5, 0.0);
  n.branching_to_zero = 0.0;
  auto out = propagate(QuantumState::pure(a.sys.basis, computational_state(a.sys.basis, "1")), wait(10.0), a.sys, &n);
  auto c = sample_measurements(out, 100, 2);
  EXPECT_EQ(c["L"], 100);
}

TEST(Disorder, SamplesAreGaussian) {
  NoiseModel n;
  EXPECT_EQ(sample_disorder(n, 3, 1), std::vector<double>(3, 0.0));
  n.sigma_doppler = 0.27;
  double s1 = 0, s2 = 0;
  const int shots = 20000;
  for (int s = 0; s < shots; ++s) {
    const double x = sample_disorder(n, 1, 5, static_cast<std::uint64_t>(s))[0];
    s1 += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s1 / shots, 0.0, 5 * 0.27 / std::sqrt(shots));
  EXPECT_NEAR(std::sqrt(s2 / shots), 0.27, 0.01);
  EXPECT_EQ(sample_disorder(n, 4, 9, 3), sample_disorder(n, 4, 9, 3));
}

TEST(Disorder, RamseyEnvelopeIsGaussian) {
  Atom a;
  NoiseModel n;
  n.sigma_doppler = kTwoPi * 0.1;
  const double om = kTwoPi * 20, t2 = kPi / (2 * om);
  for (double t : {1.0, 2.0, 3.0}) {
    PulseSchedule s;
    s.steps.push_back({{DriveSegment{{0}, Level::g0, Level::r, om, 0.0, 0.0, t2}}, t2, true, "pi/2"});
    s.steps.push_back({{}, t, true, "wait"});
    s.steps.push_back({{DriveSegment{{0}, Level::g0, Level::r, om, 0.0, 0.0, t2}}, t2, true, "pi/2"});
    auto out = propagate_disorder_average(QuantumState::pure(a.sys.basis, a.ground()), s, a.sys, n, 1000, 12);
    const double contrast = out.populations()(1) - out.populations()(0);
    const double want = std::exp(-0.5 * n.sigma_doppler * n.sigma_doppler * t * t);
    EXPECT_NEAR(contrast, want, 0.05) << t;
  }
}

TEST(Errors, DimensionMismatch) {
  Atom a;
  auto b2 = Basis::full({2, 2});
  EXPECT_THROW(propagate(QuantumState::pure(b2, basis_state(b2, {0, 0})), wait(1.0), a.sys), Error);
  EXPECT_THROW(QuantumState::pure(a.sys.basis, StateVec::Zero(3)), Error);
  NoiseModel bad;
  bad.branching_to_zero = 1.5;
  EXPECT_THROW(bad.validate(), Error);
}
