#include "rydberg/objectives.hpp"
#include "rydberg/optimize.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace rydberg;

namespace {

OptimizationProblem quadratic(int budget = 400, std::uint64_t seed = 1) {
  OptimizationProblem pb;
  pb.params = {{"a", -5.0, 5.0, false}, {"b", -5.0, 5.0, false}, {"c", -5.0, 5.0, false}};
  pb.objective = [](const Eigen::VectorXd& x) {
    return (x(0) - 1.2) * (x(0) - 1.2) + 3.0 * (x(1) + 0.7) * (x(1) + 0.7) + 0.5 * (x(2) - 2.0) * (x(2) - 2.0) +
           0.3 * (x(0) - 1.2) * (x(1) + 0.7);
  };
  pb.budget = budget;
  pb.seed = seed;
  return pb;
}

// Rastrigin-like landscape with many local minima
OptimizationProblem bumpy(int restarts, std::uint64_t seed) {
  OptimizationProblem pb;
  pb.params = {{"x", -4.0, 4.0, false}, {"y", -4.0, 4.0, false}};
  pb.objective = [](const Eigen::VectorXd& x) {
    return x.squaredNorm() + 2.0 * (2.0 - std::cos(kTwoPi * x(0)) - std::cos(kTwoPi * x(1)));
  };
  pb.budget = 600;
  pb.restarts = restarts;
  pb.seed = seed;
  pb.initial = Eigen::Vector2d(3.1, -2.9);
  return pb;
}

}  // namespace

TEST(Minimize, QuadraticMinimum) {
  const auto r = minimize(quadratic());
  EXPECT_NEAR(r.best(0), 1.2, 1e-6);
  EXPECT_NEAR(r.best(1), -0.7, 1e-6);
  EXPECT_NEAR(r.best(2), 2.0, 1e-6);
  EXPECT_LT(r.best_cost, 1e-11);
  EXPECT_EQ(r.status, OptStatus::converged);
  EXPECT_LE(r.evaluations, 400);
  EXPECT_EQ(static_cast<int>(r.trace.size()), r.evaluations);
}

TEST(Minimize, Deterministic) {
  const auto a = minimize(bumpy(3, 8));
  const auto b = minimize(bumpy(3, 8));
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].cost, b.trace[i].cost);
    EXPECT_EQ(a.trace[i].x, b.trace[i].x);
  }
}

TEST(Minimize, BestSoFarIsMonotone) {
  const auto r = minimize(bumpy(2, 4));
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_LE(r.trace[i].best, r.trace[i - 1].best);
    EXPECT_LE(r.trace[i].best, r.trace[i].cost);
  }
  EXPECT_EQ(r.trace.back().best, r.best_cost);
}

TEST(Minimize, RestartsNeverWorse) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto single = minimize(bumpy(0, seed));
    const auto multi = minimize(bumpy(4, seed));
    EXPECT_LE(multi.best_cost, single.best_cost) << "seed " << seed;
  }
}

TEST(Minimize, IteratesStayInBox) {
  const auto pb = bumpy(2, 6);
  const auto r = minimize(pb);
  for (const auto& t : r.trace)
    for (Eigen::Index i = 0; i < 2; ++i) {
      EXPECT_GE(t.x(i), pb.params[static_cast<std::size_t>(i)].lo);
      EXPECT_LE(t.x(i), pb.params[static_cast<std::size_t>(i)].hi);
    }
}

TEST(Minimize, BudgetExhaustion) {
  auto pb = quadratic(6);
  const auto r = minimize(pb);
  EXPECT_EQ(r.status, OptStatus::budget_exhausted);
  EXPECT_EQ(r.evaluations, 6);
}

TEST(Minimize, TargetCostStopsEarly) {
  auto pb = quadratic(400);
  pb.target_cost = 1e-2;
  const auto r = minimize(pb);
  EXPECT_LE(r.best_cost, 1e-2);
  EXPECT_EQ(r.status, OptStatus::converged);
  EXPECT_LT(r.evaluations, minimize(quadratic(400)).evaluations);
}

TEST(Minimize, PeriodicParameterWraps) {
  OptimizationProblem pb;
  pb.params = {{"phi", 0.0, kTwoPi, true}};
  // minimum at 0 == 2 pi, approached from the upper edge
  pb.objective = [](const Eigen::VectorXd& x) { return 1.0 - std::cos(x(0)); };
  pb.initial = Eigen::VectorXd::Constant(1, 5.9);
  pb.budget = 200;
  const auto r = minimize(pb);
  EXPECT_LT(r.best_cost, 1e-10);
  EXPECT_GE(r.best(0), 0.0);
  EXPECT_LT(r.best(0), kTwoPi);
  EXPECT_NEAR(pb.project(Eigen::VectorXd::Constant(1, -0.5))(0), kTwoPi - 0.5, 1e-12);
  EXPECT_NEAR(pb.project(Eigen::VectorXd::Constant(1, kTwoPi))(0), 0.0, 1e-12);
}

TEST(Minimize, ValidationErrors) {
  auto pb = quadratic();
  pb.budget = 4;
  EXPECT_THROW(minimize(pb), Error);
  pb = quadratic();
  pb.params[1].hi = pb.params[1].lo;
  EXPECT_THROW(minimize(pb), Error);
  pb = quadratic();
  pb.objective = nullptr;
  EXPECT_THROW(minimize(pb), Error);
  pb = quadratic();
  pb.initial = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(minimize(pb), Error);
  pb = quadratic();
  pb.restarts = -1;
  EXPECT_THROW(minimize(pb), Error);
  pb = quadratic();
  pb.params.clear();
  EXPECT_THROW(minimize(pb), Error);
}

TEST(Minimize, NonFiniteCostIsRejected) {
  OptimizationProblem pb;
  pb.params = {{"x", -1.0, 1.0, false}};
  pb.objective = [](const Eigen::VectorXd& x) { return x(0) > 0.5 ? std::nan("") : (x(0) - 0.2) * (x(0) - 0.2); };
  pb.initial = Eigen::VectorXd::Constant(1, 0.43);
  pb.budget = 100;
  const auto r = minimize(pb);
  EXPECT_NEAR(r.best(0), 0.2, 1e-5);
}

TEST(Scan, CartesianOrderAndCsv) {
  OptimizationProblem pb;
  pb.params = {{"x", 0.0, 1.0, false}, {"y", 0.0, 2.0, false}};
  pb.objective = [](const Eigen::VectorXd& x) { return x(0) + 10 * x(1); };
  const auto rows = scan(pb, {ScanAxis::linspace(0.0, 1.0, 2), ScanAxis::linspace(0.0, 2.0, 3)});
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[1].x, Eigen::Vector2d(0.0, 1.0));
  EXPECT_EQ(rows[3].x, Eigen::Vector2d(1.0, 0.0));
  EXPECT_DOUBLE_EQ(rows[5].cost, 21.0);
  std::ostringstream os;
  write_scan_csv(os, pb, rows);
  EXPECT_EQ(os.str().substr(0, 9), "x,y,cost\n");
  EXPECT_EQ(scan(pb, {ScanAxis::linspace(0.5, 0.5, 1), ScanAxis::linspace(1.0, 1.0, 1)}).size(), 1u);
  EXPECT_THROW(scan(pb, {ScanAxis::linspace(0.0, 3.0, 2), ScanAxis::linspace(0.0, 1.0, 2)}), Error);
  EXPECT_THROW(scan(pb, {ScanAxis::linspace(0.0, 1.0, 2)}), Error);
  EXPECT_THROW(ScanAxis::linspace(0.0, 1.0, 0), Error);
}

TEST(Scan, TraceCsvHeader) {
  const auto pb = quadratic(20);
  const auto r = minimize(pb);
  std::ostringstream os;
  write_trace_csv(os, pb, r);
  const auto s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "eval_index,cost,best_cost,a,b,c");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 21);
}

TEST(Objectives, CphaseWaitScanFindsHalfInteractionCycle) {
  GateParams p;
  p.v_over_omega = 50.0;
  const double v = p.v_over_omega * p.omega;
  OptimizationProblem pb;
  pb.params = {{"tau2", 0.5 * kPi / v, 1.5 * kPi / v, false}};
  pb.objective = [&](const Eigen::VectorXd& x) {
    GateParams q = p;
    q.tau2 = x(0);
    const auto g = build_protocol("CPHASE_A", q);
    return phase_corrected_infidelity(extract_process(g).op, ideal_gate("CZ"), 2);
  };
  const auto rows = scan(pb, {ScanAxis::linspace(0.5 * kPi / v, 1.5 * kPi / v, 21)});
  const auto it = std::min_element(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.cost < b.cost; });
  EXPECT_EQ(it - rows.begin(), 10);
  EXPECT_LT(it->cost, 1e-9);
}

TEST(Objectives, PhaseCorrectedInfidelity) {
  const DenseOp cz = ideal_gate("CZ");
  EXPECT_NEAR(phase_corrected_infidelity(cz, cz, 2), 0.0, 1e-12);
  // local Z phases and a global phase are free
  DenseOp u = cz;
  const cplx g = std::exp(kI * 0.4);
  u(1, 1) *= std::exp(kI * 0.3);
  u(2, 2) *= std::exp(kI * 1.1);
  u(3, 3) *= std::exp(kI * 1.4);
  EXPECT_NEAR(phase_corrected_infidelity(g * u, cz, 2), 0.0, 1e-10);
  EXPECT_GT(phase_corrected_infidelity(DenseOp::Identity(4, 4), cz, 2), 0.1);
  EXPECT_NEAR(phase_corrected_infidelity(0.9 * cz, cz, 2), 1.0 - 0.81, 1e-10);
}

TEST(Objectives, PczPublishedPointIsNearOptimal) {
  PczObjective obj;
  EXPECT_LT(obj(PczObjective::published()), 1e-3);
  OptimizationProblem pb;
  pb.params = PczObjective::params();
  pb.objective = obj;
  pb.initial = PczObjective::published();
  pb.initial_step = 0.01;
  pb.budget = 200;
  const auto r = minimize(pb);
  EXPECT_LE(r.best_cost, obj(PczObjective::published()));
  EXPECT_LT(r.best_cost, 1e-4);
}
