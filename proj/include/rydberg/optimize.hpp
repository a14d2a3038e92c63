#pragma once

// Bounded derivative-free simplex minimization with restarts, plus grid scans.

#include "rydberg/common.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace rydberg {

struct ParamSpec {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;  ///< wraps into [lo, hi) instead of clamping
};

struct OptimizationProblem {
  std::vector<ParamSpec> params;
  std::function<double(const Eigen::VectorXd&)> objective;
  int budget = 500;
  std::uint64_t seed = 0;
  int restarts = 0;
  std::optional<Eigen::VectorXd> initial;  ///< defaults to the box centre
  double initial_step = 0.1;               ///< fraction of each range
  double ftol = 1e-13;
  double xtol = 1e-10;
  std::optional<double> target_cost;  ///< stop as soon as the best cost reaches this

  std::size_t dim() const { return params.size(); }

  void validate() const {
    if (params.empty()) throw Error("optimize", "problem needs at least one parameter");
    for (const auto& p : params)
      if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || !(p.hi > p.lo))
        throw Error("optimize", "parameter '" + p.name + "' needs finite bounds lo < hi");
    if (budget < static_cast<int>(dim()) + 2) throw Error("optimize", "budget must be >= dimension + 2");
    if (restarts < 0) throw Error("optimize", "restart count must be >= 0");
    if (!objective) throw Error("optimize", "objective is not set");
    if (initial && initial->size() != static_cast<Eigen::Index>(dim())) throw Error("optimize", "initial point has wrong size");
  }

  Eigen::VectorXd project(Eigen::VectorXd x) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& p = params[i];
      auto& v = x(static_cast<Eigen::Index>(i));
      if (p.periodic) {
        const double w = p.hi - p.lo;
        v = p.lo + std::fmod(std::fmod(v - p.lo, w) + w, w);
        if (v >= p.hi) v = p.lo;
      } else {
        v = std::clamp(v, p.lo, p.hi);
      }
    }
    return x;
  }
};

struct TraceEntry {
  int eval;
  double cost;
  double best;
  Eigen::VectorXd x;
};

enum class OptStatus { converged, budget_exhausted };

inline std::string_view to_string(OptStatus s) { return s == OptStatus::converged ? "converged" : "budget_exhausted"; }

struct OptimizationResult {
  Eigen::VectorXd best;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<TraceEntry> trace;
  OptStatus status = OptStatus::budget_exhausted;
  int evaluations = 0;
  int restarts_used = 0;
};

namespace detail {

/// Difference a - b for periodic parameters taken on the short arc.
inline Eigen::VectorXd wrapped_delta(const OptimizationProblem& pb, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd d = a - b;
  for (std::size_t i = 0; i < pb.params.size(); ++i) {
    if (!pb.params[i].periodic) continue;
    const double w = pb.params[i].hi - pb.params[i].lo;
    auto& v = d(static_cast<Eigen::Index>(i));
    v = std::remainder(v, w);
  }
  return d;
}

}  // namespace detail

/// Nelder-Mead with box projection. Restarts rebuild the simplex around the
/// best point so far with a jittered step drawn from the counter RNG.
inline OptimizationResult minimize(const OptimizationProblem& pb) {
  pb.validate();
  const auto n = static_cast<Eigen::Index>(pb.dim());
  OptimizationResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    const double c = pb.objective(x);
    const double cost = std::isfinite(c) ? c : std::numeric_limits<double>::max();
    ++res.evaluations;
    if (cost < res.best_cost) {
      res.best_cost = cost;
      res.best = x;
    }
    res.trace.push_back({res.evaluations, cost, res.best_cost, x});
    return cost;
  };
  auto budget_left = [&] { return res.evaluations < pb.budget && !(pb.target_cost && res.best_cost <= *pb.target_cost); };

  Eigen::VectorXd start(n);
  if (pb.initial) {
    start = pb.project(*pb.initial);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) start(i) = 0.5 * (pb.params[i].lo + pb.params[i].hi);
  }

  for (int run = 0; run <= pb.restarts && budget_left(); ++run) {
    res.restarts_used = run;
    const Eigen::VectorXd x0 = run == 0 ? start : res.best;
    CounterRng rng(pb.seed, derive_stream("restart", static_cast<std::uint64_t>(run)));
    std::vector<Eigen::VectorXd> simplex{x0};
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd x = x0;
      const double range = pb.params[i].hi - pb.params[i].lo;
      double step = pb.initial_step * range * (run == 0 ? 1.0 : 0.5 + rng.uniform());
      if (!pb.params[i].periodic && x(i) + step > pb.params[i].hi) step = -step;
      x(i) += step;
      simplex.push_back(pb.project(x));
    }
    std::vector<double> f;
    for (const auto& x : simplex) {
      if (!budget_left()) break;
      f.push_back(eval(x));
    }
    if (f.size() < simplex.size()) break;

    bool converged = false;
    while (budget_left()) {
      std::vector<std::size_t> order(simplex.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return f[a] < f[b]; });
      std::vector<Eigen::VectorXd> s2;
      std::vector<double> f2;
      for (auto i : order) {
        s2.push_back(simplex[i]);
        f2.push_back(f[i]);
      }
      simplex = std::move(s2);
      f = std::move(f2);

      double size = 0.0;
      for (std::size_t i = 1; i < simplex.size(); ++i)
        size = std::max(size, detail::wrapped_delta(pb, simplex[i], simplex[0]).cwiseAbs().maxCoeff());
      if (std::abs(f.back() - f.front()) <= pb.ftol * (1.0 + std::abs(f.front())) || size <= pb.xtol) {
        converged = true;
        break;
      }

      // centroid of the best n points, relative to the best vertex so periodic wraps stay local
      Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) c += detail::wrapped_delta(pb, simplex[i], simplex[0]);
      c = simplex[0] + c / static_cast<double>(n);
      const Eigen::VectorXd dw = detail::wrapped_delta(pb, c, simplex.back());
      auto point = [&](double t) { return pb.project(c + t * dw); };

      const Eigen::VectorXd xr = point(1.0);
      const double fr = eval(xr);
      if (fr < f.front()) {
        if (!budget_left()) {
          simplex.back() = xr;
          f.back() = fr;
          break;
        }
        const Eigen::VectorXd xe = point(2.0);
        const double fe = eval(xe);
        if (fe < fr) {
          simplex.back() = xe;
          f.back() = fe;
        } else {
          simplex.back() = xr;
          f.back() = fr;
        }
      } else if (fr < f[f.size() - 2]) {
        simplex.back() = xr;
        f.back() = fr;
      } else {
        if (!budget_left()) break;
        const bool outside = fr < f.back();
        const Eigen::VectorXd xc = point(outside ? 0.5 : -0.5);
        const double fc = eval(xc);
        if (fc < std::min(fr, f.back())) {
          simplex.back() = xc;
          f.back() = fc;
        } else {
          for (std::size_t i = 1; i < simplex.size() && budget_left(); ++i) {
            simplex[i] = pb.project(simplex[0] + 0.5 * detail::wrapped_delta(pb, simplex[i], simplex[0]));
            f[i] = eval(simplex[i]);
          }
        }
      }
    }
    if (!converged) break;
  }
  const bool hit = pb.target_cost && res.best_cost <= *pb.target_cost;
  res.status = hit || res.evaluations < pb.budget ? OptStatus::converged : OptStatus::budget_exhausted;
  return res;
}

inline void write_trace_csv(std::ostream& os, const OptimizationProblem& pb, const OptimizationResult& r) {
  os << "eval_index,cost,best_cost";
  for (const auto& p : pb.params) os << ',' << p.name;
  os << '\n';
  os.precision(12);
  for (const auto& t : r.trace) {
    os << t.eval << ',' << t.cost << ',' << t.best;
    for (Eigen::Index i = 0; i < t.x.size(); ++i) os << ',' << t.x(i);
    os << '\n';
  }
}

struct ScanAxis {
  std::vector<double> values;

  static ScanAxis linspace(double lo, double hi, int n) {
    if (n < 1) throw Error("optimize", "scan axis needs at least one point");
    ScanAxis a;
    for (int i = 0; i < n; ++i) a.values.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    return a;
  }
};

struct ScanRow {
  Eigen::VectorXd x;
  double cost;
};

/// Exhaustive evaluation over the Cartesian grid (last axis fastest).
inline std::vector<ScanRow> scan(const OptimizationProblem& pb, const std::vector<ScanAxis>& grid) {
  if (grid.size() != pb.dim()) throw Error("optimize", "scan grid needs one axis per parameter");
  if (!pb.objective) throw Error("optimize", "objective is not set");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].values.empty()) throw Error("optimize", "scan axis is empty");
    for (double v : grid[i].values)
      if (v < pb.params[i].lo - 1e-12 || v > pb.params[i].hi + 1e-12)
        throw Error("optimize", "scan grid leaves the bounds of '" + pb.params[i].name + "'");
  }
  std::vector<ScanRow> rows;
  std::vector<std::size_t> idx(grid.size(), 0);
  const auto n = static_cast<Eigen::Index>(grid.size());
  while (true) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = grid[i].values[idx[i]];
    rows.push_back({x, pb.objective(x)});
    std::size_t k = grid.size();
    while (k > 0) {
      --k;
      if (++idx[k] < grid[k].values.size()) break;
      idx[k] = 0;
      if (k == 0) return rows;
    }
    if (grid.empty()) return rows;
  }
}

inline void write_scan_csv(std::ostream& os, const OptimizationProblem& pb, const std::vector<ScanRow>& rows) {
  for (const auto& p : pb.params) os << p.name << ',';
  os << "cost\n";
  os.precision(12);
  for (const auto& r : rows) {
    for (Eigen::Index i = 0; i < r.x.size(); ++i) os << r.x(i) << ',';
    os << r.cost << '\n';
  }
}

}  // namespace rydberg
