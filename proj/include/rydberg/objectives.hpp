#pragma once

// Simulator-backed cost functions for the optimizer.

#include "rydberg/metrology.hpp"
#include "rydberg/sweeps.hpp"

namespace rydberg {

/// 1 - process fidelity against `ideal` after the best per-qubit Z phases,
/// plus leakage_weight * leakage.
inline double phase_corrected_infidelity(const DenseOp& u, const DenseOp& ideal, int k, double leakage_weight = 1.0) {
  const auto d = static_cast<double>(u.rows());
  const double uu = (u.adjoint() * u).trace().real();
  const auto best = detail::best_phases(u * ideal.adjoint(), k);
  const double ov2 = (1.0 - best.residual) * d * d;
  const double f = uu > 0.0 ? ov2 / (d * uu) : 0.0;
  const double leak = std::clamp(1.0 - uu / d, 0.0, 1.0);
  return std::max(0.0, 1.0 - f) + leakage_weight * leak;
}

struct PczObjective {
  double v_over_omega = 500.0;
  double omega = kTwoPi;
  double leakage_weight = 1.0;

  /// x = (Delta/Omega, phi, tau_g Omega)
  double operator()(const Eigen::VectorXd& x) const {
    GateParams p;
    p.omega = omega;
    p.v_over_omega = v_over_omega;
    p.pcz_delta = x(0);
    p.pcz_phi = x(1);
    p.pcz_time = x(2);
    p.blockade_min = 0.0;
    const auto g = build_protocol("pCZ", p);
    const auto r = extract_process(g);
    return phase_corrected_infidelity(r.op, g.ideal, 2, leakage_weight);
  }

  static std::vector<ParamSpec> params() {
    return {{"delta_over_omega", -1.5, 1.5, false}, {"phi_rad", 0.0, kTwoPi, true}, {"tau_omega", 2.0 * kPi, 4.0 * kPi, false}};
  }

  static Eigen::VectorXd published() {
    Eigen::VectorXd x(3);
    x << 0.377, 3.90242, 2.7328 * kPi;
    return x;
  }
};

/// GHZ_4 on a 4-site ring from |0000> through a three-stage ramp.
struct Ghz4Objective {
  double v_nn = kTwoPi * 10.0;  ///< rad/us
  SweepSystem sys = make_sweep_system(ModelKind::ising, power_law_couplings(build_lattice(LatticeKind::ring, {4}, 5.0), v_nn, 6));

  /// x = (T, Omega_max, Delta_start, Delta_end, up fraction, down fraction)
  static RampSchedule ramp(const Eigen::VectorXd& x) {
    const double t = x(0), up = x(4) * t, down = x(5) * t;
    return RampSchedule::standard(x(1), x(2), x(3), up, std::max(t - up - down, 1e-6), down);
  }

  double fidelity(const Eigen::VectorXd& x) const {
    const auto res = adiabatic_sweep(sys, ramp(x));
    return ghz_overlap(res.state.density());
  }

  double operator()(const Eigen::VectorXd& x) const { return 1.0 - fidelity(x); }

  static std::vector<ParamSpec> params() {
    return {{"duration_us", 0.1, 4.0, false},
            {"omega_max_rad_per_us", kTwoPi * 0.5, kTwoPi * 4.0, false},
            {"delta_start_rad_per_us", -kTwoPi * 6.0, 0.0, false},
            {"delta_end_rad_per_us", 0.0, kTwoPi * 8.0, false},
            {"up_fraction", 0.05, 0.45, false},
            {"down_fraction", 0.05, 0.45, false}};
  }
};

}  // namespace rydberg
