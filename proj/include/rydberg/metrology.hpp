#pragma once

// Parity oscillations, Bell/GHZ fidelity estimators, truth tables, coherence
// conversions and achievable-depth estimates.

#include "rydberg/gates.hpp"

#include <limits>

namespace rydberg {

/// Density matrix of the computational subspace (2^n, qubit 0 most significant).
/// Weight outside it (lost or auxiliary levels) is dropped.
inline DenseOp computational_block(const QuantumState& s) {
  const Basis& b = s.basis();
  const int n = static_cast<int>(b.sites());
  const Eigen::Index d = Eigen::Index{1} << n;
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < d; ++i) {
    auto v = computational_state(b, bit_string(static_cast<std::size_t>(i), n));
    Eigen::Index k;
    v.cwiseAbs().maxCoeff(&k);
    idx.push_back(k);
  }
  const DenseOp rho = s.density();
  DenseOp out(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = rho(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  return out;
}

// ---------------------------------------------------------------------------
// Two-qubit parity

struct ParityScan {
  std::vector<double> theta;
  std::vector<double> parity;
  double contrast = 0.0;   ///< C_Pi = |offset - cos coefficient|, the period-pi two-qubit coherence
  double amplitude = 0.0;  ///< raw sqrt(a^2 + s^2) of the cos(2 theta + theta0) term
  double phase = 0.0;      ///< theta0
  double offset = 0.0;
  double residual = 0.0;   ///< max |Pi - fit|
};

inline double parity_at(const DenseOp& rho2, double theta) {
  const DenseOp r = on_qubit(uxy(theta, 0.0), 0, 2) * on_qubit(uxy(theta, 0.0), 1, 2);
  const DenseOp out = r * rho2 * r.adjoint();
  return (out(0, 0) + out(3, 3) - out(1, 1) - out(2, 2)).real();
}

/// Least squares of Pi(theta) on [cos 2theta, sin 2theta, 1]. The contrast is
/// |b - a|, the cos-sin fit evaluated against its offset at theta = pi/2, which
/// isolates the two-qubit coherence (the <YY> correlator).
inline ParityScan parity_scan(const DenseOp& rho2, const std::vector<double>& thetas) {
  if (rho2.rows() != 4 || rho2.cols() != 4) throw Error("metrology", "parity scan needs a two-qubit density matrix");
  if (thetas.size() < 4) throw Error("metrology", "parity scan needs at least 4 angles");
  ParityScan ps;
  ps.theta = thetas;
  const auto m = static_cast<Eigen::Index>(thetas.size());
  Eigen::MatrixXd a(m, 3);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double t = thetas[static_cast<std::size_t>(i)];
    y(i) = parity_at(rho2, t);
    ps.parity.push_back(y(i));
    a.row(i) << std::cos(2 * t), std::sin(2 * t), 1.0;
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(y);
  ps.amplitude = std::hypot(c(0), c(1));
  ps.phase = std::atan2(-c(1), c(0));
  ps.offset = c(2);
  ps.contrast = std::clamp(std::abs(c(2) - c(0)), 0.0, 1.0);
  ps.residual = (a * c - y).cwiseAbs().maxCoeff();
  return ps;
}

inline ParityScan parity_scan(const QuantumState& s, const std::vector<double>& thetas) {
  if (s.basis().sites() != 2) throw Error("metrology", "parity scan needs exactly two qubits");
  return parity_scan(computational_block(s), thetas);
}

/// F = (P_a + P_b)/2 + C/2 for the Bell state populating components a and b.
inline double bell_fidelity_estimate(double p_a, double p_b, double contrast) {
  return std::clamp(0.5 * (p_a + p_b) + 0.5 * contrast, 0.0, 1.0);
}

inline double bell_fidelity_estimate(const DenseOp& rho2, const std::vector<double>& thetas) {
  if (rho2.trace().real() > 1.0 + 1e-6) throw Error("metrology", "populations sum above one");
  const auto ps = parity_scan(rho2, thetas);
  return bell_fidelity_estimate(rho2(1, 1).real(), rho2(2, 2).real(), ps.contrast);
}

/// <Psi+|rho|Psi+>, Psi+ = (|01> + |10>)/sqrt 2.
inline double bell_overlap(const DenseOp& rho2) {
  StateVec v = StateVec::Zero(4);
  v(1) = v(2) = 1.0 / std::sqrt(2.0);
  return v.dot(rho2 * v).real();
}

// ---------------------------------------------------------------------------
// Truth tables

struct TruthTableResult {
  double fidelity = 0.0;
  double survival = 1.0;  ///< mean retained probability per input
};

/// (1/d) sum_i P(ideal(i) | i), with lost probability excluded column-wise.
inline TruthTableResult truth_table_fidelity(const Eigen::MatrixXd& p, const DenseOp& ideal, double tol = 1e-6) {
  const Eigen::Index d = p.rows();
  if (d < 1 || p.cols() != d || ideal.rows() != d || ideal.cols() != d) throw Error("metrology", "truth table must be d x d matching the gate");
  if ((p.array() < -tol).any() || !p.allFinite()) throw Error("metrology", "truth table has invalid entries");
  TruthTableResult r;
  r.fidelity = 0.0;
  double surv = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double s = p.col(i).sum();
    if (s > 1.0 + tol) throw Error("metrology", "truth table column sums above one");
    Eigen::Index k;
    ideal.col(i).cwiseAbs2().maxCoeff(&k);
    if (s > 0.0) r.fidelity += p(k, i) / s;
    surv += s;
  }
  r.fidelity /= static_cast<double>(d);
  r.survival = surv / static_cast<double>(d);
  return r;
}

// ---------------------------------------------------------------------------
// GHZ

/// Alternating pattern 0101... (start = 0) or 1010... (start = 1) as a basis index.
inline std::size_t alternating_pattern(int n, int start) {
  std::size_t i = 0;
  for (int q = 0; q < n; ++q)
    if ((q + start) % 2 == 1) i |= std::size_t{1} << (n - 1 - q);
  return i;
}

/// <X...X> after exp(-i phi (-1)^j Z_j / 2) on every site.
inline double ghz_parity(const DenseOp& rho, double phi) {
  const Eigen::Index d = rho.rows();
  int n = 0;
  while ((Eigen::Index{1} << n) < d) ++n;
  if ((Eigen::Index{1} << n) != d || rho.cols() != d) throw Error("metrology", "GHZ parity needs a 2^N density matrix");
  auto ph = [&](Eigen::Index i) {
    double z = 0.0;
    for (int q = 0; q < n; ++q) z += ((q % 2) ? -1.0 : 1.0) * ((i >> (n - 1 - q) & 1) ? -1.0 : 1.0);
    return std::exp(-kI * 0.5 * phi * z);
  };
  cplx acc = 0.0;
  const Eigen::Index flip = d - 1;
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index j = i ^ flip;
    // (X..X rho')_{ii} summed: rho'(j, i) with rho' = R rho R^dag
    acc += ph(j) * rho(j, i) * std::conj(ph(i));
  }
  return acc.real();
}

/// Amplitude of the N-fold Fourier component of ghz_parity over phi samples.
inline double ghz_contrast(const DenseOp& rho, int n, const std::vector<double>& phis) {
  if (phis.size() < 3) throw Error("metrology", "need at least 3 phase samples");
  const auto m = static_cast<Eigen::Index>(phis.size());
  Eigen::MatrixXd a(m, 3);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double p = phis[static_cast<std::size_t>(i)];
    a.row(i) << std::cos(n * p), std::sin(n * p), 1.0;
    y(i) = ghz_parity(rho, p);
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(y);
  return std::hypot(c(0), c(1));
}

/// (P_a + P_b)/2 + |rho_ab| for the two alternating patterns.
inline double ghz_fidelity_bound(const DenseOp& rho) {
  int n = 0;
  while ((Eigen::Index{1} << n) < rho.rows()) ++n;
  const auto a = static_cast<Eigen::Index>(alternating_pattern(n, 0));
  const auto b = static_cast<Eigen::Index>(alternating_pattern(n, 1));
  return std::clamp(0.5 * (rho(a, a).real() + rho(b, b).real()) + std::abs(rho(a, b)), 0.0, 1.0);
}

/// <GHZ|rho|GHZ> with GHZ = (|0101..> + |1010..>)/sqrt 2.
inline double ghz_overlap(const DenseOp& rho) {
  int n = 0;
  while ((Eigen::Index{1} << n) < rho.rows()) ++n;
  const auto a = static_cast<Eigen::Index>(alternating_pattern(n, 0));
  const auto b = static_cast<Eigen::Index>(alternating_pattern(n, 1));
  return 0.5 * (rho(a, a) + rho(b, b) + rho(a, b) + rho(b, a)).real();
}

// ---------------------------------------------------------------------------
// Coherence-time bookkeeping

struct CoherenceTimes {
  double gamma = 0.0;   ///< 1/us
  double t2 = 0.0;      ///< 2/gamma
  double t_rabi = 0.0;  ///< 2 T2
  double eps_pi = 0.0;  ///< pi / (2 Omega T_Rabi)
};

enum class CoherenceInput { gamma, t2, t_rabi };

inline CoherenceTimes coherence_conversions(CoherenceInput kind, double value, double omega) {
  if (!(value > 0.0) || !(omega > 0.0) || !std::isfinite(value)) throw Error("metrology", "coherence inputs must be positive");
  CoherenceTimes c;
  switch (kind) {
    case CoherenceInput::gamma: c.t2 = 2.0 / value; break;
    case CoherenceInput::t2: c.t2 = value; break;
    case CoherenceInput::t_rabi: c.t2 = value / 2.0; break;
  }
  c.gamma = 2.0 / c.t2;
  c.t_rabi = 2.0 * c.t2;
  c.eps_pi = kPi / (2.0 * omega * c.t_rabi);
  return c;
}

/// 1/e time of an exponential envelope from log-linear least squares.
inline double fit_decay_time(const std::vector<double>& t, const std::vector<double>& amplitude) {
  if (t.size() != amplitude.size() || t.size() < 2) throw Error("metrology", "decay fit needs matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(amplitude[i] > 0.0)) continue;
    const double y = std::log(amplitude[i]);
    sx += t[i];
    sy += y;
    sxx += t[i] * t[i];
    sxy += t[i] * y;
    ++n;
  }
  if (n < 2) throw Error("metrology", "decay fit needs two positive amplitudes");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (!(slope < 0.0)) throw Error("metrology", "envelope does not decay");
  return -1.0 / slope;
}

// ---------------------------------------------------------------------------
// Achievable square-circuit depth

enum class DepthSource { digital, analog, lifetime, loss };

inline std::string_view to_string(DepthSource s) {
  switch (s) {
    case DepthSource::digital: return "digital";
    case DepthSource::analog: return "analog";
    case DepthSource::lifetime: return "lifetime";
    case DepthSource::loss: return "loss";
  }
  return "?";
}

struct DepthEstimate {
  DepthSource source = DepthSource::digital;
  double epsilon = 0.0;
  bool unbounded = false;  ///< epsilon = 0: no finite depth limit
  long dsquare = 0;
  double ngates = 0.0;  ///< D^2 / 2
};

inline DepthEstimate depth_from_epsilon(DepthSource src, double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw Error("metrology", "error per operation must be finite and >= 0");
  if (eps > 1.0) throw Error("metrology", "error per operation exceeds one");
  DepthEstimate d;
  d.source = src;
  d.epsilon = eps;
  if (eps == 0.0) {
    d.unbounded = true;
    d.dsquare = std::numeric_limits<long>::max();
    d.ngates = std::numeric_limits<double>::infinity();
    return d;
  }
  // floor(eps^-1/2), guarded against rounding at exact squares
  long n = static_cast<long>(std::floor(1.0 / std::sqrt(eps)));
  const auto fits = [&](long k) { return static_cast<double>(k) * static_cast<double>(k) * eps <= 1.0 + 1e-9; };
  while (fits(n + 1)) ++n;
  while (n > 0 && !fits(n)) --n;
  d.dsquare = n;
  d.ngates = 0.5 * static_cast<double>(n) * static_cast<double>(n);
  return d;
}

inline DepthEstimate dsquare_digital(double fidelity) {
  if (!(fidelity > 0.0) || fidelity > 1.0) throw Error("metrology", "fidelity must lie in (0, 1]");
  return depth_from_epsilon(DepthSource::digital, 1.0 - fidelity);
}

/// Half-interaction-cycle error pi / (V_max T_coh).
inline DepthEstimate dsquare_analog(double v_max, double t_coh) {
  if (!(v_max > 0.0) || !(t_coh > 0.0)) throw Error("metrology", "V_max and T_coh must be positive");
  return depth_from_epsilon(DepthSource::analog, std::min(1.0, kPi / (v_max * t_coh)));
}

inline DepthEstimate dsquare_lifetime(double tau, double t1) {
  if (!(tau > 0.0) || !(t1 > 0.0)) throw Error("metrology", "tau and T1 must be positive");
  return depth_from_epsilon(DepthSource::lifetime, std::min(1.0, tau / t1));
}

/// Sequential loss: eps = 2 N tau_g / T_trap.
inline DepthEstimate dsquare_loss(double n_atoms, double tau_g, double t_trap) {
  if (!(n_atoms > 0.0) || !(tau_g > 0.0) || !(t_trap > 0.0)) throw Error("metrology", "loss inputs must be positive");
  return depth_from_epsilon(DepthSource::loss, std::min(1.0, 2.0 * n_atoms * tau_g / t_trap));
}

}  // namespace rydberg
