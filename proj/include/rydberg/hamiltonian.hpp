#pragma once

// Drive terms H^{ab} = (Omega/2) e^{i phi} |a><b| + h.c. - Delta |b><b|,
// pair-interaction operators, pulse schedules and the named spin models.

#include "rydberg/interactions.hpp"
#include "rydberg/space.hpp"

#include <cmath>
#include <functional>
#include <iostream>

namespace rydberg {

struct DriveSegment {
  std::vector<std::size_t> targets;
  Level a = Level::g0;
  Level b = Level::r;
  double omega = 0.0;  ///< rad/us at segment start
  double delta = 0.0;  ///< rad/us at segment start
  double phi = 0.0;
  double duration = 0.0;
  std::optional<double> omega_end;  ///< linear ramp target
  std::optional<double> delta_end;

  bool ramped() const { return omega_end.has_value() || delta_end.has_value(); }
  double omega_at(double t) const { return ramp(omega, omega_end, t); }
  double delta_at(double t) const { return ramp(delta, delta_end, t); }

  void validate(const Register& reg) const {
    if (targets.empty()) throw Error("hamiltonian", "drive segment needs at least one target");
    if (!(duration >= 0.0) || !std::isfinite(duration)) throw Error("hamiltonian", "segment duration must be >= 0");
    if (omega < 0.0 || (omega_end && *omega_end < 0.0)) throw Error("hamiltonian", "Omega must be >= 0; the phase carries the sign");
    if (!std::isfinite(omega) || !std::isfinite(delta) || !std::isfinite(phi))
      throw Error("hamiltonian", "drive parameters must be finite");
    if (a == b) throw Error("hamiltonian", "transition must connect two distinct levels");
    for (auto t : targets) {
      if (t >= reg.size()) throw Error("hamiltonian", "drive target out of range");
      const auto& s = reg.site(t).levels;
      if (!s.has(a) || !s.has(b))
        throw Error("hamiltonian", "transition " + std::string(to_string(a)) + "-" + std::string(to_string(b)) +
                                       " references an undeclared level on site " + std::to_string(t));
    }
  }

 private:
  double ramp(double v0, const std::optional<double>& v1, double t) const {
    if (!v1 || duration <= 0.0) return v0;
    const double x = std::clamp(t / duration, 0.0, 1.0);
    return v0 + (*v1 - v0) * x;
  }
};

struct PulseStep {
  std::vector<DriveSegment> segments;
  double duration = 0.0;
  bool interactions_active = true;
  std::string label;
};

struct PulseSchedule {
  std::vector<PulseStep> steps;

  double total_duration() const {
    double t = 0.0;
    for (const auto& s : steps) t += s.duration;
    return t;
  }

  void validate(const Register& reg) const {
    for (const auto& st : steps) {
      if (!(st.duration >= 0.0)) throw Error("hamiltonian", "step duration must be >= 0");
      for (const auto& seg : st.segments) {
        seg.validate(reg);
        if (std::abs(seg.duration - st.duration) > 1e-12 * std::max(1.0, st.duration))
          throw Error("hamiltonian", "segments within a step must share the step duration");
      }
      for (std::size_t i = 0; i < st.segments.size(); ++i)
        for (std::size_t j = i + 1; j < st.segments.size(); ++j) {
          const auto& x = st.segments[i];
          const auto& y = st.segments[j];
          const bool same_transition = (x.a == y.a && x.b == y.b) || (x.a == y.b && x.b == y.a);
          if (!same_transition) continue;
          for (auto t : x.targets)
            if (std::find(y.targets.begin(), y.targets.end(), t) != y.targets.end())
              throw Error("hamiltonian", "two segments in one step drive the same transition on site " + std::to_string(t));
        }
    }
  }
};

/// Parts of a segment operator: Omega(t) * coupling + Delta(t) * detuning.
struct DriveParts {
  SparseOp coupling;  ///< sum_j (1/2)(e^{i phi}|a><b| + h.c.)
  SparseOp detuning;  ///< -sum_j |b><b|
};

inline DriveParts drive_parts(const DriveSegment& seg, const Register& reg, const Basis& basis) {
  seg.validate(reg);
  OpBuilder c(basis), d(basis);
  const cplx e = std::polar(0.5, seg.phi);
  for (auto j : seg.targets) {
    const auto& s = basis.schemes().empty() ? reg.site(j).levels : basis.schemes()[j];
    const int ia = s.require(seg.a), ib = s.require(seg.b);
    c.add_local(j, ia, ib, e);
    c.add_local(j, ib, ia, std::conj(e));
    d.add_local(j, ib, ib, -1.0);
  }
  return {c.build(), d.build()};
}

/// Drive operator with the segment's starting parameters.
inline SparseOp drive_operator(const DriveSegment& seg, const Register& reg, const Basis& basis) {
  auto p = drive_parts(seg, reg, basis);
  return SparseOp(cplx(seg.omega) * p.coupling + cplx(seg.delta) * p.detuning);
}

/// Sum of resolved pair terms: V|ab><ab| (diagonal) or (V/2)(|ab><ba| + h.c.) (exchange).
inline SparseOp interaction_operator(const std::vector<InteractionTerm>& terms, const Basis& basis) {
  OpBuilder ob(basis);
  for (const auto& t : terms) {
    if (t.v == 0.0) continue;
    const auto& sj = basis.schemes().at(t.j);
    const auto& sk = basis.schemes().at(t.k);
    if (t.kind == CouplingKind::exchange_dipolar) {
      const int ja = sj.require(t.a), jb = sj.require(t.b);
      const int ka = sk.require(t.a), kb = sk.require(t.b);
      ob.add_pair(t.j, t.k, ja, kb, jb, ka, 0.5 * t.v);
      ob.add_pair(t.j, t.k, jb, ka, ja, kb, 0.5 * t.v);
    } else {
      const int ja = sj.require(t.a), kb = sk.require(t.b);
      ob.add_pair(t.j, t.k, ja, kb, ja, kb, t.v);
    }
  }
  return ob.build();
}

/// Static per-site detuning offsets entering as -delta_j on every Rydberg level.
inline SparseOp disorder_operator(const std::vector<double>& offsets, const Basis& basis) {
  OpBuilder ob(basis);
  for (std::size_t j = 0; j < offsets.size() && j < basis.sites(); ++j) {
    if (offsets[j] == 0.0) continue;
    const auto& s = basis.schemes().at(j);
    for (int l = 0; l < s.dim(); ++l)
      if (is_rydberg(s.labels()[l])) ob.add_local(j, l, l, -offsets[j]);
  }
  return ob.build();
}

inline double one_norm(const SparseOp& m) {
  Eigen::VectorXd col = Eigen::VectorXd::Zero(m.cols());
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseOp::InnerIterator it(m, k); it; ++it) col(it.col()) += std::abs(it.value());
  return m.cols() ? col.maxCoeff() : 0.0;
}

/// H(t) = fixed + sum_i coeff_i(t) * op_i, time measured from the start of the block.
struct TimeDependentHamiltonian {
  struct Term {
    SparseOp op;
    std::function<double(double)> coeff;
    double max_abs_coeff = 0.0;  ///< bound over the block, used for step sizing
  };

  SparseOp fixed;
  std::vector<Term> terms;

  bool constant() const { return terms.empty(); }

  SparseOp at(double t) const {
    SparseOp h = fixed;
    for (const auto& term : terms) h += cplx(term.coeff(t)) * term.op;
    return h;
  }

  /// y = H(t) x
  void apply(double t, const Eigen::Ref<const StateVec>& x, Eigen::Ref<StateVec> y) const {
    y.noalias() = fixed * x;
    for (const auto& term : terms) {
      const double c = term.coeff(t);
      if (c != 0.0) y.noalias() += cplx(c) * (term.op * x);
    }
  }

  double norm_bound() const {
    double n = one_norm(fixed);
    for (const auto& term : terms) n += term.max_abs_coeff * one_norm(term.op);
    return n;
  }
};

/// Everything needed to turn a schedule into operators.
struct SystemModel {
  Register reg;
  Basis basis;
  std::vector<InteractionTerm> interactions;
  std::vector<double> disorder;  ///< per-site static detuning offsets (rad/us)

  static SystemModel make(const Register& reg, const std::vector<PairCoupling>& couplings, bool with_sink = false,
                          const InteractionOptions& opt = {}) {
    return {reg, Basis::for_register(reg, with_sink), resolve_interactions(reg, couplings, opt), {}};
  }

  SystemModel with_sink() const {
    SystemModel m = *this;
    m.basis = Basis::for_register(reg, true);
    return m;
  }

  SparseOp interaction_op() const { return interaction_operator(interactions, basis); }
};

inline TimeDependentHamiltonian step_hamiltonian(const SystemModel& sys, const PulseStep& step) {
  TimeDependentHamiltonian h;
  h.fixed = SparseOp(sys.basis.size(), sys.basis.size());
  if (step.interactions_active) h.fixed += sys.interaction_op();
  if (!sys.disorder.empty()) h.fixed += disorder_operator(sys.disorder, sys.basis);
  for (const auto& seg : step.segments) {
    auto parts = drive_parts(seg, sys.reg, sys.basis);
    if (!seg.ramped()) {
      h.fixed += cplx(seg.omega) * parts.coupling + cplx(seg.delta) * parts.detuning;
      continue;
    }
    const double om = std::max(seg.omega, seg.omega_end.value_or(seg.omega));
    const double dm = std::max(std::abs(seg.delta), std::abs(seg.delta_end.value_or(seg.delta)));
    h.terms.push_back({parts.coupling, [seg](double t) { return seg.omega_at(t); }, om});
    h.terms.push_back({parts.detuning, [seg](double t) { return seg.delta_at(t); }, dm});
  }
  return h;
}

// ---------------------------------------------------------------------------
// Two-photon excitation

struct TwoPhotonParams {
  double omega_eff;
  double delta_eff;
  double gamma_a;  ///< scattering rate while in the lower state
  double gamma_b;  ///< scattering rate while in the upper state
  bool valid_regime;  ///< |delta_e| >= 10 max(Omega_A, Omega_B)
};

inline TwoPhotonParams effective_two_photon(double omega_a, double omega_b, double delta_e, double delta_2ph, double gamma) {
  if (delta_e == 0.0) throw Error("hamiltonian", "intermediate detuning must be nonzero");
  TwoPhotonParams p;
  p.omega_eff = omega_a * omega_b / (2.0 * delta_e);
  p.delta_eff = delta_2ph + (omega_a * omega_a - omega_b * omega_b) / (4.0 * delta_e);
  p.gamma_a = omega_a * omega_a * gamma / (4.0 * delta_e * delta_e);
  p.gamma_b = omega_b * omega_b * gamma / (4.0 * delta_e * delta_e);
  p.valid_regime = std::abs(delta_e) >= 10.0 * std::max(std::abs(omega_a), std::abs(omega_b));
  if (!p.valid_regime)
    std::cerr << "warning: hamiltonian: |delta_e| is not much larger than the single-photon Rabi frequencies\n";
  return p;
}

// ---------------------------------------------------------------------------
// Spin models

enum class ModelKind { ising, pxp, xy, xxz };

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "ising") return ModelKind::ising;
  if (s == "pxp") return ModelKind::pxp;
  if (s == "xy") return ModelKind::xy;
  if (s == "xxz") return ModelKind::xxz;
  return std::nullopt;
}

struct ManyBodyModel {
  ModelKind kind = ModelKind::ising;
  /// V_jk for ising / xy, J_jk for xxz; unused for pxp.
  Eigen::MatrixXd couplings;
  std::vector<double> omega;  ///< per site
  std::vector<double> delta;  ///< per site
  double anisotropy = 0.0;    ///< delta in the xxz model

  std::size_t size() const { return omega.size(); }

  static ManyBodyModel uniform(ModelKind kind, Eigen::MatrixXd couplings, double omega, double delta,
                               double anisotropy = 0.0) {
    const auto n = static_cast<std::size_t>(couplings.rows());
    return {kind, std::move(couplings), std::vector<double>(n, omega), std::vector<double>(n, delta), anisotropy};
  }

  void validate() const {
    const auto n = static_cast<Eigen::Index>(omega.size());
    if (delta.size() != omega.size()) throw Error("hamiltonian", "omega and delta need one entry per site");
    if (kind == ModelKind::pxp) return;
    if (couplings.rows() != n || couplings.cols() != n) throw Error("hamiltonian", "coupling table has wrong shape");
    if ((couplings - couplings.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, couplings.cwiseAbs().maxCoeff()))
      throw Error("hamiltonian", "coupling table must be symmetric");
    if (!couplings.allFinite()) throw Error("hamiltonian", "coupling table must be finite");
    for (Eigen::Index j = 0; j < n; ++j)
      if (couplings(j, j) != 0.0) throw Error("hamiltonian", "coupling table must have a zero diagonal");
  }
};

/// Single-qubit sums (1/2) sum_j P_j with unit weights, used as ramp coefficients.
inline SparseOp pauli_sum(const Basis& basis, Pauli p, double weight = 0.5) {
  OpBuilder ob(basis);
  const auto q = QubitMap::of(basis);
  for (std::size_t j = 0; j < basis.sites(); ++j) add_pauli(ob, q, j, p, weight);
  return ob.build();
}

/// Number operator sum_j n_j on the |1> labels.
inline SparseOp number_sum(const Basis& basis) {
  OpBuilder ob(basis);
  const auto q = QubitMap::of(basis);
  for (std::size_t j = 0; j < basis.sites(); ++j) ob.add_local(j, q.one[j], q.one[j], 1.0);
  return ob.build();
}

/// I_j = sum_{k != j} V_jk / 2
inline Eigen::VectorXd ising_shift(const Eigen::MatrixXd& v) { return 0.5 * v.rowwise().sum(); }

/// Interaction part of the spin-form Ising model:
/// (1/2) sum_j [-I_j Z_j + sum_{k != j} (V_jk/4) Z_j Z_k].
inline SparseOp ising_interaction_spin(const Eigen::MatrixXd& v, const Basis& basis) {
  OpBuilder ob(basis);
  const auto q = QubitMap::of(basis);
  const Eigen::VectorXd shift = ising_shift(v);
  const auto n = static_cast<std::size_t>(v.rows());
  for (std::size_t j = 0; j < n; ++j) {
    add_pauli(ob, q, j, Pauli::Z, -0.5 * shift(j));
    for (std::size_t k = j + 1; k < n; ++k)
      if (v(j, k) != 0.0) add_pauli_pair(ob, q, j, Pauli::Z, k, Pauli::Z, v(j, k) / 4.0);
  }
  return ob.build();
}

/// (1/2) sum_j [Omega_j X_j + (Delta_j - I_j) Z_j + sum_{k != j} (V_jk / 4) Z_j Z_k]
inline SparseOp ising_hamiltonian(const ManyBodyModel& m, const Basis& basis) {
  if (m.kind != ModelKind::ising) throw Error("hamiltonian", "model is not ising");
  m.validate();
  if (basis.sites() != m.size()) throw Error("hamiltonian", "basis and model sizes differ");
  OpBuilder ob(basis);
  const auto q = QubitMap::of(basis);
  for (std::size_t j = 0; j < m.size(); ++j) {
    add_pauli(ob, q, j, Pauli::X, 0.5 * m.omega[j]);
    add_pauli(ob, q, j, Pauli::Z, 0.5 * m.delta[j]);
  }
  SparseOp h = ob.build();
  h += ising_interaction_spin(m.couplings, basis);
  return h;
}

/// sum_j [(Omega_j/2) X_j - Delta_j n_j] + sum_{j<k} V_jk n_j n_k
inline SparseOp ising_projector_form(const ManyBodyModel& m, const Basis& basis) {
  m.validate();
  OpBuilder ob(basis);
  const auto q = QubitMap::of(basis);
  for (std::size_t j = 0; j < m.size(); ++j) {
    add_pauli(ob, q, j, Pauli::X, 0.5 * m.omega[j]);
    ob.add_local(j, q.one[j], q.one[j], -m.delta[j]);
    for (std::size_t k = j + 1; k < m.size(); ++k)
      ob.add_pair(j, k, q.one[j], q.one[k], q.one[j], q.one[k], m.couplings(j, k));
  }
  return ob.build();
}

/// Constant c with projector_form = spin_form + c * I.
inline double ising_offset(const ManyBodyModel& m) {
  double c = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    c -= 0.5 * m.delta[j];
    for (std::size_t k = j + 1; k < m.size(); ++k) c += 0.25 * m.couplings(j, k);
  }
  return c;
}

/// (1/2) sum_j Omega_j P X_j P - sum_j Delta_j n_j on a constrained basis.
/// Flips that leave the independent-set basis are dropped, which yields the
/// neighbour projectors (single-sided at open ends).
inline SparseOp pxp_hamiltonian(const ManyBodyModel& m, const Basis& constrained) {
  if (!constrained.is_constrained()) throw Error("hamiltonian", "pxp needs a blockade-constrained basis");
  if (constrained.sites() != m.size()) throw Error("hamiltonian", "basis and model sizes differ");
  OpBuilder ob(constrained);
  for (std::size_t j = 0; j < m.size(); ++j) {
    ob.add_local(j, 0, 1, 0.5 * m.omega[j]);
    ob.add_local(j, 1, 0, 0.5 * m.omega[j]);
    ob.add_local(j, 1, 1, -m.delta[j]);
  }
  return ob.build();
}

/// (1/2) sum_j [Omega_j X_j + Delta_j Z_j + sum_{k != j} (V_jk/4)(X_j X_k + Y_j Y_k)]
inline SparseOp xy_hamiltonian(const ManyBodyModel& m, const Basis& basis) {
  if (m.kind != ModelKind::xy) throw Error("hamiltonian", "model is not xy");
  m.validate();
  OpBuilder ob(basis);
  const auto q = QubitMap::of(basis);
  for (std::size_t j = 0; j < m.size(); ++j) {
    add_pauli(ob, q, j, Pauli::X, 0.5 * m.omega[j]);
    add_pauli(ob, q, j, Pauli::Z, 0.5 * m.delta[j]);
    for (std::size_t k = j + 1; k < m.size(); ++k) {
      const double v = m.couplings(j, k);
      if (v == 0.0) continue;
      add_pauli_pair(ob, q, j, Pauli::X, k, Pauli::X, v / 4.0);
      add_pauli_pair(ob, q, j, Pauli::Y, k, Pauli::Y, v / 4.0);
    }
  }
  return ob.build();
}

/// (1/2) sum_j [Omega_j X_j + (Delta_j - I_j) Z_j + (1/2) sum_{k != j} J_jk (XX + YY + delta ZZ)],
/// I_j = delta * sum_{k != j} J_jk.
inline SparseOp xxz_hamiltonian(const ManyBodyModel& m, const Basis& basis) {
  if (m.kind != ModelKind::xxz) throw Error("hamiltonian", "model is not xxz");
  m.validate();
  OpBuilder ob(basis);
  const auto q = QubitMap::of(basis);
  const Eigen::VectorXd shift = m.anisotropy * m.couplings.rowwise().sum();
  for (std::size_t j = 0; j < m.size(); ++j) {
    add_pauli(ob, q, j, Pauli::X, 0.5 * m.omega[j]);
    add_pauli(ob, q, j, Pauli::Z, 0.5 * (m.delta[j] - shift(j)));
    for (std::size_t k = j + 1; k < m.size(); ++k) {
      const double jj = m.couplings(j, k);
      if (jj == 0.0) continue;
      add_pauli_pair(ob, q, j, Pauli::X, k, Pauli::X, jj / 2.0);
      add_pauli_pair(ob, q, j, Pauli::Y, k, Pauli::Y, jj / 2.0);
      if (m.anisotropy != 0.0) add_pauli_pair(ob, q, j, Pauli::Z, k, Pauli::Z, m.anisotropy * jj / 2.0);
    }
  }
  return ob.build();
}

inline SparseOp model_hamiltonian(const ManyBodyModel& m, const Basis& basis) {
  switch (m.kind) {
    case ModelKind::ising: return ising_hamiltonian(m, basis);
    case ModelKind::pxp: return pxp_hamiltonian(m, basis);
    case ModelKind::xy: return xy_hamiltonian(m, basis);
    case ModelKind::xxz: return xxz_hamiltonian(m, basis);
  }
  throw Error("hamiltonian", "unknown model");
}

inline double riemann_zeta(double p) {
  if (!(p > 1.0)) throw Error("hamiltonian", "zeta(p) needs p > 1");
  return std::riemann_zeta(p);
}

/// delta_q = V zeta(p) ((q+1)/q^p - q/(q+1)^p), q = 1..q_max.
inline std::vector<double> phase_boundaries(double v, int p, int q_max) {
  if (q_max < 1) throw Error("hamiltonian", "q_max must be >= 1");
  if (p < 2) throw Error("hamiltonian", "p must be >= 2");
  const double z = riemann_zeta(p);
  std::vector<double> out;
  for (int q = 1; q <= q_max; ++q)
    out.push_back(v * z * ((q + 1.0) / std::pow(q, p) - q / std::pow(q + 1.0, p)));
  return out;
}

/// Predicted Z_q order at Omega -> 0: q with delta_q > Delta >= delta_{q-1}
/// (delta_0 taken as +inf, i.e. q = 1 above delta_1). Returns 0 for Delta < 0.
inline int predicted_order(double delta, double v, int p, int q_max = 12) {
  if (delta < 0.0) return 0;
  const auto b = phase_boundaries(v, p, q_max);
  if (delta >= b[0]) return 1;
  for (int q = 1; q < q_max; ++q)
    if (delta >= b[q]) return q + 1;
  return q_max;
}

inline void write_triplets_csv(std::ostream& os, const SparseOp& m) {
  os << "row,col,re_rad_per_us,im_rad_per_us\n";
  os.precision(17);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseOp::InnerIterator it(m, k); it; ++it)
      os << it.row() << ',' << it.col() << ',' << it.value().real() << ',' << it.value().imag() << '\n';
}

}  // namespace rydberg
