#pragma once

// Time evolution: unitary propagation of pure states, Lindblad propagation of
// density matrices, quantum-jump trajectories, disorder and shot sampling.

#include "rydberg/hamiltonian.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <map>

namespace rydberg {

class QuantumState {
 public:
  QuantumState() = default;

  static QuantumState pure(Basis b, StateVec psi) {
    if (psi.size() != b.size()) throw Error("dynamics", "state dimension does not match the basis");
    QuantumState s;
    s.basis_ = std::move(b);
    s.psi_ = std::move(psi);
    return s;
  }

  static QuantumState mixed(Basis b, DenseOp rho) {
    if (rho.rows() != b.size() || rho.cols() != b.size()) throw Error("dynamics", "density matrix does not match the basis");
    QuantumState s;
    s.basis_ = std::move(b);
    s.rho_ = std::move(rho);
    s.density_ = true;
    return s;
  }

  const Basis& basis() const { return basis_; }
  bool is_density() const { return density_; }
  const StateVec& psi() const {
    if (density_) throw Error("dynamics", "state is a density matrix");
    return psi_;
  }
  const DenseOp& rho() const {
    if (!density_) throw Error("dynamics", "state is pure");
    return rho_;
  }
  StateVec& psi_mut() { return psi_; }
  DenseOp& rho_mut() { return rho_; }
  Eigen::Index dim() const { return basis_.size(); }

  DenseOp density() const { return density_ ? rho_ : DenseOp(psi_ * psi_.adjoint()); }

  QuantumState to_density() const { return mixed(basis_, density()); }

  Eigen::VectorXd populations() const {
    if (density_) return rho_.diagonal().real();
    return psi_.cwiseAbs2();
  }

  double norm_defect() const {
    if (density_) return std::abs(rho_.trace() - cplx(1.0));
    return std::abs(psi_.squaredNorm() - 1.0);
  }

  /// Checks the normalization / trace, Hermiticity and positivity invariants.
  void validate(double tol = 1e-9, double psd_tol = 1e-8) const {
    if (norm_defect() > tol) throw Error("dynamics", "state is not normalized");
    if (density_) {
      if (max_hermitian_defect(rho_) > tol) throw Error("dynamics", "density matrix is not Hermitian");
      Eigen::SelfAdjointEigenSolver<DenseOp> es(rho_, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -psd_tol) throw Error("dynamics", "density matrix is not positive semidefinite");
    }
  }

  /// Re-expresses the state on `to` (e.g. after appending the loss sink).
  QuantumState embed_into(const Basis& to) const {
    if (!density_) return pure(to, embed(psi_, basis_, to));
    DenseOp r = DenseOp::Zero(to.size(), to.size());
    std::vector<Eigen::Index> map(basis_.size());
    for (Eigen::Index i = 0; i < basis_.size(); ++i) {
      auto j = to.index_of_digits(basis_.digits(i));
      if (!j) throw Error("dynamics", "state has weight outside the target basis");
      map[i] = *j;
    }
    for (Eigen::Index i = 0; i < basis_.size(); ++i)
      for (Eigen::Index k = 0; k < basis_.size(); ++k) r(map[i], map[k]) = rho_(i, k);
    return mixed(to, r);
  }

 private:
  Basis basis_;
  bool density_ = false;
  StateVec psi_;
  DenseOp rho_;
};

struct NoiseModel {
  double decay_rate = 0.0;         ///< 1/T1 of every Rydberg level (1/us)
  double branching_to_zero = 1.0;  ///< fraction of decays that return to |0>; the rest go to the loss sink
  double dephasing = 0.0;          ///< gamma; ground-Rydberg coherences decay at gamma/2, T2 = 2/gamma
  double scatter_lower = 0.0;      ///< gamma_a: loss rate of the lower level while its transition is driven
  double scatter_upper = 0.0;      ///< gamma_b: loss rate of the upper level while its transition is driven
  double sigma_doppler = 0.0;      ///< rad/us

  static NoiseModel from_t1_t2(double t1, double t2) {
    NoiseModel n;
    if (t1 > 0.0 && std::isfinite(t1)) n.decay_rate = 1.0 / t1;
    if (t2 > 0.0 && std::isfinite(t2)) n.dephasing = 2.0 / t2;
    return n;
  }

  void validate() const {
    for (double r : {decay_rate, dephasing, scatter_lower, scatter_upper, sigma_doppler})
      if (!(r >= 0.0) || !std::isfinite(r)) throw Error("dynamics", "noise rates must be finite and >= 0");
    if (branching_to_zero < 0.0 || branching_to_zero > 1.0) throw Error("dynamics", "branching ratio must lie in [0, 1]");
  }

  bool dissipative() const { return decay_rate > 0.0 || dephasing > 0.0 || scatter_lower > 0.0 || scatter_upper > 0.0; }

  bool needs_sink() const {
    return (decay_rate > 0.0 && branching_to_zero < 1.0) || scatter_lower > 0.0 || scatter_upper > 0.0;
  }
};

/// Jump operators active during `step`.
inline std::vector<SparseOp> jump_operators(const SystemModel& sys, const NoiseModel& noise, const PulseStep* step) {
  noise.validate();
  std::vector<SparseOp> out;
  const auto& b = sys.basis;
  auto single = [&](std::size_t j, int ket, int bra, double rate) {
    if (rate <= 0.0) return;
    OpBuilder ob(b);
    ob.add_local(j, ket, bra, std::sqrt(rate));
    out.push_back(ob.build());
  };
  auto sink_of = [&](std::size_t j) -> int {
    auto s = b.schemes().at(j).index_of(Level::lost);
    if (!s) throw Error("dynamics", "noise model moves population to the loss sink but the basis has none");
    return *s;
  };
  for (std::size_t j = 0; j < b.sites(); ++j) {
    const auto& s = b.schemes().at(j);
    const int zero = s.require(s.zero());
    for (int l = 0; l < s.dim(); ++l) {
      if (!is_rydberg(s.labels()[l])) continue;
      if (noise.decay_rate > 0.0) {
        if (l != zero) single(j, zero, l, noise.decay_rate * noise.branching_to_zero);
        if (noise.branching_to_zero < 1.0) single(j, sink_of(j), l, noise.decay_rate * (1.0 - noise.branching_to_zero));
      }
      single(j, l, l, noise.dephasing);
    }
  }
  if (step && (noise.scatter_lower > 0.0 || noise.scatter_upper > 0.0)) {
    for (const auto& seg : step->segments) {
      if (seg.omega <= 0.0 && seg.omega_end.value_or(0.0) <= 0.0) continue;
      for (auto j : seg.targets) {
        const auto& s = b.schemes().at(j);
        // the lower level of a transition is the non-Rydberg end when there is one
        Level lo = seg.a, hi = seg.b;
        if (is_rydberg(lo) && !is_rydberg(hi)) std::swap(lo, hi);
        single(j, sink_of(j), s.require(lo), noise.scatter_lower);
        single(j, sink_of(j), s.require(hi), noise.scatter_upper);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Integrators

/// exp(-i t M) v by a truncated Taylor series with norm-based substepping.
/// `apply(x, y)` must set y = M x; `norm` bounds the 1-norm of M.
template <class Apply>
StateVec expmv(Apply&& apply, double norm, const StateVec& v, double t, double tol = 1e-14) {
  if (t == 0.0 || norm == 0.0) return v;
  const int substeps = std::max(1, static_cast<int>(std::ceil(std::abs(t) * norm / 2.0)));
  const double h = t / substeps;
  StateVec x = v, term(v.size()), next(v.size());
  for (int s = 0; s < substeps; ++s) {
    term = x;
    StateVec acc = x;
    const double scale = std::max(acc.norm(), 1e-300);
    for (int k = 1; k < 80; ++k) {
      apply(term, next);
      term = (-kI * h / static_cast<double>(k)) * next;
      acc += term;
      if (term.norm() <= tol * scale) break;
      if (k == 79) throw NumericalError("dynamics", "Taylor series failed to converge");
    }
    x = std::move(acc);
  }
  return x;
}

inline StateVec expmv(const SparseOp& m, const StateVec& v, double t, double tol = 1e-14) {
  return expmv([&](const StateVec& x, StateVec& y) { y.noalias() = m * x; }, one_norm(m), v, t, tol);
}

/// Dense threshold for eigendecomposition of piecewise-constant steps.
inline constexpr Eigen::Index kDenseEigLimit = 256;
/// Ramped pure-state steps below this dimension exponentiate the Magnus generator densely.
inline constexpr Eigen::Index kDenseMagnusLimit = 64;

inline DenseOp unitary_from_hermitian(const DenseOp& h, double t) {
  Eigen::SelfAdjointEigenSolver<DenseOp> es(h);
  const Eigen::VectorXcd ph = (-kI * t * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

struct IntegratorOptions {
  /// Ramped steps use h <= (2 pi / ||H||) / steps_per_period.
  double steps_per_period = 12.0;
  /// Lindblad RK4 uses h * (||H|| + sum ||L^dag L||) <= rk4_scale.
  double rk4_scale = 0.02;
  /// Constant Lindblad steps with dim^2 <= this use the exact superoperator exponential.
  Eigen::Index superop_limit = 1024;
};

/// Pure-state evolution over [t0, t1] measured from the start of the block.
inline StateVec evolve_pure(const StateVec& psi, const TimeDependentHamiltonian& h, double t0, double t1,
                            const IntegratorOptions& opt = {}) {
  const double dur = t1 - t0;
  if (dur < 0.0) throw Error("dynamics", "negative evolution time");
  if (dur == 0.0) return psi;
  if (h.constant()) {
    if (psi.size() <= kDenseEigLimit) return unitary_from_hermitian(DenseOp(h.fixed), dur) * psi;
    return expmv(h.fixed, psi, dur, 1e-14);
  }
  const double nrm = std::max(h.norm_bound(), 1e-12);
  const double hmax = kTwoPi / nrm / opt.steps_per_period;
  const int steps = std::max(1, static_cast<int>(std::ceil(dur / hmax)));
  const double dt = dur / steps;
  if (dt < 1e-15 * std::max(1.0, std::abs(t1))) throw NumericalError("dynamics", "step size underflow");
  const double c1 = 0.5 - std::sqrt(3.0) / 6.0, c2 = 0.5 + std::sqrt(3.0) / 6.0;
  const double kc = std::sqrt(3.0) / 12.0 * dt * dt;
  StateVec x = psi, a(psi.size()), b(psi.size());
  if (psi.size() <= kDenseMagnusLimit) {
    for (int s = 0; s < steps; ++s) {
      const double ts = t0 + s * dt;
      const DenseOp h1(h.at(ts + c1 * dt)), h2(h.at(ts + c2 * dt));
      const DenseOp m = (0.5 * dt) * (h1 + h2) - (kI * kc) * (h2 * h1 - h1 * h2);
      x = unitary_from_hermitian(0.5 * (m + m.adjoint()), 1.0) * x;
    }
    return x;
  }
  for (int s = 0; s < steps; ++s) {
    const double ts = t0 + s * dt;
    const SparseOp h1 = h.at(ts + c1 * dt);
    const SparseOp h2 = h.at(ts + c2 * dt);
    // Fourth-order Magnus: M = (dt/2)(H1 + H2) - i (sqrt3/12) dt^2 [H2, H1]
    auto apply = [&](const StateVec& v, StateVec& y) {
      a.noalias() = h1 * v;
      b.noalias() = h2 * v;
      y = (0.5 * dt) * (a + b);
      y.noalias() += (-kI * kc) * (h2 * a - h1 * b);
    };
    const double n1 = one_norm(h1), n2 = one_norm(h2);
    x = expmv(apply, 0.5 * dt * (n1 + n2) + 2.0 * kc * n1 * n2, x, 1.0);
  }
  return x;
}

/// Lindblad right-hand side: -i[H, rho] + sum L rho L^dag - (1/2){L^dag L, rho}.
inline DenseOp lindblad_rhs(const SparseOp& h, const std::vector<SparseOp>& jumps, const std::vector<SparseOp>& ldl,
                            const DenseOp& rho) {
  DenseOp hr = h * rho;
  DenseOp out = -kI * (hr - hr.adjoint());
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    DenseOp lr = jumps[k] * rho;
    out.noalias() += lr * SparseOp(jumps[k].adjoint());
    DenseOp a = ldl[k] * rho;
    out -= 0.5 * (a + a.adjoint());
  }
  return out;
}

/// Dense Liouvillian in column-major vec convention: vec(A X B) = (B^T kron A) vec(X).
inline DenseOp liouvillian(const SparseOp& h, const std::vector<SparseOp>& jumps) {
  const Eigen::Index d = h.rows();
  const DenseOp id = DenseOp::Identity(d, d);
  const DenseOp hd(h);
  DenseOp l = -kI * Eigen::kroneckerProduct(id, hd).eval() + kI * Eigen::kroneckerProduct(hd.transpose(), id).eval();
  for (const auto& j : jumps) {
    const DenseOp jd(j);
    const DenseOp ldl = jd.adjoint() * jd;
    l += Eigen::kroneckerProduct(jd.conjugate(), jd).eval();
    l -= 0.5 * Eigen::kroneckerProduct(id, ldl).eval();
    l -= 0.5 * Eigen::kroneckerProduct(ldl.transpose(), id).eval();
  }
  return l;
}

/// Lindblad evolution of an arbitrary operator (not necessarily a state) over [t0, t1].
inline DenseOp evolve_lindblad(const DenseOp& rho, const TimeDependentHamiltonian& h, const std::vector<SparseOp>& jumps,
                               double t0, double t1, const IntegratorOptions& opt = {}) {
  const double dur = t1 - t0;
  if (dur < 0.0) throw Error("dynamics", "negative evolution time");
  if (dur == 0.0) return rho;
  const Eigen::Index d = rho.rows();
  if (jumps.empty() && h.constant() && d <= kDenseEigLimit) {
    const DenseOp u = unitary_from_hermitian(DenseOp(h.fixed), dur);
    return u * rho * u.adjoint();
  }
  if (h.constant() && d * d <= opt.superop_limit) {
    const DenseOp prop = (liouvillian(h.fixed, jumps) * dur).exp();
    Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho.data(), d * d);
    Eigen::VectorXcd w = prop * v;
    return Eigen::Map<DenseOp>(w.data(), d, d);
  }
  std::vector<SparseOp> ldl;
  double lnorm = 0.0;
  for (const auto& j : jumps) {
    ldl.emplace_back(SparseOp(j.adjoint()) * j);
    lnorm += one_norm(ldl.back());
  }
  const double nrm = std::max(h.norm_bound() + lnorm, 1e-12);
  const int steps = std::max(1, static_cast<int>(std::ceil(dur * nrm / opt.rk4_scale)));
  const double dt = dur / steps;
  if (dt < 1e-15 * std::max(1.0, std::abs(t1))) throw NumericalError("dynamics", "step size underflow");
  DenseOp x = rho;
  const bool cst = h.constant();
  SparseOp ha = h.fixed, hm = h.fixed, hb = h.fixed;
  for (int s = 0; s < steps; ++s) {
    const double ts = t0 + s * dt;
    if (!cst) {
      ha = h.at(ts);
      hm = h.at(ts + 0.5 * dt);
      hb = h.at(ts + dt);
    }
    const DenseOp k1 = lindblad_rhs(ha, jumps, ldl, x);
    const DenseOp k2 = lindblad_rhs(hm, jumps, ldl, x + 0.5 * dt * k1);
    const DenseOp k3 = lindblad_rhs(hm, jumps, ldl, x + 0.5 * dt * k2);
    const DenseOp k4 = lindblad_rhs(hb, jumps, ldl, x + dt * k3);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Schedule propagation

struct PropagateOptions {
  /// Observer sampling interval (us); 0 reports only the end of each step.
  double sample_dt = 0.0;
  std::function<void(double, const QuantumState&)> observer;
  /// Additional jump operators on the system basis, active for the whole schedule.
  std::vector<SparseOp> extra_jumps;
  IntegratorOptions integrator;
};

namespace detail {

/// Chunk boundaries of [0, dur] aligned to a global sampling grid.
inline std::vector<double> chunk_points(double t_start, double dur, double sample_dt) {
  std::vector<double> pts{0.0};
  if (sample_dt > 0.0) {
    double next = std::floor(t_start / sample_dt + 1e-9) * sample_dt + sample_dt;
    while (next < t_start + dur - 1e-12) {
      pts.push_back(next - t_start);
      next += sample_dt;
    }
  }
  pts.push_back(dur);
  return pts;
}

}  // namespace detail

/// Propagates a batch of states through `schedule`. Without dissipation a pure
/// state stays pure; dissipative noise requires (or converts to) a density
/// matrix. Static disorder is taken from `sys.disorder`. Constant dissipative
/// chunks share one superoperator exponential across the batch; the observer
/// receives the batch index.
inline std::vector<QuantumState> propagate_batch(const std::vector<QuantumState>& states, const PulseSchedule& schedule,
                                                 const SystemModel& sys_in, const NoiseModel* noise = nullptr,
                                                 const PropagateOptions& opt = {},
                                                 const std::function<void(std::size_t, double, const QuantumState&)>& observer = {}) {
  schedule.validate(sys_in.reg);
  SystemModel sys = sys_in;
  const bool dissipative = (noise && noise->dissipative()) || !opt.extra_jumps.empty();
  if (noise && noise->needs_sink() && !sys.basis.schemes().empty() && !sys.basis.schemes()[0].has_sink()) sys = sys.with_sink();
  std::vector<QuantumState> cur;
  for (const auto& st : states) {
    cur.push_back(st.basis() == sys.basis ? st : st.embed_into(sys.basis));
    if (cur.back().dim() != sys.basis.size()) throw Error("dynamics", "state dimension does not match the system");
    if (dissipative && !cur.back().is_density()) cur.back() = cur.back().to_density();
  }
  const Eigen::Index d = sys.basis.size();

  double t = 0.0;
  for (const auto& step : schedule.steps) {
    const auto h = step_hamiltonian(sys, step);
    std::vector<SparseOp> jumps = noise ? jump_operators(sys, *noise, &step) : std::vector<SparseOp>{};
    for (const auto& j : opt.extra_jumps) jumps.push_back(j);
    const auto pts = detail::chunk_points(t, step.duration, opt.sample_dt);
    const bool shared = !jumps.empty() && h.constant() && d * d <= opt.integrator.superop_limit;
    std::optional<DenseOp> lv;
    std::vector<std::pair<double, DenseOp>> props;
    for (std::size_t c = 0; c + 1 < pts.size(); ++c) {
      const double len = pts[c + 1] - pts[c];
      const DenseOp* prop = nullptr;
      if (shared && len > 0.0) {
        if (!lv) lv = liouvillian(h.fixed, jumps);
        for (const auto& [l, m] : props)
          if (std::abs(l - len) <= 1e-13 * std::max(1.0, len)) prop = &m;
        if (!prop) {
          props.emplace_back(len, DenseOp((*lv * len).exp()));
          prop = &props.back().second;
        }
      }
      for (std::size_t k = 0; k < cur.size(); ++k) {
        auto& s = cur[k];
        if (prop) {
          Eigen::VectorXcd w = *prop * Eigen::Map<const Eigen::VectorXcd>(s.rho().data(), d * d);
          s.rho_mut() = Eigen::Map<DenseOp>(w.data(), d, d);
        } else if (s.is_density()) {
          s.rho_mut() = evolve_lindblad(s.rho(), h, jumps, pts[c], pts[c + 1], opt.integrator);
        } else {
          s.psi_mut() = evolve_pure(s.psi(), h, pts[c], pts[c + 1], opt.integrator);
        }
        if (opt.sample_dt > 0.0 || c + 2 == pts.size()) {
          if (observer) observer(k, t + pts[c + 1], s);
          if (opt.observer) opt.observer(t + pts[c + 1], s);
        }
      }
    }
    t += step.duration;
  }
  return cur;
}

inline QuantumState propagate(const QuantumState& state, const PulseSchedule& schedule, const SystemModel& sys,
                              const NoiseModel* noise = nullptr, const PropagateOptions& opt = {}) {
  return propagate_batch({state}, schedule, sys, noise, opt).front();
}

/// Full propagator restricted to the given input columns (noiseless).
inline DenseOp propagate_columns(const std::vector<StateVec>& inputs, const PulseSchedule& schedule, const SystemModel& sys) {
  DenseOp out(sys.basis.size(), static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = propagate(QuantumState::pure(sys.basis, inputs[i]), schedule, sys).psi();
  return out;
}

// ---------------------------------------------------------------------------
// Quantum trajectories

struct TrajectoryResult {
  DenseOp rho;  ///< trajectory average of |psi><psi|
  Eigen::VectorXd populations;
  std::vector<int> jumps_per_trajectory;
};

struct TrajectoryOptions {
  int trajectories = 200;
  std::uint64_t seed = 0;
  /// Step control: dt * ||H_eff|| <= step_scale.
  double step_scale = 0.1;
  std::vector<SparseOp> extra_jumps;
};

/// Monte-Carlo wave-function unravelling of the same Lindblad equation.
inline TrajectoryResult propagate_trajectories(const StateVec& psi0_in, const Basis& psi_basis, const PulseSchedule& schedule,
                                               const SystemModel& sys_in, const NoiseModel& noise,
                                               const TrajectoryOptions& topt) {
  schedule.validate(sys_in.reg);
  SystemModel sys = sys_in;
  if (noise.needs_sink() && !sys.basis.schemes()[0].has_sink()) sys = sys.with_sink();
  const StateVec psi0 = psi_basis == sys.basis ? psi0_in : embed(psi0_in, psi_basis, sys.basis);
  const Eigen::Index d = sys.basis.size();

  struct StepOps {
    TimeDependentHamiltonian h;
    std::vector<SparseOp> jumps;
    SparseOp decay;  // (1/2) sum L^dag L
    double norm;
  };
  std::vector<StepOps> ops;
  for (const auto& step : schedule.steps) {
    StepOps so{step_hamiltonian(sys, step), jump_operators(sys, noise, &step), SparseOp(d, d), 0.0};
    for (const auto& j : topt.extra_jumps) so.jumps.push_back(j);
    for (const auto& j : so.jumps) so.decay += SparseOp(0.5 * (SparseOp(j.adjoint()) * j));
    so.norm = so.h.norm_bound() + one_norm(so.decay);
    ops.push_back(std::move(so));
  }

  TrajectoryResult res{DenseOp::Zero(d, d), Eigen::VectorXd::Zero(d), {}};
  for (int tr = 0; tr < topt.trajectories; ++tr) {
    CounterRng rng(topt.seed, derive_stream("trajectory", static_cast<std::uint64_t>(tr)));
    StateVec psi = psi0;
    double r = rng.uniform_open0();
    int njumps = 0;
    for (std::size_t si = 0; si < schedule.steps.size(); ++si) {
      const auto& so = ops[si];
      const double dur = schedule.steps[si].duration;
      if (dur <= 0.0) continue;
      const int steps = std::max(1, static_cast<int>(std::ceil(dur * std::max(so.norm, 1e-12) / topt.step_scale)));
      const double dt = dur / steps;
      // H_eff(t) = H(t) - i decay; midpoint sampling.
      auto advance = [&](const StateVec& x, double ta, double tb) {
        const SparseOp heff = so.h.at(0.5 * (ta + tb));
        auto apply = [&](const StateVec& v, StateVec& y) {
          y.noalias() = heff * v;
          y.noalias() += -kI * (so.decay * v);
        };
        return expmv(apply, one_norm(heff) + one_norm(so.decay), x, tb - ta);
      };
      for (int s = 0; s < steps; ++s) {
        double ta = s * dt;
        const double tb = ta + dt;
        StateVec next = advance(psi, ta, tb);
        while (next.squaredNorm() <= r) {
          // bisection for the jump time inside [ta, tb]
          double lo = ta, hi = tb;
          for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (advance(psi, ta, mid).squaredNorm() <= r) hi = mid;
            else lo = mid;
          }
          StateVec at = advance(psi, ta, hi);
          Eigen::VectorXd w(so.jumps.size());
          std::vector<StateVec> cand;
          for (std::size_t k = 0; k < so.jumps.size(); ++k) {
            cand.push_back(so.jumps[k] * at);
            w(static_cast<Eigen::Index>(k)) = cand.back().squaredNorm();
          }
          const double tot = w.sum();
          if (!(tot > 0.0)) throw NumericalError("dynamics", "jump with vanishing channel weights");
          double u = rng.uniform() * tot;
          std::size_t k = 0;
          while (k + 1 < cand.size() && u >= w(static_cast<Eigen::Index>(k))) u -= w(static_cast<Eigen::Index>(k++));
          psi = cand[k] / cand[k].norm();
          ++njumps;
          r = rng.uniform_open0();
          ta = hi;
          next = advance(psi, ta, tb);
        }
        psi = next;
      }
    }
    psi /= psi.norm();
    res.rho += psi * psi.adjoint();
    res.populations += psi.cwiseAbs2();
    res.jumps_per_trajectory.push_back(njumps);
  }
  res.rho /= topt.trajectories;
  res.populations /= topt.trajectories;
  return res;
}

// ---------------------------------------------------------------------------
// Observables and sampling

inline double expectation(const QuantumState& s, const SparseOp& obs) {
  if (obs.rows() != s.dim() || obs.cols() != s.dim()) throw Error("dynamics", "observable dimension mismatch");
  cplx v;
  if (s.is_density()) {
    v = (obs * s.rho()).trace();
  } else {
    v = s.psi().dot(obs * s.psi());
  }
  if (std::abs(v.imag()) > 1e-10 * std::max(1.0, std::abs(v.real())))
    throw Error("dynamics", "observable is not Hermitian (complex expectation value)");
  return v.real();
}

/// Pauli-Z expectation of site j (Z|0> = +|0>).
inline SparseOp z_operator(const Basis& b, std::size_t j) {
  OpBuilder ob(b);
  add_pauli(ob, QubitMap::of(b), j, Pauli::Z, 1.0);
  return ob.build();
}

inline SparseOp x_operator(const Basis& b, std::size_t j) {
  OpBuilder ob(b);
  add_pauli(ob, QubitMap::of(b), j, Pauli::X, 1.0);
  return ob.build();
}

inline SparseOp zz_operator(const Basis& b, std::size_t j, std::size_t k) {
  OpBuilder ob(b);
  add_pauli_pair(ob, QubitMap::of(b), j, Pauli::Z, k, Pauli::Z, 1.0);
  return ob.build();
}

/// Level population |l><l| on site j.
inline SparseOp level_projector(const Basis& b, std::size_t j, int l) {
  OpBuilder ob(b);
  ob.add_local(j, l, l, 1.0);
  return ob.build();
}

/// Multinomial shot sampling. Shot i draws from its own counter stream, so any
/// subset of shots can be reproduced independently.
inline std::map<std::string, long> sample_measurements(const QuantumState& s, long n_shots, std::uint64_t seed) {
  if (n_shots < 1) throw Error("dynamics", "n_shots must be >= 1");
  const Eigen::VectorXd p = s.populations().cwiseMax(0.0);
  std::vector<double> cdf(static_cast<std::size_t>(p.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) cdf[static_cast<std::size_t>(i)] = (acc += p(i));
  std::vector<long> hits(cdf.size(), 0);
  for (long shot = 0; shot < n_shots; ++shot) {
    CounterRng rng(seed, derive_stream("shot", static_cast<std::uint64_t>(shot)));
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    while (p(static_cast<Eigen::Index>(idx)) == 0.0 && idx > 0) --idx;
    ++hits[idx];
  }
  std::map<std::string, long> counts;
  for (std::size_t i = 0; i < hits.size(); ++i)
    if (hits[i]) counts[basis_label(s.basis(), static_cast<Eigen::Index>(i))] += hits[i];
  return counts;
}

/// Independent N(0, sigma^2) detuning offsets per site for shot `shot`.
inline std::vector<double> sample_disorder(const NoiseModel& noise, std::size_t n_sites, std::uint64_t seed,
                                           std::uint64_t shot = 0) {
  noise.validate();
  std::vector<double> off(n_sites, 0.0);
  if (noise.sigma_doppler == 0.0) return off;
  CounterRng rng(seed, derive_stream("disorder", shot));
  for (auto& o : off) o = noise.sigma_doppler * rng.normal();
  return off;
}

/// Average of final density matrices over `shots` disorder realizations.
inline QuantumState propagate_disorder_average(const QuantumState& state, const PulseSchedule& schedule,
                                               const SystemModel& sys, const NoiseModel& noise, int shots,
                                               std::uint64_t seed) {
  if (shots < 1) throw Error("dynamics", "need at least one disorder shot");
  DenseOp acc;
  Basis basis;
  for (int s = 0; s < shots; ++s) {
    SystemModel m = sys;
    m.disorder = sample_disorder(noise, sys.reg.size(), seed, static_cast<std::uint64_t>(s));
    auto out = propagate(state, schedule, m, &noise);
    DenseOp r = out.density();
    if (s == 0) {
      acc = r;
      basis = out.basis();
    } else {
      acc += r;
    }
  }
  return QuantumState::mixed(basis, acc / shots);
}

}  // namespace rydberg
