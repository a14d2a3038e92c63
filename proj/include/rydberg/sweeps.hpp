#pragma once

// Many-body protocols on spin models: piecewise-linear ramps, ground states
// with Z_q order detection, correlation maps and quenches.

#include "rydberg/dynamics.hpp"


namespace rydberg {

struct RampSchedule {
  std::vector<double> t;      ///< knot times (us), strictly increasing from 0
  std::vector<double> omega;  ///< rad/us
  std::vector<double> delta;  ///< rad/us

  void validate() const {
    if (t.size() < 2 || omega.size() != t.size() || delta.size() != t.size())
      throw Error("sweeps", "ramp needs >= 2 knots with matching omega/delta");
    if (t.front() != 0.0) throw Error("sweeps", "ramp must start at t = 0");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!std::isfinite(t[i]) || !std::isfinite(omega[i]) || !std::isfinite(delta[i]))
        throw Error("sweeps", "ramp knots must be finite");
      if (i > 0 && !(t[i] > t[i - 1]))
        throw Error("sweeps", "ramp knot times must be strictly increasing");
    }
  }

  double duration() const { return t.back(); }

  double omega_at(double x) const { return interp(omega, x); }
  double delta_at(double x) const { return interp(delta, x); }

  /// Omega up at fixed Delta_start, Delta sweep, Omega down at Delta_end.
  static RampSchedule standard(double omega_max, double delta_start, double delta_end, double t_up, double t_sweep,
                               double t_down) {
    RampSchedule r;
    r.t = {0.0, t_up, t_up + t_sweep, t_up + t_sweep + t_down};
    r.omega = {0.0, omega_max, omega_max, 0.0};
    r.delta = {delta_start, delta_start, delta_end, delta_end};
    r.validate();
    return r;
  }

  RampSchedule scaled(double factor) const {
    if (!(factor > 0.0)) throw Error("sweeps", "time scale must be positive");
    RampSchedule r = *this;
    for (auto& x : r.t) x *= factor;
    return r;
  }

  RampSchedule reversed() const {
    RampSchedule r;
    const double T = duration();
    for (std::size_t i = t.size(); i-- > 0;) {
      r.t.push_back(T - t[i]);
      r.omega.push_back(omega[i]);
      r.delta.push_back(delta[i]);
    }
    return r;
  }

 private:
  double interp(const std::vector<double>& v, double x) const {
    if (x <= t.front()) return v.front();
    if (x >= t.back()) return v.back();
    auto it = std::upper_bound(t.begin(), t.end(), x);
    const auto i = static_cast<std::size_t>(it - t.begin());
    const double w = (x - t[i - 1]) / (t[i] - t[i - 1]);
    return v[i - 1] + w * (v[i] - v[i - 1]);
  }
};

/// A spin model split into its field-independent part and the unit drive and
/// detuning operators: H = H_int + Omega * D_x + Delta * D_z.
struct SweepSystem {
  ManyBodyModel model;
  Basis basis;
  SparseOp interaction;
  SparseOp drive;
  SparseOp detuning;

  std::size_t sites() const { return basis.sites(); }

  SparseOp hamiltonian(double omega, double delta) const {
    return SparseOp(interaction + cplx(omega) * drive + cplx(delta) * detuning);
  }
};

/// Full two-level basis for ising/xy/xxz; pxp needs the blockade graph.
inline SweepSystem make_sweep_system(ModelKind kind, const Eigen::MatrixXd& couplings, double anisotropy = 0.0,
                                     const BlockadeGraph* graph = nullptr) {
  const auto n = static_cast<std::size_t>(couplings.rows());
  SweepSystem s;
  s.model = ManyBodyModel::uniform(kind, couplings, 0.0, 0.0, anisotropy);
  if (kind == ModelKind::pxp) {
    if (!graph) throw Error("sweeps", "pxp model needs a blockade graph");
    if (graph->size() != n) throw Error("sweeps", "blockade graph size differs from the model");
    s.basis = Basis::constrained(*graph);
  } else {
    s.basis = Basis::full(std::vector<int>(n, 2));
  }
  s.model.validate();
  auto with = [&](double om, double de) {
    ManyBodyModel m = s.model;
    m.omega.assign(n, om);
    m.delta.assign(n, de);
    return model_hamiltonian(m, s.basis);
  };
  s.interaction = with(0.0, 0.0);
  s.drive = SparseOp(with(1.0, 0.0) - s.interaction);
  s.detuning = SparseOp(with(0.0, 1.0) - s.interaction);
  s.drive.prune(cplx(0.0), 1e-14);
  s.detuning.prune(cplx(0.0), 1e-14);
  return s;
}

/// V_jk = V (a / r_jk)^p for a register, with a the smallest pair distance.
inline Eigen::MatrixXd power_law_couplings(const Register& reg, double v_nn, int p) {
  const auto n = static_cast<Eigen::Index>(reg.size());
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  double rmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k)
      rmin = std::min(rmin, (reg.site(static_cast<std::size_t>(j)).position - reg.site(static_cast<std::size_t>(k)).position).norm());
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k) {
      const double r = (reg.site(static_cast<std::size_t>(j)).position - reg.site(static_cast<std::size_t>(k)).position).norm();
      v(j, k) = v(k, j) = v_nn * std::pow(rmin / r, p);
    }
  return v;
}

/// Chain couplings V / |j - k|^p (open) or with minimum-image distance (periodic).
inline Eigen::MatrixXd chain_couplings(int n, double v_nn, int p, bool periodic = false, int range = 0) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      int d = k - j;
      if (periodic) d = std::min(d, n - d);
      if (range > 0 && d > range) continue;
      v(j, k) = v(k, j) = v_nn / std::pow(static_cast<double>(d), p);
    }
  return v;
}

// ---------------------------------------------------------------------------
// Observables

/// C(j,k) = <Z_j Z_k> - <Z_j><Z_k>.
inline Eigen::MatrixXd correlation_map(const QuantumState& s) {
  const std::size_t n = s.basis().sites();
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) z(static_cast<Eigen::Index>(j)) = expectation(s, z_operator(s.basis(), j));
  Eigen::MatrixXd c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j; k < n; ++k) {
      const auto a = static_cast<Eigen::Index>(j), b = static_cast<Eigen::Index>(k);
      const double zz = j == k ? 1.0 : expectation(s, zz_operator(s.basis(), j, k));
      c(a, b) = c(b, a) = zz - z(a) * z(b);
    }
  return c;
}

/// Average of C(j, j+d) over j for each distance d (minimum image when periodic).
inline std::vector<double> correlation_by_distance(const Eigen::MatrixXd& c, bool periodic) {
  const auto n = static_cast<int>(c.rows());
  const int dmax = periodic ? n / 2 : n - 1;
  std::vector<double> sum(static_cast<std::size_t>(dmax + 1), 0.0), cnt(sum.size(), 0.0);
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k) {
      int d = k - j;
      if (periodic) d = std::min(d, n - d);
      sum[static_cast<std::size_t>(d)] += c(j, k);
      cnt[static_cast<std::size_t>(d)] += 1.0;
    }
  for (std::size_t d = 0; d < sum.size(); ++d) sum[d] /= std::max(cnt[d], 1.0);
  return sum;
}

/// Basis-index probability of a 0/1 pattern string (0 when outside a constrained basis).
inline double pattern_probability(const QuantumState& s, std::string_view pattern) {
  if (pattern.size() != s.basis().sites()) throw Error("sweeps", "pattern length differs from the site count");
  std::vector<int> d;
  for (char ch : pattern) {
    if (ch != '0' && ch != '1') throw Error("sweeps", "patterns use only '0' and '1'");
    d.push_back(ch - '0');
  }
  const auto q = QubitMap::of(s.basis());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = d[j] ? q.one[j] : q.zero[j];
  auto i = s.basis().index_of_digits(d);
  if (!i) return 0.0;
  return s.populations()(*i);
}

inline std::string alternating_string(std::size_t n, int start) {
  std::string s(n, '0');
  for (std::size_t j = 0; j < n; ++j)
    if ((j + static_cast<std::size_t>(start)) % 2 == 1) s[j] = '1';
  return s;
}

/// Probability of the two alternating patterns combined.
inline double z2_probability(const QuantumState& s) {
  const auto n = s.basis().sites();
  return pattern_probability(s, alternating_string(n, 0)) + pattern_probability(s, alternating_string(n, 1));
}

/// m_q = sqrt(<|sum_j w^j n_j|^2>) / N with w = exp(2 pi i / q). Using the
/// second moment keeps translation-symmetric superpositions ordered.
inline double order_parameter(const QuantumState& s, int q) {
  if (q < 1) throw Error("sweeps", "order q must be >= 1");
  const Basis& b = s.basis();
  const auto qm = QubitMap::of(b);
  const Eigen::VectorXd p = s.populations();
  const std::size_t n = b.sites();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    if (p(i) == 0.0) continue;
    const auto d = b.digits(i);
    cplx sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (d[j] == qm.one[j]) sum += std::exp(kI * (kTwoPi * static_cast<double>(j) / q));
    acc += p(i) * std::norm(sum);
  }
  return std::sqrt(acc) / static_cast<double>(n);
}

/// Dominant spacing between consecutive excitations of a 0/1 configuration
/// (bit j = site j): 0 with no excitations, the most common gap otherwise
/// (ties resolved towards the larger gap, which favours the bulk period).
inline int dominant_period(const std::vector<int>& config) {
  std::vector<int> pos;
  for (std::size_t j = 0; j < config.size(); ++j)
    if (config[j]) pos.push_back(static_cast<int>(j));
  if (pos.empty()) return 0;
  if (pos.size() == 1) return static_cast<int>(config.size());
  std::map<int, int> hist;
  for (std::size_t i = 1; i < pos.size(); ++i) ++hist[pos[i] - pos[i - 1]];
  int best = 0, cnt = -1;
  for (auto [g, c] : hist)
    if (c >= cnt) {
      best = g;
      cnt = c;
    }
  return best;
}

// ---------------------------------------------------------------------------
// Ground states

struct GroundState {
  double energy = 0.0;
  double gap = 0.0;  ///< to the next Ritz value found
  bool degenerate = false;
  bool converged = true;
  QuantumState state;
  std::vector<int> dominant_config;  ///< most probable 0/1 configuration
  int period = 0;                    ///< dominant_period of that configuration
  double density = 0.0;              ///< <n_j> averaged over sites
  std::map<int, double> order;       ///< m_q for q = 2, 3, 4
  int detected_q = 0;                ///< see detect_order
};

/// Z_q classification from the order parameters: 0 below density 0.05, 1 above
/// 0.75, otherwise the q in {2, 3, 4} with the largest m_q (ties go to larger q,
/// since a perfect Z_4 pattern also carries m_2 = 1/4).
inline int detect_order(double density, const std::map<int, double>& m) {
  if (density < 0.05) return 0;
  if (density > 0.75) return 1;
  int best = 2;
  for (int q : {3, 4})
    if (m.at(q) >= m.at(best) - 1e-9) best = q;
  return best;
}

inline constexpr Eigen::Index kDenseGroundLimit = 1024;

struct LanczosResult {
  std::vector<double> values;
  std::vector<StateVec> vectors;
  bool converged = false;
};

/// Lowest two eigenpairs by Lanczos with full reorthogonalisation. Restarts
/// from the sum of the two lowest Ritz vectors keep both in the Krylov space.
inline LanczosResult lanczos_lowest(const SparseOp& h, std::uint64_t seed = 0, int krylov = 120, int restarts = 30,
                                    double tol = 1e-9) {
  const Eigen::Index d = h.rows();
  CounterRng rng(seed, derive_stream("lanczos", 0));
  StateVec v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = cplx(rng.normal(), 0.0);
  v.normalize();
  const double scale = std::max(one_norm(h), 1e-300);
  LanczosResult out;
  for (int rs = 0; rs <= restarts; ++rs) {
    const int m = static_cast<int>(std::min<Eigen::Index>(krylov, d));
    std::vector<StateVec> q{v};
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    int used = m;
    for (int j = 0; j < m; ++j) {
      StateVec w = h * q[static_cast<std::size_t>(j)];
      t(j, j) = q[static_cast<std::size_t>(j)].dot(w).real();
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& qq : q) w -= qq.dot(w) * qq;
      const double beta = w.norm();
      if (j + 1 == m) break;
      if (beta < 1e-12 * scale) {
        used = j + 1;
        break;
      }
      t(j, j + 1) = t(j + 1, j) = beta;
      q.push_back(w / beta);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t.topLeftCorner(used, used));
    const int k = std::min(2, used);
    out.values.clear();
    out.vectors.clear();
    double worst = 0.0;
    for (int e = 0; e < k; ++e) {
      StateVec x = StateVec::Zero(d);
      for (int j = 0; j < used; ++j) x += es.eigenvectors()(j, e) * q[static_cast<std::size_t>(j)];
      x.normalize();
      const double lam = es.eigenvalues()(e);
      worst = std::max(worst, (h * x - lam * x).norm());
      out.values.push_back(lam);
      out.vectors.push_back(x);
    }
    // only the ground pair must converge; the second value is used for the gap
    const double res0 = (h * out.vectors[0] - out.values[0] * out.vectors[0]).norm();
    if (res0 < tol * scale && (worst < 1e-6 * scale || used < m)) {
      out.converged = true;
      return out;
    }
    v = out.vectors[0] + (k > 1 ? out.vectors[1] : StateVec::Zero(d));
    v.normalize();
  }
  return out;
}

inline GroundState ground_state(const SweepSystem& sys, double omega, double delta, std::uint64_t seed = 0) {
  const SparseOp h = sys.hamiltonian(omega, delta);
  const Eigen::Index d = h.rows();
  GroundState g;
  StateVec v0;
  const double scale = std::max(one_norm(h), 1.0);
  bool diagonal = true;
  for (int k = 0; k < h.outerSize() && diagonal; ++k)
    for (SparseOp::InnerIterator it(h, k); it; ++it)
      if (it.row() != it.col() && it.value() != cplx(0.0)) {
        diagonal = false;
        break;
      }
  if (diagonal) {
    // classical limit: the spectrum is the diagonal itself
    const Eigen::VectorXd e = StateVec(h.diagonal()).real();
    Eigen::Index i0;
    g.energy = e.minCoeff(&i0);
    double second = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < d; ++i)
      if (i != i0) second = std::min(second, e(i));
    g.gap = d > 1 ? second - g.energy : 0.0;
    v0 = StateVec::Zero(d);
    v0(i0) = 1.0;
  } else if (d <= kDenseGroundLimit) {
    Eigen::SelfAdjointEigenSolver<DenseOp> es{DenseOp(h)};
    g.energy = es.eigenvalues()(0);
    g.gap = d > 1 ? es.eigenvalues()(1) - es.eigenvalues()(0) : 0.0;
    v0 = es.eigenvectors().col(0);
  } else {
    auto l = lanczos_lowest(h, seed);
    if (!l.converged) throw NumericalError("sweeps", "Lanczos ground-state search did not converge");
    g.energy = l.values[0];
    g.gap = l.values.size() > 1 ? l.values[1] - l.values[0] : 0.0;
    v0 = l.vectors[0];
  }
  g.degenerate = g.gap < 1e-8 * scale;
  g.state = QuantumState::pure(sys.basis, v0);
  Eigen::Index imax;
  v0.cwiseAbs2().maxCoeff(&imax);
  const auto digits = sys.basis.digits(imax);
  g.dominant_config = digits;
  g.period = dominant_period(digits);
  for (int q : {2, 3, 4}) g.order[q] = order_parameter(g.state, q);
  g.density = expectation(g.state, number_sum(sys.basis)) / static_cast<double>(sys.sites());
  g.detected_q = detect_order(g.density, g.order);
  return g;
}

struct ClassicalMinimum {
  double energy = 0.0;
  std::vector<std::vector<int>> configs;  ///< all minimisers within tolerance
};

/// Exhaustive minimisation of sum_{j<k} V_jk n_j n_k - Delta sum_j n_j.
inline ClassicalMinimum classical_ground_state(const Eigen::MatrixXd& v, double delta) {
  const auto n = static_cast<int>(v.rows());
  if (n > 24) throw Error("sweeps", "brute-force search limited to 24 sites");
  ClassicalMinimum best;
  best.energy = std::numeric_limits<double>::infinity();
  const double tol = 1e-12 * std::max({1.0, v.cwiseAbs().maxCoeff(), std::abs(delta)}) * n * n;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double e = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!(mask >> j & 1U)) continue;
      e -= delta;
      for (int k = j + 1; k < n; ++k)
        if (mask >> k & 1U) e += v(j, k);
    }
    if (e < best.energy - tol) {
      best.energy = e;
      best.configs.clear();
    }
    if (e <= best.energy + tol) {
      std::vector<int> c(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) c[static_cast<std::size_t>(j)] = static_cast<int>(mask >> j & 1U);
      best.configs.push_back(c);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Sweeps and quenches

struct SweepNoise {
  double dephasing = 0.0;  ///< gamma: L = sqrt(gamma) n_j
  double decay = 0.0;      ///< L = sqrt(Gamma) |0><1|_j
};

inline std::vector<SparseOp> sweep_jumps(const Basis& b, const SweepNoise& n) {
  std::vector<SparseOp> out;
  const auto q = QubitMap::of(b);
  for (std::size_t j = 0; j < b.sites(); ++j) {
    if (n.dephasing > 0.0) {
      OpBuilder ob(b);
      ob.add_local(j, q.one[j], q.one[j], std::sqrt(n.dephasing));
      out.push_back(ob.build());
    }
    if (n.decay > 0.0) {
      OpBuilder ob(b);
      ob.add_local(j, q.zero[j], q.one[j], std::sqrt(n.decay));
      out.push_back(ob.build());
    }
  }
  return out;
}

struct SweepSample {
  double t;
  double omega;
  double delta;
  double z2_probability;
  double rydberg_density;
};

struct SweepResult {
  QuantumState state;
  Eigen::MatrixXd correlations;
  double z2_probability = 0.0;
  double ground_overlap = 0.0;  ///< |<g(Omega_end, Delta_end)|psi>|^2 (pure states)
  std::vector<SweepSample> samples;
};

inline TimeDependentHamiltonian ramp_segment(const SweepSystem& sys, const RampSchedule& r, std::size_t i) {
  TimeDependentHamiltonian h;
  h.fixed = sys.interaction;
  const double t0 = r.t[i], t1 = r.t[i + 1];
  const double o0 = r.omega[i], o1 = r.omega[i + 1], d0 = r.delta[i], d1 = r.delta[i + 1];
  const double dur = t1 - t0;
  h.terms.push_back({sys.drive, [=](double t) { return o0 + (o1 - o0) * t / dur; }, std::max(std::abs(o0), std::abs(o1))});
  h.terms.push_back({sys.detuning, [=](double t) { return d0 + (d1 - d0) * t / dur; }, std::max(std::abs(d0), std::abs(d1))});
  return h;
}

/// Propagates from all sites in |0> (or `initial`) through the ramp.
inline SweepResult adiabatic_sweep(const SweepSystem& sys, const RampSchedule& ramp, const SweepNoise* noise = nullptr,
                                   int samples_per_segment = 0, const std::optional<QuantumState>& initial = std::nullopt) {
  ramp.validate();
  QuantumState cur = initial ? *initial : QuantumState::pure(sys.basis, basis_state(sys.basis, std::vector<int>(sys.sites(), 0)));
  if (!(cur.basis() == sys.basis)) throw Error("sweeps", "initial state basis differs from the system");
  const auto jumps = noise ? sweep_jumps(sys.basis, *noise) : std::vector<SparseOp>{};
  if (!jumps.empty() && !cur.is_density()) cur = cur.to_density();
  SweepResult res;
  const SparseOp nsum = number_sum(sys.basis);
  auto record = [&](double t) {
    res.samples.push_back({t, ramp.omega_at(t), ramp.delta_at(t), z2_probability(cur),
                           expectation(cur, nsum) / static_cast<double>(sys.sites())});
  };
  if (samples_per_segment > 0) record(0.0);
  for (std::size_t i = 0; i + 1 < ramp.t.size(); ++i) {
    const double dur = ramp.t[i + 1] - ramp.t[i];
    if (dur <= 0.0) continue;
    const auto h = ramp_segment(sys, ramp, i);
    const int chunks = std::max(1, samples_per_segment);
    for (int c = 0; c < chunks; ++c) {
      const double a = dur * c / chunks, b = dur * (c + 1) / chunks;
      if (cur.is_density()) cur.rho_mut() = evolve_lindblad(cur.rho(), h, jumps, a, b);
      else cur.psi_mut() = evolve_pure(cur.psi(), h, a, b);
      if (samples_per_segment > 0) record(ramp.t[i] + b);
    }
  }
  res.state = cur;
  res.correlations = correlation_map(cur);
  res.z2_probability = z2_probability(cur);
  if (!cur.is_density()) {
    const auto g = ground_state(sys, ramp.omega.back(), ramp.delta.back());
    res.ground_overlap = std::norm(g.state.psi().dot(cur.psi()));
  }
  return res;
}

struct QuenchSample {
  double t;
  double p_initial;
  double p_partner;  ///< complementary pattern (bitwise inverse)
  double domain_walls;  ///< fraction of nearest-neighbour bonds with equal values
};

/// Constant-field evolution from a 0/1 pattern, sampled at n_samples + 1 times.
inline std::vector<QuenchSample> quench_dynamics(const SweepSystem& sys, std::string_view pattern, double omega,
                                                 double delta, double duration, int n_samples, bool periodic = false) {
  if (pattern.size() != sys.sites()) throw Error("sweeps", "pattern length differs from the site count");
  if (!(duration >= 0.0) || n_samples < 1) throw Error("sweeps", "quench needs duration >= 0 and at least one sample");
  std::vector<int> digits;
  for (char ch : pattern) {
    if (ch != '0' && ch != '1') throw Error("sweeps", "patterns use only '0' and '1'");
    digits.push_back(ch - '0');
  }
  std::string partner(pattern);
  for (auto& ch : partner) ch = ch == '0' ? '1' : '0';
  QuantumState s = QuantumState::pure(sys.basis, basis_state(sys.basis, digits));
  const SparseOp h = sys.hamiltonian(omega, delta);

  // domain-wall operator: sum over bonds of [n_j == n_k]
  const std::size_t n = sys.sites();
  const std::size_t bonds = periodic ? n : n - 1;
  Eigen::VectorXd walls(sys.basis.size());
  for (Eigen::Index i = 0; i < sys.basis.size(); ++i) {
    const auto d = sys.basis.digits(i);
    int c = 0;
    for (std::size_t j = 0; j < bonds; ++j) c += d[j] == d[(j + 1) % n];
    walls(i) = bonds ? static_cast<double>(c) / static_cast<double>(bonds) : 0.0;
  }

  std::vector<QuenchSample> out;
  const double dt = duration / n_samples;
  DenseOp u;
  const bool dense = sys.basis.size() <= kDenseEigLimit;
  if (dense) u = unitary_from_hermitian(DenseOp(h), dt);
  for (int k = 0; k <= n_samples; ++k) {
    if (k > 0) s.psi_mut() = dense ? StateVec(u * s.psi()) : expmv(h, s.psi(), dt);
    const Eigen::VectorXd p = s.populations();
    out.push_back({k * dt, pattern_probability(s, pattern), pattern_probability(s, partner), p.dot(walls)});
  }
  return out;
}

/// Height of the first revival above the preceding minimum. The decay is the
/// stretch after the series first drops below half its initial value; the
/// revival is the peak reached once it climbs back out of that stretch.
inline double first_revival_contrast(const std::vector<double>& series) {
  if (series.empty()) return 0.0;
  const double half = 0.5 * series.front();
  const std::size_t n = series.size();
  std::size_t i = 0;
  while (i < n && series[i] >= half) ++i;
  if (i >= n) return 0.0;
  double lo = series[i];
  std::size_t j = i;
  while (j < n && series[j] < half) lo = std::min(lo, series[j++]);
  if (j >= n) {
    // never back above half: take the tallest bump after the deepest point
    const auto m = std::min_element(series.begin() + static_cast<std::ptrdiff_t>(i), series.end());
    return *std::max_element(m, series.end()) - *m;
  }
  double hi = series[j];
  while (j + 1 < n && series[j + 1] >= hi) hi = series[++j];
  return hi - lo;
}

}  // namespace rydberg
