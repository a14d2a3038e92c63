#pragma once

// Named gate protocols as pulse schedules, ideal gate matrices, process
// extraction and phase-equivalence checks.

#include "rydberg/dynamics.hpp"
#include "rydberg/optimize.hpp"

#include <cstdio>
#include <iomanip>
#include <limits>

namespace rydberg {

using Mat2 = Eigen::Matrix2cd;

/// e^{i Delta tau / 2} exp(-i (Omega~ tau / 2) v.sigma), v = (Omega cos phi, -Omega sin phi, Delta) / Omega~.
inline Mat2 single_qubit_unitary(double omega, double delta, double phi, double tau) {
  if (tau < 0.0) throw Error("gates", "pulse duration must be >= 0");
  const double w = std::hypot(omega, delta);
  Mat2 u = Mat2::Identity();
  if (w > 0.0) {
    const double vx = omega * std::cos(phi) / w, vy = -omega * std::sin(phi) / w, vz = delta / w;
    Mat2 vs;
    vs << vz, cplx(vx, -vy), cplx(vx, vy), -vz;
    const double a = 0.5 * w * tau;
    u = std::cos(a) * Mat2::Identity() - kI * std::sin(a) * vs;
  }
  return std::exp(kI * 0.5 * delta * tau) * u;
}

inline Mat2 uxy(double theta, double phi) {
  Mat2 u;
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  u << c, -kI * s * std::exp(kI * phi), -kI * s * std::exp(-kI * phi), c;
  return u;
}

inline Mat2 hadamard() {
  Mat2 h;
  h << 1.0, 1.0, 1.0, -1.0;
  return h / std::sqrt(2.0);
}

/// Single-qubit operator on qubit q of n (qubit 0 most significant).
inline DenseOp on_qubit(const Mat2& u, int q, int n) {
  DenseOp out = DenseOp::Identity(1, 1);
  for (int j = 0; j < n; ++j) {
    DenseOp f = j == q ? DenseOp(u) : DenseOp::Identity(2, 2);
    out = Eigen::kroneckerProduct(out, f).eval();
  }
  return out;
}

struct IdealParams {
  double theta = kPi;
  double phi = 0.0;
  std::vector<double> phases;  ///< CPHASE: Phi_00, Phi_01, Phi_10, Phi_11
  int k = 2;                   ///< CkZ control count
};

/// Ideal matrices in the ordered basis |0..0>, ..., |1..1>; control is qubit 0,
/// target the last qubit.
inline DenseOp ideal_gate(std::string_view name, const IdealParams& p = {}) {
  if (name == "CUxy") {
    DenseOp u = DenseOp::Identity(4, 4);
    u.topLeftCorner(2, 2) = uxy(p.theta, p.phi);
    return u;
  }
  if (name == "pCUxy") {
    const double c = std::cos(p.theta / 2), c4 = std::cos(p.theta / 4), s4 = std::sin(p.theta / 4);
    auto s = [&](double ph) { return -kI * std::sin(p.theta / 2) * std::exp(kI * ph) / std::sqrt(2.0); };
    DenseOp u = DenseOp::Zero(4, 4);
    u(0, 0) = c;
    u(0, 1) = u(0, 2) = s(p.phi);
    u(1, 0) = u(2, 0) = s(-p.phi);
    u(1, 1) = u(2, 2) = c4 * c4;
    u(1, 2) = u(2, 1) = -s4 * s4;
    u(3, 3) = 1.0;
    return u;
  }
  if (name == "CPHASE") {
    if (p.phases.size() != 4) throw Error("gates", "CPHASE needs four phases");
    DenseOp u = DenseOp::Zero(4, 4);
    for (int i = 0; i < 4; ++i) u(i, i) = std::exp(kI * p.phases[static_cast<std::size_t>(i)]);
    return u;
  }
  if (name == "CZ") {
    DenseOp u = DenseOp::Identity(4, 4);
    u(3, 3) = -1.0;
    return u;
  }
  if (name == "CkZ") {
    if (p.k < 1) throw Error("gates", "CkZ needs k >= 1");
    const Eigen::Index d = Eigen::Index{1} << (p.k + 1);
    DenseOp u = DenseOp::Identity(d, d);
    u(d - 1, d - 1) = -1.0;
    return u;
  }
  if (name == "XY") {
    DenseOp u = DenseOp::Identity(4, 4);
    u(1, 1) = u(2, 2) = std::cos(p.theta / 2);
    u(1, 2) = u(2, 1) = -kI * std::sin(p.theta / 2);
    return u;
  }
  if (name == "CNOT") {
    DenseOp u = DenseOp::Identity(4, 4);
    u.bottomRightCorner(2, 2) << 0.0, 1.0, 1.0, 0.0;
    return u;
  }
  if (name == "CNOT0") {
    DenseOp u = DenseOp::Identity(4, 4);
    u.topLeftCorner(2, 2) << 0.0, 1.0, 1.0, 0.0;
    return u;
  }
  if (name == "Toffoli") {
    DenseOp u = DenseOp::Identity(8, 8);
    u.bottomRightCorner(2, 2) << 0.0, 1.0, 1.0, 0.0;
    return u;
  }
  throw Error("gates", "unknown ideal gate '" + std::string(name) + "'");
}

enum class XYVariant { generalized, bare };

struct GateParams {
  double omega = kTwoPi;  ///< rad/us; Omega of the driving pulses (Omega_1 for XY, Omega_c for CkZ)
  double v_over_omega = 200.0;
  double spacing = 5.0;  ///< um
  double theta = kPi;
  double phi = 0.0;
  bool phase_compensation = true;  ///< CUxy/pCUxy: V = 2 pi m / tau_g
  int m = 0;                       ///< 0 picks the smallest m with V/Omega >= v_over_omega
  double tau2 = 0.0;               ///< Model A wait; 0 means pi/|V|
  bool ideal_transfer = true;       ///< Model A: interactions off during the transfer pulses
  double pcz_delta = 0.377;  ///< Delta / Omega
  double pcz_phi = 3.90242;
  double pcz_time = 2.7328 * kPi;  ///< tau_g Omega
  double xy_theta = kPi;
  XYVariant xy_variant = XYVariant::generalized;
  double target_omega = 0.0;  ///< CkZ target Rabi frequency; 0 means omega
  int controls = 2;
  double blockade_min = 10.0;  ///< warn below this V/Omega
  std::string species_control = "Rb87";
  std::string species_target = "Rb87";
};

struct GateProtocol {
  std::string name;
  GateParams params;
  Register reg;
  std::vector<PairCoupling> couplings;
  PulseSchedule schedule;
  std::vector<std::size_t> controls;
  std::vector<std::size_t> targets;
  DenseOp ideal;
  double v = 0.0;  ///< control-target interaction strength used

  SystemModel system(bool with_sink = false) const { return SystemModel::make(reg, couplings, with_sink); }
  double gate_time() const { return schedule.total_duration(); }
  int qubits() const { return static_cast<int>(reg.size()); }
};

namespace detail {

inline DriveSegment seg(std::vector<std::size_t> t, Level a, Level b, double omega, double delta, double phi, double dur) {
  DriveSegment s;
  s.targets = std::move(t);
  s.a = a;
  s.b = b;
  s.omega = omega;
  s.delta = delta;
  s.phi = phi;
  s.duration = dur;
  return s;
}

inline PulseStep step(std::vector<DriveSegment> segs, double dur, bool inter, std::string label) {
  return PulseStep{std::move(segs), dur, inter, std::move(label)};
}

/// U_xy(theta, phi) on the qubit transition of `site`.
inline PulseStep rotation(const Register& reg, std::size_t site, double theta, double phi, double omega, std::string label) {
  const auto& s = reg.site(site).levels;
  const double dur = theta / omega;
  return step({seg({site}, s.zero(), s.one(), omega, 0.0, phi, dur)}, dur, true, std::move(label));
}

inline Register pair_register(const GateParams& p, const LevelScheme& scheme) {
  auto reg = build_lattice(LatticeKind::chain, {2}, p.spacing, {0.0, 0.0, 0.0, Vec3::UnitZ(), scheme});
  return reg.with_species(0, p.species_control).with_species(1, p.species_target);
}

inline void blockade_warning(const std::string& name, double v, double omega, double min_ratio) {
  if (std::abs(v) / omega < min_ratio)
    std::cerr << "warning: gates: " << name << " blockade ratio |V|/Omega = " << std::abs(v) / omega << " below "
              << min_ratio << '\n';
}

}  // namespace detail

/// Pulse-sequence constructor for the named protocol.
/// Names: CUxy, pCUxy, CPHASE_A, CZ_B, pCZ, XY, CkZ, Toffoli, CNOT_hadamard, CNOT_rx, CNOT_swap.
inline GateProtocol build_protocol(const std::string& name, const GateParams& p) {
  using detail::seg;
  using detail::step;
  if (!(p.omega > 0.0)) throw Error("gates", "omega must be positive");
  if (!(p.v_over_omega > 0.0)) throw Error("gates", "v_over_omega must be positive");
  GateProtocol g;
  g.name = name;
  g.params = p;
  const double om = p.omega;
  double v = p.v_over_omega * om;

  if (name == "CUxy" || name == "pCUxy") {
    const bool par = name == "pCUxy";
    g.reg = detail::pair_register(p, LevelScheme::gr());
    const double om_pulse = om;
    const double tau = par ? p.theta / (std::sqrt(2.0) * om_pulse) : p.theta / om_pulse;
    if (!(tau > 0.0)) throw Error("gates", "rotation angle must be positive");
    if (p.phase_compensation) {
      int m = p.m;
      if (m <= 0) m = std::max(1, static_cast<int>(std::ceil(p.v_over_omega * om_pulse * tau / kTwoPi - 1e-9)));
      v = kTwoPi * m / tau;
    }
    g.couplings = {PairCoupling::vdw_for(v, p.spacing)};
    g.controls = par ? std::vector<std::size_t>{} : std::vector<std::size_t>{0};
    g.targets = par ? std::vector<std::size_t>{0, 1} : std::vector<std::size_t>{1};
    std::vector<std::size_t> driven = par ? std::vector<std::size_t>{0, 1} : std::vector<std::size_t>{1};
    g.schedule.steps.push_back(step({seg(driven, Level::g0, Level::r, om_pulse, 0.0, p.phi, tau)}, tau, true, "drive"));
    g.ideal = ideal_gate(name, {p.theta, p.phi, {}, 2});
  } else if (name == "CPHASE_A") {
    g.reg = detail::pair_register(p, LevelScheme::gg());
    g.couplings = {PairCoupling::vdw_for(v, p.spacing)};
    const double t1 = kPi / om;
    const double t2 = p.tau2 > 0.0 ? p.tau2 : kPi / std::abs(v);
    const bool inter = !p.ideal_transfer;
    g.controls = {0};
    g.targets = {1};
    g.schedule.steps = {step({seg({0, 1}, Level::r, Level::g1, om, 0.0, 0.0, t1)}, t1, inter, "pi 1->r"),
                        step({}, t2, true, "wait"),
                        step({seg({0, 1}, Level::r, Level::g1, om, 0.0, 0.0, t1)}, t1, inter, "pi r->1")};
    g.ideal = ideal_gate("CPHASE", {0, 0, {0.0, kPi, kPi, wrap_phase(-v * t2)}, 2});
  } else if (name == "CZ_B" || name == "CNOT_hadamard" || name == "CNOT_rx" || name == "CNOT_swap") {
    g.reg = detail::pair_register(p, LevelScheme::gg());
    g.couplings = {PairCoupling::vdw_for(v, p.spacing)};
    g.controls = {0};
    g.targets = {1};
    const double t1 = kPi / om;
    auto& st = g.schedule.steps;
    if (name == "CNOT_hadamard") {
      st.push_back(detail::rotation(g.reg, 1, kPi / 2, -kPi / 2, om, "H: U_xy(pi/2,-pi/2)"));
      st.push_back(detail::rotation(g.reg, 1, kPi, 0.0, om, "H: U_xy(pi,0)"));
    } else if (name == "CNOT_rx") {
      st.push_back(detail::rotation(g.reg, 1, kPi / 2, 0.0, om, "R_x(pi/2)"));
    }
    st.push_back(step({seg({0}, Level::r, Level::g1, om, 0.0, 0.0, t1)}, t1, true, "control pi 1->r"));
    if (name == "CNOT_swap") {
      st.push_back(step({seg({1}, Level::r, Level::g1, om, 0.0, 0.0, t1)}, t1, true, "target pi 1->r"));
      st.push_back(step({seg({1}, Level::r, Level::g0, om, 0.0, 0.0, t1)}, t1, true, "target pi r<->0"));
      st.push_back(step({seg({1}, Level::r, Level::g1, om, 0.0, 0.0, t1)}, t1, true, "target pi r->1"));
    } else {
      st.push_back(step({seg({1}, Level::r, Level::g1, om, 0.0, 0.0, 2.0 * t1)}, 2.0 * t1, true, "target 2pi"));
    }
    st.push_back(step({seg({0}, Level::r, Level::g1, om, 0.0, 0.0, t1)}, t1, true, "control pi r->1"));
    if (name == "CNOT_hadamard") {
      st.push_back(detail::rotation(g.reg, 1, kPi / 2, -kPi / 2, om, "H: U_xy(pi/2,-pi/2)"));
      st.push_back(detail::rotation(g.reg, 1, kPi, 0.0, om, "H: U_xy(pi,0)"));
    } else if (name == "CNOT_rx") {
      st.push_back(detail::rotation(g.reg, 1, kPi / 2, 0.0, om, "R_x(pi/2)"));
    }
    const DenseOp core = ideal_gate("CPHASE", {0, 0, {0.0, kPi, kPi, kPi}, 2});
    if (name == "CZ_B") {
      g.ideal = core;
    } else if (name == "CNOT_swap") {
      g.ideal = -ideal_gate("CNOT0");
    } else {
      // exact composite: the target rotations conjugate the blockade core
      const Mat2 r = name == "CNOT_rx" ? uxy(kPi / 2, 0.0) : Mat2(uxy(kPi, 0.0) * uxy(kPi / 2, -kPi / 2));
      const DenseOp rt = on_qubit(r, 1, 2);
      g.ideal = rt * core * rt;
    }
  } else if (name == "pCZ") {
    g.reg = detail::pair_register(p, LevelScheme::gg());
    g.couplings = {PairCoupling::vdw_for(v, p.spacing)};
    const double half = 0.5 * p.pcz_time / om;
    const double d = p.pcz_delta * om;
    g.controls = {0};
    g.targets = {1};
    g.schedule.steps = {step({seg({0, 1}, Level::r, Level::g1, om, d, 0.0, half)}, half, true, "pulse phi=0"),
                        step({seg({0, 1}, Level::r, Level::g1, om, d, p.pcz_phi, half)}, half, true, "pulse phi")};
    g.ideal = ideal_gate("CZ");
  } else if (name == "XY") {
    g.reg = detail::pair_register(p, LevelScheme::gg(true));
    g.couplings = {PairCoupling::exchange_for(v, p.spacing, Level::r, Level::rp)};
    const double om1 = om;
    const double t1 = kPi / om1;
    if (!(p.xy_theta > 0.0)) throw Error("gates", "XY angle must be positive");
    const double t2 = p.xy_theta / v;
    double om2 = kTwoPi / t2;
    if (p.xy_variant == XYVariant::generalized) {
      const double x = om2 * om2 - 0.25 * v * v;
      if (x <= 0.0) throw Error("gates", "XY generalized Rabi condition has no solution for this angle");
      om2 = std::sqrt(x);
    }
    g.targets = {0, 1};
    g.schedule.steps = {step({seg({0, 1}, Level::r, Level::g0, om1, 0.0, 0.0, t1)}, t1, true, "pi 0->r"),
                        step({seg({0, 1}, Level::rp, Level::g1, om2, 0.0, 0.0, t2)}, t2, true, "2pi 1-r' phi=0"),
                        step({seg({0, 1}, Level::rp, Level::g1, om2, 0.0, kPi, t2)}, t2, true, "2pi 1-r' phi=pi"),
                        step({seg({0, 1}, Level::r, Level::g0, om1, 0.0, kPi, t1)}, t1, true, "pi r->0")};
    g.ideal = ideal_gate("XY", {p.xy_theta, 0.0, {}, 2});
  } else if (name == "CkZ" || name == "Toffoli") {
    const int k = name == "Toffoli" ? 2 : p.controls;
    if (k < 1) throw Error("gates", "CkZ needs at least one control");
    std::vector<Site> sites;
    // controls on alternating sides of the target, target last in index order
    for (int c = 0; c < k; ++c) {
      const double side = (c % 2 == 0 ? -1.0 : 1.0) * (1 + c / 2) * p.spacing;
      sites.push_back({Vec3(side, 0.0, 0.0), p.species_control, LevelScheme::gg()});
    }
    sites.push_back({Vec3(0.0, 0.0, 0.0), p.species_target, LevelScheme::gg_rp()});
    g.reg = Register(sites);
    g.couplings = {PairCoupling::vdw_for(v, p.spacing, Level::r, Level::rp)};
    const std::size_t t = static_cast<std::size_t>(k);
    for (int c = 0; c < k; ++c) g.controls.push_back(static_cast<std::size_t>(c));
    g.targets = {t};
    const double omt = p.target_omega > 0.0 ? p.target_omega : om;
    const double t1 = kPi / om, t2 = kTwoPi / omt;
    auto& st = g.schedule.steps;
    if (name == "Toffoli") {
      st.push_back(detail::rotation(g.reg, t, kPi / 2, -kPi / 2, om, "H: U_xy(pi/2,-pi/2)"));
      st.push_back(detail::rotation(g.reg, t, kPi, 0.0, om, "H: U_xy(pi,0)"));
    }
    st.push_back(step({seg(g.controls, Level::r, Level::g0, om, 0.0, 0.0, t1)}, t1, true, "controls pi 0->r"));
    st.push_back(step({seg({t}, Level::rp, Level::g1, omt, 0.0, 0.0, t2)}, t2, true, "target 2pi 1-r'"));
    st.push_back(step({seg(g.controls, Level::r, Level::g0, om, 0.0, kPi, t1)}, t1, true, "controls pi r->0"));
    if (name == "Toffoli") {
      st.push_back(detail::rotation(g.reg, t, kPi / 2, -kPi / 2, om, "H: U_xy(pi/2,-pi/2)"));
      st.push_back(detail::rotation(g.reg, t, kPi, 0.0, om, "H: U_xy(pi,0)"));
      g.ideal = ideal_gate("Toffoli");
    } else {
      g.ideal = ideal_gate("CkZ", {0, 0, {}, k});
    }
  } else {
    throw Error("gates", "unknown protocol '" + name + "'");
  }
  g.v = v;
  detail::blockade_warning(name, v, om, p.blockade_min);
  g.schedule.validate(g.reg);
  return g;
}

inline std::vector<std::string> protocol_names() {
  return {"CUxy", "pCUxy", "CPHASE_A", "CZ_B", "pCZ", "XY", "CkZ", "Toffoli", "CNOT_hadamard", "CNOT_rx", "CNOT_swap"};
}

// ---------------------------------------------------------------------------
// Process extraction

struct GateReport {
  std::string name;
  int qubits = 0;
  bool has_operator = false;
  DenseOp op;                    ///< computational-subspace block (noiseless runs)
  std::vector<double> phases;    ///< Phi_i - Phi_0, wrapped to (-pi, pi]
  double fidelity = 0.0;         ///< |Tr(U_id^dag U)|^2 / (d Tr(U^dag U)), or process fidelity with noise
  double fidelity_raw = 0.0;     ///< |Tr(U_id^dag U)|^2 / d^2 (leakage counts as error)
  double leakage = 0.0;
  double gate_time = 0.0;
  Eigen::MatrixXd truth_table;   ///< P(output row | input column) in the computational basis
};

inline std::string bit_string(std::size_t i, int n) {
  std::string s(static_cast<std::size_t>(n), '0');
  for (int q = 0; q < n; ++q)
    if (i >> (n - 1 - q) & 1U) s[static_cast<std::size_t>(q)] = '1';
  return s;
}

/// Propagates every computational input through the protocol.
inline GateReport extract_process(const GateProtocol& g, const NoiseModel* noise = nullptr) {
  const int n = g.qubits();
  const Eigen::Index d = Eigen::Index{1} << n;
  const bool noisy = noise && (noise->dissipative() || noise->sigma_doppler > 0.0);
  SystemModel sys = g.system(noisy && noise->needs_sink());
  std::vector<StateVec> comp;
  for (Eigen::Index i = 0; i < d; ++i) comp.push_back(computational_state(sys.basis, bit_string(static_cast<std::size_t>(i), n)));
  GateReport r;
  r.name = g.name;
  r.qubits = n;
  r.gate_time = g.gate_time();
  r.truth_table = Eigen::MatrixXd::Zero(d, d);

  if (!noisy) {
    const DenseOp cols = propagate_columns(comp, g.schedule, sys);
    DenseOp u(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) u(i, j) = comp[static_cast<std::size_t>(i)].dot(cols.col(j));
    r.op = u;
    r.has_operator = true;
    const cplx tr = (g.ideal.adjoint() * u).trace();
    const double uu = (u.adjoint() * u).trace().real();
    r.fidelity = std::clamp(std::norm(tr) / (static_cast<double>(d) * uu), 0.0, 1.0);
    r.fidelity_raw = std::clamp(std::norm(tr) / static_cast<double>(d * d), 0.0, 1.0);
    r.leakage = std::clamp(1.0 - uu / static_cast<double>(d), 0.0, 1.0);
    r.truth_table = u.cwiseAbs2();
    const double p0 = std::arg(u(0, 0));
    for (Eigen::Index i = 0; i < d; ++i) r.phases.push_back(wrap_phase(std::arg(u(i, i)) - p0));
    return r;
  }

  // Lindblad map on |i><j|; with disorder, averaged over shots.
  const int shots = noise->sigma_doppler > 0.0 ? 64 : 1;
  std::vector<std::vector<DenseOp>> lam(static_cast<std::size_t>(d), std::vector<DenseOp>(static_cast<std::size_t>(d)));
  for (int s = 0; s < shots; ++s) {
    SystemModel m = sys;
    m.disorder = sample_disorder(*noise, sys.reg.size(), 0, static_cast<std::uint64_t>(s));
    std::vector<QuantumState> in;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        in.push_back(QuantumState::mixed(sys.basis, comp[static_cast<std::size_t>(i)] * comp[static_cast<std::size_t>(j)].adjoint()));
    const auto outs = propagate_batch(in, g.schedule, m, noise);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        const DenseOp& out = outs[static_cast<std::size_t>(i * d + j)].rho();
        auto& slot = lam[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        slot = s == 0 ? out : DenseOp(slot + out);
      }
  }
  cplx f = 0.0;
  std::vector<StateVec> ideal_out;
  for (Eigen::Index i = 0; i < d; ++i) {
    StateVec u = StateVec::Zero(sys.basis.size());
    for (Eigen::Index k = 0; k < d; ++k) u += g.ideal(k, i) * comp[static_cast<std::size_t>(k)];
    ideal_out.push_back(u);
  }
  double kept = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const DenseOp l = lam[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] / static_cast<double>(shots);
      f += ideal_out[static_cast<std::size_t>(i)].dot(l * ideal_out[static_cast<std::size_t>(j)]);
      if (i == j)
        for (Eigen::Index k = 0; k < d; ++k) {
          const double pk = comp[static_cast<std::size_t>(k)].dot(l * comp[static_cast<std::size_t>(k)]).real();
          r.truth_table(k, i) = pk;
          kept += pk;
        }
    }
  }
  r.fidelity = std::clamp(f.real() / static_cast<double>(d * d), 0.0, 1.0);
  r.fidelity_raw = r.fidelity;
  r.leakage = std::clamp(1.0 - kept / static_cast<double>(d), 0.0, 1.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    const DenseOp l = lam[0][static_cast<std::size_t>(j)];
    r.phases.push_back(wrap_phase(-std::arg(comp[0].dot(l * comp[static_cast<std::size_t>(j)]))));
  }
  return r;
}

inline void write_report(std::ostream& os, const GateReport& r) {
  os << std::setprecision(10);
  os << "gate: " << r.name << "\n";
  os << "qubits: " << r.qubits << "\n";
  os << "gate_time_us: " << r.gate_time << "\n";
  os << "fidelity: " << r.fidelity << "\n";
  os << "fidelity_raw: " << r.fidelity_raw << "\n";
  os << "leakage: " << r.leakage << "\n";
  os << "phases_rad:";
  for (double p : r.phases) os << ' ' << p;
  os << "\n";
}

/// One row per drive segment; steps without segments get one empty row.
inline void write_schedule_csv(std::ostream& os, const PulseSchedule& s) {
  auto num = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", std::abs(x) < 1e-15 ? 0.0 : x);
    return std::string(buf);
  };
  os << "step,label,t_start_us,duration_us,interactions,targets,transition,omega_rad_per_us,omega_end_rad_per_us,"
        "delta_rad_per_us,delta_end_rad_per_us,phi_rad\n";
  double t = 0.0;
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    const auto& st = s.steps[i];
    const std::string head = std::to_string(i) + ',' + st.label + ',' + num(t) + ',' + num(st.duration) + ',' +
                             (st.interactions_active ? "on" : "off") + ',';
    if (st.segments.empty()) os << head << ",,,,,,\n";
    for (const auto& g : st.segments) {
      std::string tg;
      for (auto x : g.targets) tg += (tg.empty() ? "" : " ") + std::to_string(x);
      os << head << tg << ',' << to_string(g.a) << '-' << to_string(g.b) << ',' << num(g.omega) << ','
         << num(g.omega_end.value_or(g.omega)) << ',' << num(g.delta) << ',' << num(g.delta_end.value_or(g.delta)) << ','
         << num(g.phi) << '\n';
    }
    t += st.duration;
  }
}

// ---------------------------------------------------------------------------
// Equivalence up to single-qubit Z phases

struct PhaseEquivalence {
  bool equivalent = false;
  double residual = 1.0;  ///< 1 - (|Tr(D^dag U V^dag)| / d)^2 at the optimum
  double global_phase = 0.0;
  std::vector<double> z_phases;  ///< beta_q: U ~ e^{i alpha} diag(e^{i sum_q beta_q b_q}) V
};

namespace detail {

/// Maximises |sum_i e^{-i beta.b(i)} W_ii| over per-qubit phases beta.
inline PhaseEquivalence best_phases(const DenseOp& w, int k) {
  const Eigen::Index d = w.rows();
  auto overlap = [&](const Eigen::VectorXd& beta) {
    cplx s = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      double ph = 0.0;
      for (int q = 0; q < k; ++q)
        if (i >> (k - 1 - q) & 1) ph += beta(q);
      s += std::exp(-kI * ph) * w(i, i);
    }
    return s;
  };
  OptimizationProblem pb;
  for (int q = 0; q < k; ++q) pb.params.push_back({"beta" + std::to_string(q), 0.0, kTwoPi, true});
  pb.objective = [&](const Eigen::VectorXd& b) { return 1.0 - std::norm(overlap(b)) / static_cast<double>(d * d); };
  pb.budget = 400 * k;
  pb.restarts = 2;
  pb.initial_step = 0.05;
  pb.ftol = 1e-16;
  pb.xtol = 1e-12;
  PhaseEquivalence best;
  best.residual = std::numeric_limits<double>::infinity();
  const int grid = 6;
  int combos = 1;
  for (int q = 0; q < k; ++q) combos *= grid;
  for (int c = 0; c < combos; ++c) {
    Eigen::VectorXd x0(k);
    int cc = c;
    for (int q = 0; q < k; ++q) {
      x0(q) = kTwoPi * (cc % grid) / grid;
      cc /= grid;
    }
    pb.initial = x0;
    auto res = minimize(pb);
    // coordinate ascent: each beta_q has a closed-form optimum given the rest
    for (int sweep = 0; sweep < 50; ++sweep)
      for (int q = 0; q < k; ++q) {
        Eigen::VectorXd b0 = res.best;
        b0(q) = 0.0;
        cplx a = 0.0, c = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
          double ph = 0.0;
          for (int r = 0; r < k; ++r)
            if (i >> (k - 1 - r) & 1) ph += b0(r);
          (i >> (k - 1 - q) & 1 ? c : a) += std::exp(-kI * ph) * w(i, i);
        }
        if (std::abs(a) == 0.0 || std::abs(c) == 0.0) continue;
        const double v = std::fmod(std::arg(c) - std::arg(a), kTwoPi);
        res.best(q) = v < 0.0 ? v + kTwoPi : v;
      }
    res.best_cost = pb.objective(res.best);
    if (res.best_cost < best.residual) {
      best.residual = std::max(res.best_cost, 0.0);
      best.z_phases.assign(res.best.data(), res.best.data() + k);
      best.global_phase = std::arg(overlap(res.best));
    }
  }
  return best;
}

}  // namespace detail

/// Checks U = e^{i alpha} D(beta) V for per-qubit Z phases beta.
inline PhaseEquivalence equivalent_up_to_phases(const DenseOp& u, const DenseOp& v, int k, double tol = 1e-6,
                                                double unitarity_tol = 1e-2) {
  const Eigen::Index d = Eigen::Index{1} << k;
  if (u.rows() != d || u.cols() != d || v.rows() != d || v.cols() != d) throw Error("gates", "operators must be 2^k x 2^k");
  for (const DenseOp* m : {&u, &v})
    if ((m->adjoint() * *m - DenseOp::Identity(d, d)).cwiseAbs().maxCoeff() > unitarity_tol)
      throw Error("gates", "operator is not unitary within tolerance");
  auto best = detail::best_phases(u * v.adjoint(), k);
  best.equivalent = best.residual < tol;
  return best;
}

}  // namespace rydberg
