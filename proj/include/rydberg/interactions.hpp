#pragma once

// Pair interactions between Rydberg levels.
//
// Conventions (shared by every Hamiltonian builder):
//  - diagonal kinds contribute V |ab><ab| (plus |ba><ba| when a != b) with
//    V = -C_p / R^p, so a repulsive nS-nS pair (C6 < 0) has V > 0.
//  - exchange_dipolar contributes (V/2)(|ab><ba| + h.c.) with V = C3 / R^3.
//    The resonant pair-state coupling mu_ac mu_bd / R^3 therefore corresponds
//    to C3 = 2 mu_ac mu_bd.
//  - the dipolar flag multiplies V by (1 - 3 cos^2 theta).

#include "rydberg/register.hpp"

#include <Eigen/Eigenvalues>

namespace rydberg {

enum class CouplingKind { diagonal_vdw, exchange_dipolar, diagonal_cross };

inline std::string_view to_string(CouplingKind k) {
  switch (k) {
    case CouplingKind::diagonal_vdw: return "diagonal_vdw";
    case CouplingKind::exchange_dipolar: return "exchange_dipolar";
    case CouplingKind::diagonal_cross: return "diagonal_cross";
  }
  return "?";
}

inline std::optional<CouplingKind> parse_coupling_kind(std::string_view s) {
  if (s == "diagonal_vdw") return CouplingKind::diagonal_vdw;
  if (s == "exchange_dipolar") return CouplingKind::exchange_dipolar;
  if (s == "diagonal_cross") return CouplingKind::diagonal_cross;
  return std::nullopt;
}

enum class Angular { isotropic, dipolar };

struct PairCoupling {
  CouplingKind kind = CouplingKind::diagonal_vdw;
  double coefficient = 0.0;  ///< C_p in rad/us * um^p
  int power = 6;
  Angular angular = Angular::isotropic;
  Level a = Level::r;  ///< level of the first atom
  Level b = Level::r;  ///< level of the second atom
  /// Unordered species pair this coupling applies to; empty strings match any species.
  std::string species_a;
  std::string species_b;

  void validate() const {
    if (!std::isfinite(coefficient)) throw Error("interactions", "coupling coefficient must be finite");
    if (kind == CouplingKind::exchange_dipolar && power != 3)
      throw Error("interactions", "exchange_dipolar coupling requires p = 3");
    if (kind != CouplingKind::exchange_dipolar && power != 6)
      throw Error("interactions", "diagonal couplings require p = 6");
    if (kind == CouplingKind::exchange_dipolar && a == b)
      throw Error("interactions", "exchange coupling needs two distinct levels");
    if (kind == CouplingKind::diagonal_vdw && a != b)
      throw Error("interactions", "diagonal_vdw couples a level to itself; use diagonal_cross for distinct levels");
    if (kind == CouplingKind::diagonal_cross && a == b)
      throw Error("interactions", "diagonal_cross needs two distinct levels");
    if (!is_rydberg(a) || !is_rydberg(b)) throw Error("interactions", "couplings act between Rydberg levels");
  }

  bool matches_species(const std::string& sj, const std::string& sk) const {
    auto ok = [](const std::string& want, const std::string& have) { return want.empty() || want == have; };
    return (ok(species_a, sj) && ok(species_b, sk)) || (ok(species_a, sk) && ok(species_b, sj));
  }

  /// Isotropic C6 giving a diagonal shift V at distance R.
  static PairCoupling vdw_for(double v, double r, Level a = Level::r, Level b = Level::r) {
    PairCoupling c;
    c.kind = a == b ? CouplingKind::diagonal_vdw : CouplingKind::diagonal_cross;
    c.coefficient = -v * std::pow(r, 6);
    c.power = 6;
    c.a = a;
    c.b = b;
    return c;
  }

  /// Isotropic C3 giving an exchange strength V at distance R.
  static PairCoupling exchange_for(double v, double r, Level a = Level::r, Level b = Level::rp) {
    PairCoupling c;
    c.kind = CouplingKind::exchange_dipolar;
    c.coefficient = v * r * r * r;
    c.power = 3;
    c.a = a;
    c.b = b;
    return c;
  }
};

struct PairStateParams {
  double mu_ac = 0.0;
  double mu_bd = 0.0;
  double forster_defect = 0.0;  ///< Delta_F, rad/us
};

/// 2x2 Hamiltonian on {|ab>, |cd>}.
inline Eigen::Matrix2d pair_state_hamiltonian(const PairStateParams& p, double r) {
  if (!(r > 0.0)) throw Error("interactions", "pair distance must be positive");
  if (p.mu_ac < 0.0 || p.mu_bd < 0.0) throw Error("interactions", "dipole factors must be non-negative");
  const double c = p.mu_ac * p.mu_bd / (r * r * r);
  Eigen::Matrix2d h;
  h << 0.0, c, c, p.forster_defect;
  return h;
}

inline Eigen::Vector2d pair_state_energies(const PairStateParams& p, double r) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(pair_state_hamiltonian(p, r));
  return es.eigenvalues();
}

/// C6 = mu_ac^2 mu_bd^2 / Delta_F, in the sign convention where the |ab> level
/// shifts by -C6 / R^6.
inline double vdw_coefficient(const PairStateParams& p) {
  if (p.forster_defect == 0.0) throw Error("interactions", "Delta_F = 0 is the resonant regime; use the exchange form");
  const double m = p.mu_ac * p.mu_bd;
  return m * m / p.forster_defect;
}

inline double angular_factor(Angular a, double theta) {
  if (a == Angular::isotropic) return 1.0;
  const double c = std::cos(theta);
  return 1.0 - 3.0 * c * c;
}

inline double pair_interaction(const PairCoupling& c, const PairGeometry& g) {
  if (!(g.distance > 0.0)) throw Error("interactions", "pair distance must be positive");
  const double rp = std::pow(g.distance, c.power);
  const double base = c.kind == CouplingKind::exchange_dipolar ? c.coefficient / rp : -c.coefficient / rp;
  return base * angular_factor(c.angular, g.theta);
}

inline double blockade_radius(double cp, double omega, int p) {
  if (!(omega > 0.0)) throw Error("interactions", "blockade radius needs Omega > 0");
  if (cp == 0.0) throw Error("interactions", "blockade radius needs C_p != 0");
  if (p <= 0) throw Error("interactions", "power must be positive");
  return std::pow(std::abs(cp / omega), 1.0 / p);
}

/// One resolved interaction term between sites j < k.
struct InteractionTerm {
  std::size_t j;
  std::size_t k;
  CouplingKind kind;
  Level a;  ///< level on site j
  Level b;  ///< level on site k
  double v;
};

struct InteractionOptions {
  /// Pairs further apart than this are dropped; <= 0 keeps all pairs.
  double cutoff = 0.0;
};

/// Resolves every coupling on every site pair where both levels exist.
/// Couplings with distinct levels (a, b) are applied in both orientations.
inline std::vector<InteractionTerm> resolve_interactions(const Register& reg, const std::vector<PairCoupling>& couplings,
                                                         const InteractionOptions& opt = {}) {
  std::vector<InteractionTerm> out;
  for (const auto& c : couplings) c.validate();
  for (std::size_t j = 0; j < reg.size(); ++j) {
    for (std::size_t k = j + 1; k < reg.size(); ++k) {
      const auto g = pair_geometry(reg, j, k);
      if (opt.cutoff > 0.0 && g.distance > opt.cutoff) continue;
      const auto& sj = reg.site(j);
      const auto& sk = reg.site(k);
      for (const auto& c : couplings) {
        if (!c.matches_species(sj.species, sk.species)) continue;
        const double v = pair_interaction(c, g);
        auto add = [&](Level la, Level lb) {
          if (sj.levels.has(la) && sk.levels.has(lb)) out.push_back({j, k, c.kind, la, lb, v});
        };
        if (c.kind == CouplingKind::exchange_dipolar) {
          add(c.a, c.b);  // (V/2)(|ab><ba| + h.c.) is symmetric under a <-> b
        } else {
          add(c.a, c.b);
          if (c.a != c.b) add(c.b, c.a);
        }
      }
    }
  }
  return out;
}

/// Symmetric N x N table of V_jk summed over all couplings (each cross pair counted once).
inline Eigen::MatrixXd interaction_matrix(const Register& reg, const std::vector<PairCoupling>& couplings,
                                          const InteractionOptions& opt = {}) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(reg.size(), reg.size());
  for (const auto& t : resolve_interactions(reg, couplings, opt)) {
    if (t.kind == CouplingKind::diagonal_cross && static_cast<int>(t.a) > static_cast<int>(t.b)) continue;
    m(t.j, t.k) += t.v;
    m(t.k, t.j) += t.v;
  }
  return m;
}

inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m, std::string_view unit = "rad_per_us") {
  os << "j,k,V_" << unit << '\n';
  os.precision(17);
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    for (Eigen::Index k = 0; k < m.cols(); ++k) os << j << ',' << k << ',' << m(j, k) << '\n';
}

}  // namespace rydberg
