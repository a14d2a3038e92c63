#pragma once

// Atom positions, per-site level schemes and the geometric primitives derived
// from them (distances, angles to the quantization axis, blockade graphs).

#include "rydberg/common.hpp"

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

namespace rydberg {

/// Atomic levels. `rp` is the second Rydberg state r'. `lost` is the absorbing
/// sink appended when a noise model moves population out of the register.
enum class Level : int { g0 = 0, g1 = 1, r = 2, rp = 3, lost = 4 };

inline std::string_view to_string(Level l) {
  switch (l) {
    case Level::g0: return "g0";
    case Level::g1: return "g1";
    case Level::r: return "r";
    case Level::rp: return "rp";
    case Level::lost: return "lost";
  }
  return "?";
}

inline std::optional<Level> parse_level(std::string_view s) {
  if (s == "g0" || s == "g") return Level::g0;
  if (s == "g1") return Level::g1;
  if (s == "r") return Level::r;
  if (s == "rp" || s == "r'") return Level::rp;
  if (s == "lost" || s == "L") return Level::lost;
  return std::nullopt;
}

inline bool is_rydberg(Level l) { return l == Level::r || l == Level::rp; }

enum class Encoding { gr, gg, rr };

inline std::string_view to_string(Encoding e) {
  switch (e) {
    case Encoding::gr: return "gr";
    case Encoding::gg: return "gg";
    case Encoding::rr: return "rr";
  }
  return "?";
}

/// Ordered set of levels of one atom. The order defines the local basis; the
/// two computational labels are |0> and |1>.
class LevelScheme {
 public:
  LevelScheme() = default;

  LevelScheme(Encoding enc, std::vector<Level> labels, Level zero, Level one)
      : encoding_(enc), labels_(std::move(labels)), zero_(zero), one_(one) {
    validate();
  }

  /// Ground-Rydberg qubit {g0 = |0>, r = |1>}.
  static LevelScheme gr() { return {Encoding::gr, {Level::g0, Level::r}, Level::g0, Level::r}; }
  /// Ground-ground qubit with auxiliary Rydberg level(s).
  static LevelScheme gg(bool with_rp = false) {
    std::vector<Level> l{Level::g0, Level::g1, Level::r};
    if (with_rp) l.push_back(Level::rp);
    return {Encoding::gg, l, Level::g0, Level::g1};
  }
  /// Ground-ground qubit whose only auxiliary level is r'.
  static LevelScheme gg_rp() { return {Encoding::gg, {Level::g0, Level::g1, Level::rp}, Level::g0, Level::g1}; }
  /// Rydberg-Rydberg qubit {r = |0>, r' = |1>}.
  static LevelScheme rr() { return {Encoding::rr, {Level::r, Level::rp}, Level::r, Level::rp}; }

  Encoding encoding() const { return encoding_; }
  const std::vector<Level>& labels() const { return labels_; }
  int dim() const { return static_cast<int>(labels_.size()); }
  Level zero() const { return zero_; }
  Level one() const { return one_; }
  bool has(Level l) const { return index_of(l).has_value(); }
  bool has_sink() const { return has(Level::lost); }

  std::optional<int> index_of(Level l) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == l) return static_cast<int>(i);
    return std::nullopt;
  }

  int require(Level l) const {
    auto i = index_of(l);
    if (!i) throw Error("register", "level " + std::string(to_string(l)) + " not declared in level scheme");
    return *i;
  }

  /// Copy with the absorbing sink appended (idempotent).
  LevelScheme with_sink() const {
    if (has_sink()) return *this;
    LevelScheme s = *this;
    s.labels_.push_back(Level::lost);
    return s;
  }

  bool operator==(const LevelScheme&) const = default;

 private:
  void validate() const {
    const int base = static_cast<int>(labels_.size()) - (has_sink() ? 1 : 0);
    if (base < 2 || base > 4) throw Error("register", "level scheme must have 2-4 levels");
    for (std::size_t i = 0; i < labels_.size(); ++i)
      for (std::size_t j = i + 1; j < labels_.size(); ++j)
        if (labels_[i] == labels_[j]) throw Error("register", "duplicate level label");
    if (zero_ == one_) throw Error("register", "computational |0> and |1> must differ");
    if (!has(zero_) || !has(one_)) throw Error("register", "computational labels must be declared levels");
  }

  Encoding encoding_ = Encoding::gr;
  std::vector<Level> labels_{Level::g0, Level::r};
  Level zero_ = Level::g0;
  Level one_ = Level::r;
};

using Vec3 = Eigen::Vector3d;

struct Site {
  Vec3 position;
  std::string species = "Rb87";
  LevelScheme levels = LevelScheme::gr();
};

/// Immutable collection of sites. Indices are zero-based and stable.
class Register {
 public:
  Register() = default;

  explicit Register(std::vector<Site> sites, Vec3 axis = Vec3::UnitZ()) : sites_(std::move(sites)), axis_(axis) {
    if (!axis_.allFinite() || axis_.norm() == 0.0) throw Error("register", "quantization axis must be finite and nonzero");
    axis_.normalize();
    for (const auto& s : sites_)
      if (!s.position.allFinite()) throw Error("register", "site coordinates must be finite");
    for (std::size_t j = 0; j < sites_.size(); ++j)
      for (std::size_t k = j + 1; k < sites_.size(); ++k)
        if ((sites_[j].position - sites_[k].position).norm() <= 0.0)
          throw Error("register", "sites " + std::to_string(j) + " and " + std::to_string(k) + " coincide");
  }

  std::size_t size() const { return sites_.size(); }
  const Site& site(std::size_t i) const { return sites_.at(i); }
  const std::vector<Site>& sites() const { return sites_; }
  const Vec3& axis() const { return axis_; }

  /// Copy with every site given `scheme`.
  Register with_levels(const LevelScheme& scheme) const {
    auto s = sites_;
    for (auto& x : s) x.levels = scheme;
    return Register(std::move(s), axis_);
  }

  Register with_site_levels(std::size_t i, const LevelScheme& scheme) const {
    auto s = sites_;
    s.at(i).levels = scheme;
    return Register(std::move(s), axis_);
  }

  Register with_species(std::size_t i, std::string species) const {
    auto s = sites_;
    s.at(i).species = std::move(species);
    return Register(std::move(s), axis_);
  }

  /// site_index,x,y,z
  void write_csv(std::ostream& os) const {
    os << "site_index,x_um,y_um,z_um\n";
    os.precision(17);
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      const auto& p = sites_[i].position;
      os << i << ',' << p.x() << ',' << p.y() << ',' << p.z() << '\n';
    }
  }

 private:
  std::vector<Site> sites_;
  Vec3 axis_ = Vec3::UnitZ();
};

enum class LatticeKind { chain, ring, square, triangular, staggered_chain };

inline std::optional<LatticeKind> parse_lattice_kind(std::string_view s) {
  if (s == "chain") return LatticeKind::chain;
  if (s == "ring") return LatticeKind::ring;
  if (s == "square") return LatticeKind::square;
  if (s == "triangular") return LatticeKind::triangular;
  if (s == "staggered_chain") return LatticeKind::staggered_chain;
  return std::nullopt;
}

/// Kind-specific lattice parameters.
struct LatticeExtra {
  /// staggered_chain: shift of the B sublattice along the chain direction (um).
  double dimerization_offset = 0.0;
  /// staggered_chain: shift of the B sublattice perpendicular to the chain (um).
  double perpendicular_offset = 0.0;
  /// staggered_chain: angle between the chain direction and the quantization axis (rad).
  double tilt = 0.0;
  Vec3 axis = Vec3::UnitZ();
  LevelScheme levels = LevelScheme::gr();
};

/// Magic angle arccos(1/sqrt(3)) where 1 - 3cos^2 vanishes.
inline double magic_angle() { return std::acos(1.0 / std::sqrt(3.0)); }

/// Deterministic lattice coordinates.
///  - chain: counts[0] sites along x.
///  - ring: counts[0] >= 3 sites on a circle in the xy-plane, nearest-neighbour distance = spacing.
///  - square / triangular: counts[0] columns x counts[1] rows in the xy-plane.
///  - staggered_chain: counts[0] sites alternating A,B. Each sublattice is a line
///    along u = (sin tilt, 0, cos tilt) with period `spacing`; B is displaced by
///    dimerization_offset * u + perpendicular_offset * w, w = (cos tilt, 0, -sin tilt).
inline Register build_lattice(LatticeKind kind, std::vector<int> counts, double spacing, const LatticeExtra& extra = {}) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw Error("register", "lattice spacing must be positive");
  if (counts.empty()) throw Error("register", "lattice counts must be given");
  for (int c : counts)
    if (c < 1) throw Error("register", "lattice counts must be >= 1");
  const auto dim2 = [&]() -> std::pair<int, int> { return {counts[0], counts.size() > 1 ? counts[1] : 1}; };

  std::vector<Site> sites;
  auto push = [&](double x, double y, double z) { sites.push_back(Site{Vec3(x, y, z), "Rb87", extra.levels}); };

  switch (kind) {
    case LatticeKind::chain:
      for (int i = 0; i < counts[0]; ++i) push(i * spacing, 0.0, 0.0);
      break;
    case LatticeKind::ring: {
      const int n = counts[0];
      if (n < 3) throw Error("register", "ring needs at least 3 sites");
      const double radius = spacing / (2.0 * std::sin(kPi / n));
      for (int i = 0; i < n; ++i) {
        const double a = kTwoPi * i / n;
        push(radius * std::cos(a), radius * std::sin(a), 0.0);
      }
      break;
    }
    case LatticeKind::square: {
      auto [nx, ny] = dim2();
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) push(x * spacing, y * spacing, 0.0);
      break;
    }
    case LatticeKind::triangular: {
      auto [nx, ny] = dim2();
      const double row = spacing * std::sqrt(3.0) / 2.0;
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) push(x * spacing + (y % 2 ? 0.5 * spacing : 0.0), y * row, 0.0);
      break;
    }
    case LatticeKind::staggered_chain: {
      const Vec3 u(std::sin(extra.tilt), 0.0, std::cos(extra.tilt));
      const Vec3 w(std::cos(extra.tilt), 0.0, -std::sin(extra.tilt));
      const Vec3 shift = extra.dimerization_offset * u + extra.perpendicular_offset * w;
      for (int i = 0; i < counts[0]; ++i) {
        Vec3 p = (i / 2) * spacing * u;
        if (i % 2) p += shift;
        push(p.x(), p.y(), p.z());
      }
      break;
    }
  }
  return Register(std::move(sites), extra.axis);
}

struct PairGeometry {
  double distance;  ///< um
  double theta;     ///< angle between the interatomic vector and the quantization axis, [0, pi]
};

inline PairGeometry pair_geometry(const Register& reg, std::size_t j, std::size_t k) {
  if (j == k) throw Error("register", "pair_geometry needs two distinct sites");
  if (j >= reg.size() || k >= reg.size()) throw Error("register", "site index out of range");
  const Vec3 d = reg.site(k).position - reg.site(j).position;
  const double r = d.norm();
  // The angle is defined for the unordered pair; fold into [0, pi/2] mirror-symmetric form
  // by taking the absolute projection so that (j,k) and (k,j) agree.
  const double c = std::clamp(std::abs(d.dot(reg.axis())) / r, 0.0, 1.0);
  return {r, std::acos(c)};
}

/// Undirected graph with an edge (j,k) iff R_jk < R_b (ties excluded).
class BlockadeGraph {
 public:
  BlockadeGraph() = default;
  explicit BlockadeGraph(std::size_t n) : adj_(n) {}

  std::size_t size() const { return adj_.size(); }

  void add_edge(std::size_t j, std::size_t k) {
    if (j == k) throw Error("register", "blockade graph has no self-edges");
    if (std::find(adj_[j].begin(), adj_[j].end(), k) != adj_[j].end()) return;
    adj_[j].push_back(k);
    adj_[k].push_back(j);
    std::sort(adj_[j].begin(), adj_[j].end());
    std::sort(adj_[k].begin(), adj_[k].end());
  }

  bool has_edge(std::size_t j, std::size_t k) const {
    return std::binary_search(adj_.at(j).begin(), adj_.at(j).end(), k);
  }

  const std::vector<std::size_t>& neighbors(std::size_t j) const { return adj_.at(j); }

  /// Edges (j < k) in lexicographic order.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t j = 0; j < adj_.size(); ++j)
      for (auto k : adj_[j])
        if (j < k) e.emplace_back(j, k);
    return e;
  }

  /// Nearest-neighbour chain graph (open or periodic).
  static BlockadeGraph chain(std::size_t n, bool periodic = false) {
    BlockadeGraph g(n);
    for (std::size_t j = 0; j + 1 < n; ++j) g.add_edge(j, j + 1);
    if (periodic && n > 2) g.add_edge(n - 1, 0);
    return g;
  }

 private:
  std::vector<std::vector<std::size_t>> adj_;
};

inline BlockadeGraph blockade_graph(const Register& reg, double blockade_radius) {
  if (!(blockade_radius > 0.0)) throw Error("register", "blockade radius must be positive");
  BlockadeGraph g(reg.size());
  for (std::size_t j = 0; j < reg.size(); ++j)
    for (std::size_t k = j + 1; k < reg.size(); ++k)
      if ((reg.site(j).position - reg.site(k).position).norm() < blockade_radius) g.add_edge(j, k);
  return g;
}

/// All independent sets of `g` as bit masks (bit j = site j excited), in
/// increasing numeric order of the basis index used by the Hilbert-space
/// module (site 0 is the most significant digit). Practical for up to ~30 sites.
inline std::vector<std::uint64_t> independent_sets(const BlockadeGraph& g) {
  const std::size_t n = g.size();
  if (n > 62) throw Error("register", "independent-set enumeration limited to 62 sites");
  std::vector<std::uint64_t> nbr(n, 0);
  for (std::size_t j = 0; j < n; ++j)
    for (auto k : g.neighbors(j)) nbr[j] |= (std::uint64_t{1} << k);
  std::vector<std::uint64_t> out;
  // Depth-first over sites 0..n-1 keeps lexicographic order in the "site 0 is
  // most significant" convention when we branch 0 before 1.
  std::vector<std::pair<std::size_t, std::uint64_t>> stack;
  auto rec = [&](auto&& self, std::size_t j, std::uint64_t mask) -> void {
    if (j == n) {
      out.push_back(mask);
      return;
    }
    self(self, j + 1, mask);
    if ((nbr[j] & mask) == 0) self(self, j + 1, mask | (std::uint64_t{1} << j));
  };
  rec(rec, 0, 0);
  return out;
}

}  // namespace rydberg
