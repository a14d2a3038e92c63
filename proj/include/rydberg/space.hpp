#pragma once

// Product-level Hilbert spaces, optionally restricted to blockade-allowed
// configurations, and a generic builder for local and pair operators.
// Site 0 is the most significant digit of a basis index.

#include "rydberg/register.hpp"

#include <unordered_map>

namespace rydberg {

class Basis {
 public:
  Basis() = default;

  /// Full product space with the given local dimensions.
  static Basis full(std::vector<int> dims) {
    Basis b;
    b.dims_ = std::move(dims);
    b.init_strides();
    return b;
  }

  /// Full space for a register, with or without the loss sink on every site.
  static Basis for_register(const Register& reg, bool with_sink = false) {
    std::vector<int> d;
    std::vector<LevelScheme> s;
    for (const auto& site : reg.sites()) {
      s.push_back(with_sink ? site.levels.with_sink() : site.levels);
      d.push_back(s.back().dim());
    }
    Basis b = full(d);
    b.schemes_ = std::move(s);
    return b;
  }

  /// Two-level sites restricted to independent sets of `g` (digit 1 = excited).
  static Basis constrained(const BlockadeGraph& g) {
    Basis b = full(std::vector<int>(g.size(), 2));
    const std::size_t n = g.size();
    for (auto mask : independent_sets(g)) {
      std::uint64_t idx = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (mask >> j & 1U) idx += b.strides_[j];
      b.states_.push_back(idx);
    }
    std::sort(b.states_.begin(), b.states_.end());
    for (std::size_t i = 0; i < b.states_.size(); ++i) b.lookup_[b.states_[i]] = static_cast<Eigen::Index>(i);
    b.constrained_ = true;
    return b;
  }

  std::size_t sites() const { return dims_.size(); }
  int local_dim(std::size_t j) const { return dims_.at(j); }
  const std::vector<int>& dims() const { return dims_; }
  bool is_constrained() const { return constrained_; }
  std::uint64_t full_size() const { return full_size_; }

  Eigen::Index size() const {
    return constrained_ ? static_cast<Eigen::Index>(states_.size()) : static_cast<Eigen::Index>(full_size_);
  }

  /// Level schemes attached when built from a register (empty otherwise).
  const std::vector<LevelScheme>& schemes() const { return schemes_; }

  std::uint64_t full_index(Eigen::Index i) const { return constrained_ ? states_[i] : static_cast<std::uint64_t>(i); }

  std::optional<Eigen::Index> index_of(std::uint64_t full) const {
    if (!constrained_) return full < full_size_ ? std::optional<Eigen::Index>(static_cast<Eigen::Index>(full)) : std::nullopt;
    auto it = lookup_.find(full);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  int digit(std::uint64_t full, std::size_t j) const { return static_cast<int>(full / strides_[j] % dims_[j]); }

  std::uint64_t with_digit(std::uint64_t full, std::size_t j, int v) const {
    return full + (static_cast<std::int64_t>(v) - digit(full, j)) * static_cast<std::int64_t>(strides_[j]);
  }

  std::vector<int> digits(Eigen::Index i) const {
    std::vector<int> d(dims_.size());
    const auto f = full_index(i);
    for (std::size_t j = 0; j < dims_.size(); ++j) d[j] = digit(f, j);
    return d;
  }

  std::optional<Eigen::Index> index_of_digits(const std::vector<int>& d) const {
    if (d.size() != dims_.size()) throw Error("space", "digit string has wrong length");
    std::uint64_t f = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (d[j] < 0 || d[j] >= dims_[j]) throw Error("space", "digit out of range");
      f += static_cast<std::uint64_t>(d[j]) * strides_[j];
    }
    return index_of(f);
  }

  bool operator==(const Basis& o) const {
    return dims_ == o.dims_ && constrained_ == o.constrained_ && states_ == o.states_;
  }

 private:
  void init_strides() {
    strides_.assign(dims_.size(), 1);
    full_size_ = 1;
    for (std::size_t j = dims_.size(); j-- > 0;) {
      if (dims_[j] < 1) throw Error("space", "local dimension must be positive");
      strides_[j] = full_size_;
      full_size_ *= static_cast<std::uint64_t>(dims_[j]);
      if (full_size_ > (std::uint64_t{1} << 40)) throw Error("space", "Hilbert space too large");
    }
  }

  std::vector<int> dims_;
  std::vector<std::uint64_t> strides_;
  std::uint64_t full_size_ = 1;
  bool constrained_ = false;
  std::vector<std::uint64_t> states_;
  std::unordered_map<std::uint64_t, Eigen::Index> lookup_;
  std::vector<LevelScheme> schemes_;
};

/// Accumulates operator terms as triplets. Terms whose image leaves a
/// constrained basis are dropped, which is exactly the projected operator.
class OpBuilder {
 public:
  explicit OpBuilder(const Basis& b) : b_(b) {}

  /// amp |ket><bra| on site j.
  void add_local(std::size_t j, int ket, int bra, cplx amp) {
    if (amp == cplx(0.0)) return;
    check(j, ket);
    check(j, bra);
    for (Eigen::Index i = 0; i < b_.size(); ++i) {
      const auto f = b_.full_index(i);
      if (b_.digit(f, j) != bra) continue;
      if (auto r = b_.index_of(b_.with_digit(f, j, ket))) t_.emplace_back(*r, i, amp);
    }
  }

  /// amp |ket_j ket_k><bra_j bra_k| on sites (j, k).
  void add_pair(std::size_t j, std::size_t k, int ket_j, int ket_k, int bra_j, int bra_k, cplx amp) {
    if (amp == cplx(0.0)) return;
    if (j == k) throw Error("space", "pair term needs two distinct sites");
    check(j, ket_j);
    check(j, bra_j);
    check(k, ket_k);
    check(k, bra_k);
    for (Eigen::Index i = 0; i < b_.size(); ++i) {
      const auto f = b_.full_index(i);
      if (b_.digit(f, j) != bra_j || b_.digit(f, k) != bra_k) continue;
      if (auto r = b_.index_of(b_.with_digit(b_.with_digit(f, j, ket_j), k, ket_k))) t_.emplace_back(*r, i, amp);
    }
  }

  /// Diagonal entries from a function of the digit string.
  template <class F>
  void add_diagonal(F&& f) {
    for (Eigen::Index i = 0; i < b_.size(); ++i) {
      const cplx v = f(b_.digits(i));
      if (v != cplx(0.0)) t_.emplace_back(i, i, v);
    }
  }

  void add_identity(cplx amp) {
    if (amp == cplx(0.0)) return;
    for (Eigen::Index i = 0; i < b_.size(); ++i) t_.emplace_back(i, i, amp);
  }

  SparseOp build() const {
    SparseOp m(b_.size(), b_.size());
    m.setFromTriplets(t_.begin(), t_.end());
    m.prune(cplx(0.0));
    return m;
  }

 private:
  void check(std::size_t j, int level) const {
    if (j >= b_.sites()) throw Error("space", "site index out of range");
    if (level < 0 || level >= b_.local_dim(j)) throw Error("space", "local level out of range");
  }

  const Basis& b_;
  std::vector<Eigen::Triplet<cplx>> t_;
};

/// Qubit Pauli operators on the computational labels of each site. For plain
/// two-level bases digit 0 is |0> and digit 1 is |1>.
struct QubitMap {
  std::vector<int> zero;
  std::vector<int> one;

  static QubitMap of(const Basis& b) {
    QubitMap m;
    if (!b.schemes().empty()) {
      for (const auto& s : b.schemes()) {
        m.zero.push_back(s.require(s.zero()));
        m.one.push_back(s.require(s.one()));
      }
    } else {
      m.zero.assign(b.sites(), 0);
      m.one.assign(b.sites(), 1);
    }
    return m;
  }
};

enum class Pauli { I, X, Y, Z };

/// Adds amp * P_j to the builder.
inline void add_pauli(OpBuilder& ob, const QubitMap& q, std::size_t j, Pauli p, cplx amp) {
  const int z = q.zero[j], o = q.one[j];
  switch (p) {
    case Pauli::I:
      ob.add_local(j, z, z, amp);
      ob.add_local(j, o, o, amp);
      break;
    case Pauli::X:
      ob.add_local(j, z, o, amp);
      ob.add_local(j, o, z, amp);
      break;
    case Pauli::Y:
      ob.add_local(j, z, o, -kI * amp);
      ob.add_local(j, o, z, kI * amp);
      break;
    case Pauli::Z:
      ob.add_local(j, z, z, amp);
      ob.add_local(j, o, o, -amp);
      break;
  }
}

/// Adds amp * P_j Q_k to the builder.
inline void add_pauli_pair(OpBuilder& ob, const QubitMap& q, std::size_t j, Pauli pj, std::size_t k, Pauli pk, cplx amp) {
  auto elems = [&](std::size_t s, Pauli p) {
    const int z = q.zero[s], o = q.one[s];
    std::vector<std::tuple<int, int, cplx>> e;
    switch (p) {
      case Pauli::I: e = {{z, z, 1.0}, {o, o, 1.0}}; break;
      case Pauli::X: e = {{z, o, 1.0}, {o, z, 1.0}}; break;
      case Pauli::Y: e = {{z, o, -kI}, {o, z, kI}}; break;
      case Pauli::Z: e = {{z, z, 1.0}, {o, o, -1.0}}; break;
    }
    return e;
  };
  for (auto [kj, bj, aj] : elems(j, pj))
    for (auto [kk, bk, ak] : elems(k, pk)) ob.add_pair(j, k, kj, kk, bj, bk, amp * aj * ak);
}

inline StateVec basis_state(const Basis& b, const std::vector<int>& digits) {
  auto i = b.index_of_digits(digits);
  if (!i) throw Error("space", "configuration not in the basis");
  StateVec v = StateVec::Zero(b.size());
  v(*i) = 1.0;
  return v;
}

/// Product state where site j sits in its computational label bits[j] ('0' or '1').
inline StateVec computational_state(const Basis& b, std::string_view bits) {
  if (bits.size() != b.sites()) throw Error("space", "bit string length does not match the number of sites");
  const auto q = QubitMap::of(b);
  std::vector<int> d(b.sites());
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (bits[j] != '0' && bits[j] != '1') throw Error("space", "bit strings use only '0' and '1'");
    d[j] = bits[j] == '0' ? q.zero[j] : q.one[j];
  }
  return basis_state(b, d);
}

/// Measurement label of a basis index: computational labels print as 0/1,
/// the loss sink as L and any other auxiliary level as x.
inline std::string basis_label(const Basis& b, Eigen::Index i) {
  const auto d = b.digits(i);
  const auto q = QubitMap::of(b);
  std::string s(d.size(), 'x');
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d[j] == q.zero[j]) s[j] = '0';
    else if (d[j] == q.one[j]) s[j] = '1';
    else if (!b.schemes().empty() && b.schemes()[j].labels()[d[j]] == Level::lost) s[j] = 'L';
  }
  return s;
}

/// Embeds a state from `from` into `to` (both sharing site count and computational labels).
inline StateVec embed(const StateVec& psi, const Basis& from, const Basis& to) {
  StateVec out = StateVec::Zero(to.size());
  for (Eigen::Index i = 0; i < from.size(); ++i) {
    if (psi(i) == cplx(0.0)) continue;
    auto d = from.digits(i);
    auto r = to.index_of_digits(d);
    if (!r) throw Error("space", "state has weight outside the target basis");
    out(*r) = psi(i);
  }
  return out;
}

}  // namespace rydberg
