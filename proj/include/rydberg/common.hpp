#pragma once

// Shared numeric types, error type and the project-wide unit conventions.
//
// Units: lengths in um, times in us, every frequency is an angular frequency
// in rad/us (hbar = 1). Interaction coefficients C_p are in rad/us * um^p.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rydberg {

using cplx = std::complex<double>;
using DenseOp = Eigen::MatrixXcd;
using SparseOp = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using StateVec = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Error raised by every module; `module()` names the origin so the CLI can
/// report module-tagged messages.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Numerical failure (step-size underflow, non-convergence). Maps to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline double mhz_2pi(double f_mhz) { return kTwoPi * f_mhz; }

/// Wraps an angle into (-pi, pi].
inline double wrap_phase(double a) {
  double w = std::remainder(a, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

/// Counter-based random stream: every draw is a pure function of
/// (seed, stream, counter), so shot-level work can be split freely.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + 0x9E3779B97F4A7C15ULL))) {}

  std::uint64_t next_u64() { return mix(key_ + mix(counter_++)); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open0();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stable 64-bit FNV-1a hash, used for config hashes and stream derivation.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives a per-task stream id from a task label and an index.
inline std::uint64_t derive_stream(std::string_view task, std::uint64_t index) {
  return CounterRng::mix(fnv1a(task) ^ CounterRng::mix(index));
}

inline double max_hermitian_defect(const DenseOp& h) { return (h - h.adjoint()).cwiseAbs().maxCoeff(); }

inline double max_hermitian_defect(const SparseOp& h) {
  SparseOp d = h - SparseOp(h.adjoint());
  double m = 0.0;
  for (int k = 0; k < d.outerSize(); ++k)
    for (SparseOp::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

}  // namespace rydberg
