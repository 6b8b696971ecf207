#pragma once

// Portable, seedable random streams. std::mt19937_64 output is fully
// specified by the standard; the distributions below are built on its raw
// output so sampled values match bit-for-bit across standard libraries.

#include "qelm/qcore.hpp"

#include <cstdint>
#include <numbers>
#include <random>

namespace qelm {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30U)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27U)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31U);
}

/// Child seed for stream `index` under `master`. Independent of how many
/// other children exist, so adding realizations never perturbs earlier ones.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random mantissa bits.
  double uniform01() { return static_cast<double>(engine_() >> 11U) * 0x1.0p-53; }

  /// Uniform on [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u = 1.0 - uniform01();
    const double v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }

  Complex complex_normal() { return {normal(), normal()}; }

 private:
  std::mt19937_64 engine_;
};

inline ComplexMatrix random_ginibre(Rng& rng, std::size_t rows, std::size_t cols) {
  ComplexMatrix g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.complex_normal();
  return g;
}

/// Random mixed state on n qubits (Ginibre ensemble, full rank).
inline DensityMatrix random_density(Rng& rng, std::size_t num_qubits) {
  const std::size_t dim = std::size_t{1} << num_qubits;
  const ComplexMatrix g = random_ginibre(rng, dim, dim);
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace();
  rho = 0.5 * (rho + rho.adjoint());
  return DensityMatrix(std::move(rho));
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
inline UnitaryOperator random_unitary(Rng& rng, std::size_t dim) {
  const ComplexMatrix g = random_ginibre(rng, dim, dim);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return UnitaryOperator(std::move(q));
}

inline HermitianOperator random_hermitian(Rng& rng, std::size_t dim) {
  const ComplexMatrix g = random_ginibre(rng, dim, dim);
  return HermitianOperator(0.5 * (g + g.adjoint()));
}

}  // namespace qelm
