#pragma once

// Quantum channels used by the collision model: partial swaps, single-qubit
// depolarization, and generic Kraus maps.

#include "qelm/qcore.hpp"

#include <array>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace qelm {

inline constexpr double kCompletenessTol = 1e-10;

/// Σ K_i† K_i = I to within tol, entrywise.
inline bool verify_cptp(std::span<const ComplexMatrix> operators, double tol) {
  if (operators.empty()) return false;
  const auto dim = operators.front().cols();
  ComplexMatrix sum = ComplexMatrix::Zero(dim, dim);
  for (const auto& k : operators) {
    if (k.cols() != dim || k.rows() != dim) return false;
    sum.noalias() += k.adjoint() * k;
  }
  return detail::max_abs(sum - ComplexMatrix::Identity(dim, dim)) <= tol;
}

/// Completely positive trace-preserving map E(ρ) = Σ K_i ρ K_i†.
class KrausChannel {
 public:
  explicit KrausChannel(std::vector<ComplexMatrix> operators, std::string label = {})
      : operators_(std::move(operators)), label_(std::move(label)) {
    if (operators_.empty()) throw std::invalid_argument("KrausChannel: no Kraus operators");
    const auto dim = operators_.front().rows();
    for (const auto& k : operators_)
      if (k.rows() != dim || k.cols() != dim)
        throw std::invalid_argument("KrausChannel: operators must share one square shape");
#ifndef NDEBUG
    if (!verify_cptp(operators_, kCompletenessTol))
      throw std::invalid_argument("KrausChannel '" + label_ + "': completeness violated");
#endif
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(operators_.front().rows()); }
  const std::vector<ComplexMatrix>& operators() const noexcept { return operators_; }
  const std::string& label() const noexcept { return label_; }

  bool is_cptp(double tol = kCompletenessTol) const { return verify_cptp(operators_, tol); }

  /// Applies the map to an arbitrary (not necessarily physical) matrix; the
  /// map is linear so this also serves superoperator construction.
  ComplexMatrix apply(const ComplexMatrix& m) const {
    ComplexMatrix out = ComplexMatrix::Zero(m.rows(), m.cols());
    for (const auto& k : operators_) out.noalias() += k * m * k.adjoint();
    return out;
  }

 private:
  std::vector<ComplexMatrix> operators_;
  std::string label_;
};

inline bool verify_cptp(const KrausChannel& channel, double tol) {
  return verify_cptp(channel.operators(), tol);
}

inline DensityMatrix apply_kraus(const DensityMatrix& rho, const KrausChannel& channel) {
  if (channel.dim() != rho.dim())
    throw std::invalid_argument("apply_kraus: channel dimension does not match state");
  return DensityMatrix(channel.apply(rho.matrix()), DensityMatrix::unchecked);
}

inline DensityMatrix apply_unitary(const DensityMatrix& rho, const UnitaryOperator& u) {
  if (u.dim() != rho.dim())
    throw std::invalid_argument("apply_unitary: unitary dimension does not match state");
  return DensityMatrix(u.matrix() * rho.matrix() * u.matrix().adjoint(),
                       DensityMatrix::unchecked);
}

/// SWAP on two qubits, (I + XX + YY + ZZ) / 2.
inline ComplexMatrix swap_gate() {
  ComplexMatrix s = identity(4);
  for (auto axis : {PauliAxis::X, PauliAxis::Y, PauliAxis::Z})
    s += kron(pauli(axis), pauli(axis));
  return 0.5 * s;
}

/// cos(χ)·I + i·sin(χ)·SWAP acting on qubits (pair.first, pair.second) of an
/// n-qubit register.
inline UnitaryOperator partial_swap(double chi, std::pair<std::size_t, std::size_t> pair,
                                    std::size_t n) {
  if (!(chi >= 0.0 && chi <= std::numbers::pi / 2))
    throw std::domain_error("partial_swap: chi=" + std::to_string(chi) +
                            " outside [0, pi/2]");
  if (pair.first == pair.second)
    throw std::invalid_argument("partial_swap: system and bath indices coincide");
  const ComplexMatrix local =
      std::cos(chi) * identity(4) + Complex{0.0, std::sin(chi)} * swap_gate();
  const std::array<std::size_t, 2> sites{pair.first, pair.second};
  return UnitaryOperator(embed_operator(local, sites, n));
}

/// Kraus form of the single-qubit depolarizing map on `site`:
/// K0 = √(1−3λ/4)·I, K1..3 = √(λ/4)·σ_{x,y,z}.
inline KrausChannel depolarizing_channel(double lambda, std::size_t site, std::size_t n) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::domain_error("depolarize: lambda=" + std::to_string(lambda) +
                            " outside [0, 1]");
  if (site >= n) throw std::out_of_range("depolarize: site out of range");
  std::vector<ComplexMatrix> ops;
  ops.reserve(4);
  ops.push_back(std::sqrt(1.0 - 0.75 * lambda) * identity(std::size_t{1} << n));
  const double w = std::sqrt(0.25 * lambda);
  for (auto axis : {PauliAxis::X, PauliAxis::Y, PauliAxis::Z})
    ops.push_back(w * pauli_embed(axis, site, n));
  return KrausChannel(std::move(ops), "depolarize(q" + std::to_string(site) + ")");
}

inline DensityMatrix depolarize_qubit(const DensityMatrix& rho, double lambda, std::size_t site) {
  if (site >= rho.num_qubits())
    throw std::out_of_range("depolarize_qubit: site " + std::to_string(site) +
                            " out of range");
  return apply_kraus(rho, depolarizing_channel(lambda, site, rho.num_qubits()));
}

}  // namespace qelm
