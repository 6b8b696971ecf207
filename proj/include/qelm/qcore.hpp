#pragma once

// Dense complex linear algebra and multi-qubit primitives.
//
// Qubit ordering convention: qubit 0 is the most significant tensor factor,
// i.e. the leftmost operand of every Kronecker product. For an n-qubit basis
// index b, qubit q holds bit (b >> (n - 1 - q)) & 1.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qelm {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kUnitaryTol = 1e-9;

enum class PauliAxis { X, Y, Z };

namespace detail {

inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex z = m.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

// Returns log2(dim) or nullopt when dim is not a positive power of two.
inline std::optional<std::size_t> qubit_count(Eigen::Index dim) {
  if (dim < 1) return std::nullopt;
  std::size_t n = 0;
  auto d = static_cast<std::size_t>(dim);
  while (d > 1) {
    if (d & 1U) return std::nullopt;
    d >>= 1U;
    ++n;
  }
  return n;
}

inline std::size_t bit_of(std::size_t index, std::size_t qubit, std::size_t n) {
  return (index >> (n - 1 - qubit)) & 1U;
}

}  // namespace detail

inline ComplexMatrix identity(std::size_t dim) {
  return ComplexMatrix::Identity(static_cast<Eigen::Index>(dim),
                                 static_cast<Eigen::Index>(dim));
}

inline ComplexMatrix pauli(PauliAxis axis) {
  ComplexMatrix s(2, 2);
  const Complex i{0.0, 1.0};
  switch (axis) {
    case PauliAxis::X: s << 0.0, 1.0, 1.0, 0.0; break;
    case PauliAxis::Y: s << 0.0, -i, i, 0.0; break;
    case PauliAxis::Z: s << 1.0, 0.0, 0.0, -1.0; break;
  }
  return s;
}

inline bool is_hermitian(const ComplexMatrix& m, double tol = kHermitianTol) {
  return m.rows() == m.cols() && detail::max_abs(m - m.adjoint()) <= tol;
}

inline bool is_unitary(const ComplexMatrix& m, double tol = kUnitaryTol) {
  if (m.rows() != m.cols()) return false;
  return detail::max_abs(m * m.adjoint() - identity(m.rows())) <= tol;
}

/// Kronecker product a ⊗ b. Entry (i·rb + k, j·cb + l) = a(i,j)·b(k,l).
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Embeds σ_axis on `site` of an n-qubit register: I ⊗ … ⊗ σ ⊗ … ⊗ I.
inline ComplexMatrix pauli_embed(PauliAxis axis, std::size_t site, std::size_t n) {
  if (site >= n) {
    std::ostringstream msg;
    msg << "pauli_embed: site " << site << " out of range for " << n << " qubits";
    throw std::out_of_range(msg.str());
  }
  ComplexMatrix out = identity(1);
  for (std::size_t q = 0; q < n; ++q)
    out = kron(out, q == site ? pauli(axis) : identity(2));
  return out;
}

/// Embeds a k-qubit operator acting on `sites` (in the operator's own tensor
/// order) into an n-qubit register, identity on all other qubits.
inline ComplexMatrix embed_operator(const ComplexMatrix& op,
                                    std::span<const std::size_t> sites,
                                    std::size_t n) {
  const auto k = detail::qubit_count(op.rows());
  if (!k || op.rows() != op.cols() || *k != sites.size())
    throw std::invalid_argument("embed_operator: operator size does not match site count");
  for (std::size_t a = 0; a < sites.size(); ++a) {
    if (sites[a] >= n) throw std::out_of_range("embed_operator: site out of range");
    for (std::size_t b = a + 1; b < sites.size(); ++b)
      if (sites[a] == sites[b]) throw std::invalid_argument("embed_operator: repeated site");
  }
  const std::size_t dim = std::size_t{1} << n;
  std::vector<bool> on_site(n, false);
  for (auto s : sites) on_site[s] = true;

  auto local_index = [&](std::size_t g) {
    std::size_t l = 0;
    for (auto s : sites) l = (l << 1U) | detail::bit_of(g, s, n);
    return l;
  };
  auto rest_matches = [&](std::size_t g, std::size_t h) {
    for (std::size_t q = 0; q < n; ++q)
      if (!on_site[q] && detail::bit_of(g, q, n) != detail::bit_of(h, q, n)) return false;
    return true;
  };

  ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim),
                                          static_cast<Eigen::Index>(dim));
  for (std::size_t g = 0; g < dim; ++g)
    for (std::size_t h = 0; h < dim; ++h)
      if (rest_matches(g, h))
        out(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(h)) =
            op(static_cast<Eigen::Index>(local_index(g)),
               static_cast<Eigen::Index>(local_index(h)));
  return out;
}

/// Moves local qubit p of `m` onto global qubit labels[p]. `labels` must be a
/// permutation of 0..n-1.
inline ComplexMatrix reorder_qubits(const ComplexMatrix& m,
                                    std::span<const std::size_t> labels) {
  const auto n = detail::qubit_count(m.rows());
  if (!n || *n != labels.size() || m.rows() != m.cols())
    throw std::invalid_argument("reorder_qubits: label count does not match matrix size");
  std::vector<bool> seen(labels.size(), false);
  for (auto l : labels) {
    if (l >= labels.size() || seen[l])
      throw std::invalid_argument("reorder_qubits: labels are not a permutation");
    seen[l] = true;
  }
  const std::size_t dim = std::size_t{1} << *n;
  std::vector<Eigen::Index> to_global(dim);
  for (std::size_t b = 0; b < dim; ++b) {
    std::size_t g = 0;
    for (std::size_t p = 0; p < *n; ++p)
      g |= detail::bit_of(b, p, *n) << (*n - 1 - labels[p]);
    to_global[b] = static_cast<Eigen::Index>(g);
  }
  ComplexMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      out(to_global[i], to_global[j]) =
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

/// Partial trace of an arbitrary 2^n × 2^n matrix keeping the qubits in
/// `keep`. Kept qubits appear in ascending index order in the result.
inline ComplexMatrix partial_trace_matrix(const ComplexMatrix& m,
                                          std::span<const std::size_t> keep) {
  const auto n = detail::qubit_count(m.rows());
  if (!n || m.rows() != m.cols())
    throw std::invalid_argument("partial_trace: matrix is not a square multi-qubit operator");
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");
  std::vector<std::size_t> kept(keep.begin(), keep.end());
  std::sort(kept.begin(), kept.end());
  if (std::adjacent_find(kept.begin(), kept.end()) != kept.end())
    throw std::invalid_argument("partial_trace: repeated qubit index");
  if (kept.back() >= *n) {
    std::ostringstream msg;
    msg << "partial_trace: qubit index " << kept.back() << " out of range for " << *n
        << " qubits";
    throw std::out_of_range(msg.str());
  }

  const std::size_t dim = std::size_t{1} << *n;
  std::size_t keep_mask = 0;
  for (auto q : kept) keep_mask |= std::size_t{1} << (*n - 1 - q);
  const std::size_t trace_mask = (dim - 1) & ~keep_mask;

  auto reduced_index = [&](std::size_t g) {
    std::size_t r = 0;
    for (auto q : kept) r = (r << 1U) | detail::bit_of(g, q, *n);
    return static_cast<Eigen::Index>(r);
  };
  std::vector<Eigen::Index> red(dim);
  for (std::size_t g = 0; g < dim; ++g) red[g] = reduced_index(g);

  const auto rdim = static_cast<Eigen::Index>(std::size_t{1} << kept.size());
  ComplexMatrix out = ComplexMatrix::Zero(rdim, rdim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      if ((i & trace_mask) == (j & trace_mask))
        out(red[i], red[j]) += m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

/// Tr[a·b] in O(d²) without forming the product.
inline Complex trace_of_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a.transpose().cwiseProduct(b).sum();
}

//------------------------------------------------------------------------------
// DensityMatrix
//------------------------------------------------------------------------------

/// Hermitian, positive-semidefinite, unit-trace state on num_qubits qubits.
///
/// The checked constructor enforces every invariant. Library code that has
/// just applied a CPTP map uses the `unchecked` tag to skip the eigenvalue
/// test in hot loops; `violation()` re-checks on demand.
class DensityMatrix {
 public:
  struct unchecked_t {};
  static constexpr unchecked_t unchecked{};

  explicit DensityMatrix(ComplexMatrix m) : matrix_(std::move(m)) {
    init_shape();
    if (auto why = violation()) throw std::invalid_argument("DensityMatrix: " + *why);
  }

  DensityMatrix(ComplexMatrix m, unchecked_t) : matrix_(std::move(m)) { init_shape(); }

  static DensityMatrix basis_state(std::size_t num_qubits, std::size_t index = 0) {
    const std::size_t dim = std::size_t{1} << num_qubits;
    if (index >= dim) throw std::out_of_range("basis_state: index out of range");
    ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim),
                                          static_cast<Eigen::Index>(dim));
    m(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
    return DensityMatrix(std::move(m), unchecked);
  }

  static DensityMatrix maximally_mixed(std::size_t num_qubits) {
    const std::size_t dim = std::size_t{1} << num_qubits;
    return DensityMatrix(identity(dim) / static_cast<double>(dim), unchecked);
  }

  /// |ψ⟩⟨ψ| for a normalized state vector.
  static DensityMatrix pure(const Eigen::VectorXcd& psi) {
    if (std::abs(psi.squaredNorm() - 1.0) > kTraceTol)
      throw std::invalid_argument("DensityMatrix::pure: state vector is not normalized");
    return DensityMatrix(psi * psi.adjoint());
  }

  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t num_qubits() const noexcept { return num_qubits_; }

  Complex trace() const { return matrix_.trace(); }
  double purity() const { return trace_of_product(matrix_, matrix_).real(); }

  RealVector eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(matrix_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  /// First violated invariant, or nullopt when the state is valid.
  std::optional<std::string> violation(double herm_tol = kHermitianTol,
                                       double trace_tol = kTraceTol,
                                       double psd_tol = kPsdTol) const {
    if (!detail::all_finite(matrix_)) return "non-finite entry";
    const double herm = detail::max_abs(matrix_ - matrix_.adjoint());
    if (herm > herm_tol) return "not Hermitian (deviation " + std::to_string(herm) + ")";
    const double tr_err = std::abs(trace() - 1.0);
    if (tr_err > trace_tol) return "trace deviates from 1 by " + std::to_string(tr_err);
    const double min_eig = eigenvalues().minCoeff();
    if (min_eig < -psd_tol) return "negative eigenvalue " + std::to_string(min_eig);
    return std::nullopt;
  }

  friend bool operator==(const DensityMatrix& a, const DensityMatrix& b) {
    return a.matrix_ == b.matrix_;
  }

 private:
  void init_shape() {
    const auto n = detail::qubit_count(matrix_.rows());
    if (!n || matrix_.rows() != matrix_.cols())
      throw std::invalid_argument("DensityMatrix: matrix must be 2^n x 2^n");
    num_qubits_ = *n;
  }

  ComplexMatrix matrix_;
  std::size_t num_qubits_ = 0;
};

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix(kron(a.matrix(), b.matrix()), DensityMatrix::unchecked);
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep) {
  return DensityMatrix(partial_trace_matrix(rho.matrix(), keep), DensityMatrix::unchecked);
}

inline DensityMatrix partial_trace(const DensityMatrix& rho,
                                   std::initializer_list<std::size_t> keep) {
  return partial_trace(rho, std::span<const std::size_t>(keep.begin(), keep.size()));
}

/// Half the trace norm of a − b.
inline double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix diff = a - b;
  diff = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(diff, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return trace_distance(a.matrix(), b.matrix());
}

//------------------------------------------------------------------------------
// Operators
//------------------------------------------------------------------------------

class UnitaryOperator {
 public:
  explicit UnitaryOperator(ComplexMatrix m) : matrix_(std::move(m)) {
    if (!detail::all_finite(matrix_) || !is_unitary(matrix_))
      throw std::invalid_argument("UnitaryOperator: matrix is not unitary");
  }

  static UnitaryOperator identity_on(std::size_t num_qubits) {
    return UnitaryOperator(identity(std::size_t{1} << num_qubits));
  }

  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }

  UnitaryOperator adjoint() const { return UnitaryOperator(matrix_.adjoint()); }

  friend UnitaryOperator operator*(const UnitaryOperator& a, const UnitaryOperator& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("UnitaryOperator: dimension mismatch");
    return UnitaryOperator(a.matrix_ * b.matrix_);
  }

 private:
  ComplexMatrix matrix_;
};

/// Hermitian operator with its spectral decomposition computed at
/// construction: matrix = V · diag(eigenvalues) · V†.
class HermitianOperator {
 public:
  explicit HermitianOperator(ComplexMatrix m) : matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols())
      throw std::invalid_argument("HermitianOperator: matrix is not square");
    if (!detail::all_finite(matrix_))
      throw std::invalid_argument("HermitianOperator: non-finite entry");
    if (!is_hermitian(matrix_))
      throw std::invalid_argument("HermitianOperator: matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(matrix_);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("HermitianOperator: eigendecomposition failed");
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
  }

  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  const RealVector& eigenvalues() const noexcept { return eigenvalues_; }
  const ComplexMatrix& eigenvectors() const noexcept { return eigenvectors_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }

 private:
  ComplexMatrix matrix_;
  RealVector eigenvalues_;
  ComplexMatrix eigenvectors_;
};

/// exp(−i·H·t) through the cached eigendecomposition.
inline UnitaryOperator herm_expm(const HermitianOperator& h, double t) {
  const auto& v = h.eigenvectors();
  Eigen::VectorXcd phases(v.cols());
  for (Eigen::Index j = 0; j < phases.size(); ++j)
    phases(j) = std::exp(Complex{0.0, -h.eigenvalues()(j) * t});
  return UnitaryOperator(v * phases.asDiagonal() * v.adjoint());
}

/// Tr[obs·ρ]; throws when the imaginary part exceeds tolerance, which means
/// either obs or ρ is not Hermitian.
inline double expectation(const DensityMatrix& rho, const ComplexMatrix& obs) {
  if (obs.rows() != obs.cols() || static_cast<std::size_t>(obs.rows()) != rho.dim())
    throw std::invalid_argument("expectation: observable dimension does not match state");
  const Complex value = trace_of_product(obs, rho.matrix());
  if (std::abs(value.imag()) > kHermitianTol)
    throw std::domain_error("expectation: imaginary part " + std::to_string(value.imag()) +
                            " exceeds tolerance (corrupted state or non-Hermitian observable)");
  return value.real();
}

}  // namespace qelm
