#pragma once

// Quantum extreme learning machine reservoir: a fixed transverse-field Ising
// network that maps each injected system state to Pauli expectation values.
//
// Collision steps are numbered k = 1..K throughout, matching Trajectory.

#include "qelm/channels.hpp"
#include "qelm/collision.hpp"
#include "qelm/qcore.hpp"
#include "qelm/random.hpp"

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qelm {

struct ReservoirConfig {
  std::size_t n_res = 5;
  double h = 1.0;
  RealMatrix j_matrix = RealMatrix::Zero(5, 5);
  double j_scale = 1.0;
  double evolve_time = 10.0;
  std::vector<std::size_t> input_sites = {0, 1};
  DensityMatrix ancilla_init = DensityMatrix::basis_state(3);
  std::uint64_t seed = 0;

  /// Reservoir qubits not listed in input_sites, ascending.
  std::vector<std::size_t> ancilla_sites() const {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < n_res; ++q)
      if (std::find(input_sites.begin(), input_sites.end(), q) == input_sites.end())
        out.push_back(q);
    return out;
  }

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw std::domain_error("ReservoirConfig." + field + ": " + why);
    };
    if (n_res < 1) fail("n_res", "must be at least 1");
    if (!std::isfinite(h)) fail("h", "must be finite");
    if (!(j_scale >= 0.0) || !std::isfinite(j_scale)) fail("j_scale", "must be finite and >= 0");
    if (!(evolve_time >= 0.0) || !std::isfinite(evolve_time))
      fail("evolve_time", "must be finite and >= 0");
    const auto n = static_cast<Eigen::Index>(n_res);
    if (j_matrix.rows() != n || j_matrix.cols() != n) fail("j_matrix", "must be n_res x n_res");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (j_matrix(i, i) != 0.0) fail("j_matrix", "diagonal must be zero");
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j_matrix(i, j) != j_matrix(j, i)) fail("j_matrix", "must be symmetric");
        if (!(std::abs(j_matrix(i, j)) <= 0.5 * j_scale))
          fail("j_matrix", "coupling exceeds j_scale/2");
      }
    }
    if (input_sites.empty() || input_sites.size() > n_res)
      fail("input_sites", "must name between 1 and n_res qubits");
    for (std::size_t a = 0; a < input_sites.size(); ++a) {
      if (input_sites[a] >= n_res) fail("input_sites", "index out of range");
      for (std::size_t b = a + 1; b < input_sites.size(); ++b)
        if (input_sites[a] == input_sites[b]) fail("input_sites", "indices must be distinct");
    }
    const std::size_t n_anc = n_res - input_sites.size();
    if (n_anc > 0 && ancilla_init.num_qubits() != n_anc)
      fail("ancilla_init", "must act on the " + std::to_string(n_anc) + " non-input qubits");
  }

  void validate_for(std::size_t n_sys) const {
    validate();
    if (input_sites.size() != n_sys)
      throw std::domain_error("ReservoirConfig.input_sites: count " +
                              std::to_string(input_sites.size()) +
                              " does not match system qubit count " + std::to_string(n_sys));
  }
};

/// Symmetric, zero-diagonal couplings uniform on [−j_scale/2, j_scale/2],
/// drawn for i < j in row-major order.
inline RealMatrix sample_reservoir_couplings(Rng& rng, std::size_t n_res, double j_scale) {
  if (!(j_scale >= 0.0))
    throw std::domain_error("sample_reservoir_couplings: j_scale must be >= 0");
  const auto n = static_cast<Eigen::Index>(n_res);
  RealMatrix j = RealMatrix::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) j(a, b) = j(b, a) = rng.uniform(-0.5 * j_scale, 0.5 * j_scale);
  return j;
}

/// H = Σ_{i<j} J_ij σx_i σx_j + h Σ_i σz_i.
inline HermitianOperator build_reservoir_hamiltonian(const ReservoirConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_res;
  const std::size_t dim = std::size_t{1} << n;
  ComplexMatrix h = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim),
                                        static_cast<Eigen::Index>(dim));
  std::vector<ComplexMatrix> sx;
  sx.reserve(n);
  for (std::size_t i = 0; i < n; ++i) sx.push_back(pauli_embed(PauliAxis::X, i, n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double jij = cfg.j_matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (jij != 0.0) h += jij * sx[i] * sx[j];
    }
    if (cfg.h != 0.0) h += cfg.h * pauli_embed(PauliAxis::Z, i, n);
  }
  return HermitianOperator(std::move(h));
}

/// Places `rho_in` on cfg.input_sites (in order) and ancilla_init on the
/// remaining qubits. Linear in `rho_in`.
inline ComplexMatrix inject_matrix(const ComplexMatrix& rho_in, const ReservoirConfig& cfg) {
  const auto n_in = detail::qubit_count(rho_in.rows());
  if (!n_in || *n_in != cfg.input_sites.size())
    throw std::invalid_argument("inject: input has " +
                                (n_in ? std::to_string(*n_in) : std::string("non-qubit")) +
                                " qubits but " + std::to_string(cfg.input_sites.size()) +
                                " input sites are configured");
  std::vector<std::size_t> labels = cfg.input_sites;
  const auto anc = cfg.ancilla_sites();
  labels.insert(labels.end(), anc.begin(), anc.end());
  const ComplexMatrix product =
      anc.empty() ? rho_in : kron(rho_in, cfg.ancilla_init.matrix());
  return reorder_qubits(product, labels);
}

inline DensityMatrix inject(const DensityMatrix& rho_in, const ReservoirConfig& cfg) {
  return DensityMatrix(inject_matrix(rho_in.matrix(), cfg), DensityMatrix::unchecked);
}

enum class MeasurementBasis { Z, X };

/// Evolves under exp(−i·H·t) and returns ⟨σ_i^basis⟩ for every reservoir
/// qubit, one block of n_res values per entry of `bases`.
inline RealVector evolve_and_measure(const DensityMatrix& rho_res, const HermitianOperator& h_res,
                                     double t, std::span<const MeasurementBasis> bases) {
  if (rho_res.dim() != h_res.dim())
    throw std::invalid_argument("evolve_and_measure: state and Hamiltonian dimensions differ");
  if (!(t >= 0.0)) throw std::domain_error("evolve_and_measure: t must be >= 0");
  const std::size_t n = rho_res.num_qubits();
  const DensityMatrix evolved = apply_unitary(rho_res, herm_expm(h_res, t));
  RealVector out(static_cast<Eigen::Index>(n * bases.size()));
  Eigen::Index idx = 0;
  for (auto basis : bases) {
    const PauliAxis axis = basis == MeasurementBasis::Z ? PauliAxis::Z : PauliAxis::X;
    for (std::size_t i = 0; i < n; ++i) out(idx++) = expectation(evolved, pauli_embed(axis, i, n));
  }
  return out;
}

/// The full injection → evolution → measurement map for one reservoir
/// instance. Every feature is linear in the injected system state, so each
/// observable is folded back (Heisenberg picture) into an effective
/// observable M on the input qubits: ⟨σ_i(t)⟩ = Tr[M_i ρ_in].
class ReservoirMap {
 public:
  explicit ReservoirMap(const ReservoirConfig& cfg) : n_res_(cfg.n_res) {
    cfg.validate();
    const auto h = build_reservoir_hamiltonian(cfg);
    const ComplexMatrix u = herm_expm(h, cfg.evolve_time).matrix();
    const std::size_t d_in = std::size_t{1} << cfg.input_sites.size();
    const auto di = static_cast<Eigen::Index>(d_in);

    std::vector<ComplexMatrix> heisenberg;
    for (auto axis : {PauliAxis::Z, PauliAxis::X})
      for (std::size_t i = 0; i < n_res_; ++i)
        heisenberg.push_back(u.adjoint() * pauli_embed(axis, i, n_res_) * u);

    effective_.assign(heisenberg.size(), ComplexMatrix::Zero(di, di));
    for (Eigen::Index a = 0; a < di; ++a) {
      for (Eigen::Index b = 0; b < di; ++b) {
        ComplexMatrix unit = ComplexMatrix::Zero(di, di);
        unit(a, b) = 1.0;
        const ComplexMatrix injected = inject_matrix(unit, cfg);
        // f(ρ) = Σ_ab ρ_ab Tr[O ι(E_ab)] = Tr[M ρ] with M_ba = Tr[O ι(E_ab)].
        for (std::size_t o = 0; o < heisenberg.size(); ++o)
          effective_[o](b, a) = trace_of_product(heisenberg[o], injected);
      }
    }
  }

  std::size_t n_res() const noexcept { return n_res_; }

  /// Z-basis block followed by X-basis block, each of length n_res.
  RealVector measure(const DensityMatrix& rho_in) const {
    if (rho_in.dim() != static_cast<std::size_t>(effective_.front().rows()))
      throw std::invalid_argument("ReservoirMap: input dimension mismatch");
    RealVector out(static_cast<Eigen::Index>(effective_.size()));
    for (std::size_t o = 0; o < effective_.size(); ++o)
      out(static_cast<Eigen::Index>(o)) = trace_of_product(effective_[o], rho_in.matrix()).real();
    return out;
  }

 private:
  std::size_t n_res_;
  std::vector<ComplexMatrix> effective_;
};

/// Raw per-step reservoir outputs; z[k-1] and x[k-1] belong to step k.
struct TrajectoryFeatures {
  std::vector<RealVector> z;
  std::vector<RealVector> x;

  std::size_t steps() const noexcept { return z.size(); }
};

/// Stateless QELM mapping: the reservoir is re-initialized for every step.
inline TrajectoryFeatures features_for_trajectory(const Trajectory& traj, const ReservoirMap& map) {
  if (traj.states.empty()) throw std::invalid_argument("features_for_trajectory: empty trajectory");
  const auto n = static_cast<Eigen::Index>(map.n_res());
  TrajectoryFeatures out;
  out.z.reserve(traj.steps());
  out.x.reserve(traj.steps());
  for (const auto& rho : traj.states) {
    const RealVector both = map.measure(rho);
    out.z.emplace_back(both.head(n));
    out.x.emplace_back(both.tail(n));
  }
  return out;
}

inline TrajectoryFeatures features_for_trajectory(const Trajectory& traj,
                                                  const ReservoirConfig& cfg) {
  cfg.validate_for(traj.config.n_sys);
  return features_for_trajectory(traj, ReservoirMap(cfg));
}

//------------------------------------------------------------------------------
// Feature extensions
//------------------------------------------------------------------------------

struct Extension {
  enum class Kind { none, past_step, fixed_step, extra_observable };

  Kind kind = Kind::none;
  std::size_t reference_step = 1;  // k₁, used by fixed_step only

  static Extension none() { return {Kind::none, 1}; }
  static Extension past_step() { return {Kind::past_step, 1}; }
  static Extension fixed_step(std::size_t k1) { return {Kind::fixed_step, k1}; }
  static Extension extra_observable() { return {Kind::extra_observable, 1}; }

  /// Smallest step at which the extension is defined.
  std::size_t first_valid_step() const {
    switch (kind) {
      case Kind::past_step: return 2;
      case Kind::fixed_step: return reference_step;
      default: return 1;
    }
  }

  std::size_t feature_length(std::size_t n_res) const {
    return kind == Kind::none ? n_res : 2 * n_res;
  }

  std::string name() const {
    switch (kind) {
      case Kind::none: return "none";
      case Kind::past_step: return "past_step";
      case Kind::fixed_step: return "fixed_step:" + std::to_string(reference_step);
      case Kind::extra_observable: return "extra_observable";
    }
    return "?";
  }

  /// Accepts none, past_step, fixed_step:<k1> (bare fixed_step means k1 = 1)
  /// and extra_observable.
  static Extension parse(std::string_view s) {
    if (s == "none") return none();
    if (s == "past_step") return past_step();
    if (s == "extra_observable") return extra_observable();
    if (s == "fixed_step") return fixed_step(1);
    constexpr std::string_view prefix = "fixed_step:";
    if (s.starts_with(prefix)) {
      std::size_t k1 = 0;
      const auto digits = s.substr(prefix.size());
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k1);
      if (ec == std::errc{} && ptr == digits.data() + digits.size() && k1 >= 1)
        return fixed_step(k1);
    }
    throw std::invalid_argument("unknown extension '" + std::string(s) +
                                "' (expected none, past_step, fixed_step:<k>, extra_observable)");
  }

  friend bool operator==(const Extension&, const Extension&) = default;
};

struct FeatureVector {
  std::size_t step = 1;
  RealVector values;
  Extension extension;
};

/// Feature vector for step k (1-based):
///   none             → z_k
///   past_step        → (z_k, z_{k−1})
///   fixed_step(k₁)   → (z_k, z_{k₁})
///   extra_observable → (z_k, x_k)
inline FeatureVector augment(std::span<const RealVector> raw_z, std::span<const RealVector> raw_x,
                             std::size_t k, Extension mode) {
  if (k < 1 || k > raw_z.size())
    throw std::out_of_range("augment: step " + std::to_string(k) + " outside 1.." +
                            std::to_string(raw_z.size()));
  if (k < mode.first_valid_step())
    throw std::out_of_range("augment: step " + std::to_string(k) + " is before the first valid step " +
                            std::to_string(mode.first_valid_step()) + " of " + mode.name());
  const RealVector& current = raw_z[k - 1];
  auto concat = [&](const RealVector& other) {
    RealVector v(current.size() + other.size());
    v << current, other;
    return v;
  };
  FeatureVector out{k, {}, mode};
  switch (mode.kind) {
    case Extension::Kind::none: out.values = current; break;
    case Extension::Kind::past_step: out.values = concat(raw_z[k - 2]); break;
    case Extension::Kind::fixed_step: out.values = concat(raw_z[mode.reference_step - 1]); break;
    case Extension::Kind::extra_observable:
      if (raw_x.size() < k) throw std::out_of_range("augment: missing X-basis features");
      out.values = concat(raw_x[k - 1]);
      break;
  }
  return out;
}

inline FeatureVector augment(const TrajectoryFeatures& f, std::size_t k, Extension mode) {
  return augment(f.z, f.x, k, mode);
}

}  // namespace qelm
