#pragma once

// Non-Markovian collision model.
//
// Register layout: system qubits occupy indices 0..n_sys-1 of the joint
// register, bath qubits follow at n_sys..n_sys+n_bath-1. System qubit m
// exchanges with bath qubit m.
//
// One collision step applies, in order:
//   1. exchange       P_m(χ) = cos χ·I + i sin χ·SWAP on every (S_m, Q_m)
//   2. depolarization single-qubit depolarizing map of strength λ on every Q_m
//   3. bath evolution exp(−i H_bath Δt)
//   4. system evolution exp(−i H_sys Δt)

#include "qelm/channels.hpp"
#include "qelm/qcore.hpp"
#include "qelm/random.hpp"

#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace qelm {

enum class Boundary { open, periodic };

inline std::string_view to_string(Boundary b) {
  return b == Boundary::open ? "open" : "periodic";
}

inline Boundary parse_boundary(std::string_view s) {
  if (s == "open") return Boundary::open;
  if (s == "periodic") return Boundary::periodic;
  throw std::invalid_argument("unknown boundary '" + std::string(s) +
                              "' (expected open or periodic)");
}

/// Number of nearest-neighbour bonds of an n-site chain.
inline std::size_t bond_count(std::size_t n, Boundary boundary) {
  if (n < 2) return 0;
  return boundary == Boundary::open ? n - 1 : n;
}

struct CollisionConfig {
  std::size_t n_sys = 2;
  std::size_t n_bath = 2;
  double chi = 0.0;
  double lambda = 0.0;
  std::vector<double> j_sys = {0.0};
  std::vector<double> j_bath = {0.0};
  double j_scale = 1.0;
  double dt = 1.0;
  Boundary boundary = Boundary::open;
  // When false the bath qubits never interact (j_bath forced to zero on
  // sampling), which removes the bath-mediated memory channel.
  bool interacting_bath = true;
  DensityMatrix sys_init = DensityMatrix::basis_state(2);
  DensityMatrix bath_init = DensityMatrix::maximally_mixed(2);
  std::uint64_t seed = 0;

  std::size_t total_qubits() const { return n_sys + n_bath; }

  /// Throws std::invalid_argument / std::domain_error naming the offending field.
  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw std::domain_error("CollisionConfig." + field + ": " + why);
    };
    if (n_sys < 1) fail("n_sys", "must be at least 1");
    if (n_bath != n_sys) fail("n_bath", "must equal n_sys");
    if (!(chi >= 0.0 && chi <= std::numbers::pi / 2)) fail("chi", "outside [0, pi/2]");
    if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda", "outside [0, 1]");
    if (!(j_scale >= 0.0) || !std::isfinite(j_scale)) fail("j_scale", "must be finite and >= 0");
    if (!std::isfinite(dt)) fail("dt", "must be finite");
    const std::size_t bonds = bond_count(n_sys, boundary);
    if (j_sys.size() != bonds)
      fail("j_sys", "expected " + std::to_string(bonds) + " couplings for " +
                        std::string(to_string(boundary)) + " boundary, got " +
                        std::to_string(j_sys.size()));
    if (j_bath.size() != bond_count(n_bath, boundary))
      fail("j_bath", "expected " + std::to_string(bond_count(n_bath, boundary)) +
                         " couplings, got " + std::to_string(j_bath.size()));
    for (double j : j_sys)
      if (!(std::abs(j) <= j_scale)) fail("j_sys", "coupling exceeds j_scale");
    for (double j : j_bath)
      if (!(std::abs(j) <= j_scale)) fail("j_bath", "coupling exceeds j_scale");
    if (sys_init.num_qubits() != n_sys) fail("sys_init", "qubit count does not match n_sys");
    if (bath_init.num_qubits() != n_bath) fail("bath_init", "qubit count does not match n_bath");
  }
};

/// Reduced system states ρ_S^(1..K) produced by one run of the model.
struct Trajectory {
  std::vector<DensityMatrix> states;
  CollisionConfig config;

  std::size_t steps() const noexcept { return states.size(); }
  const DensityMatrix& at_step(std::size_t k) const { return states.at(k - 1); }
};

/// ½ Σ_bonds J_b (X X + Y Y + Z Z) on an n-site chain; bond b joins sites b
/// and (b+1) mod n.
inline HermitianOperator build_heisenberg(std::span<const double> couplings, std::size_t n,
                                          Boundary boundary) {
  if (n < 1) throw std::invalid_argument("build_heisenberg: need at least one site");
  const std::size_t bonds = bond_count(n, boundary);
  if (couplings.size() != bonds)
    throw std::invalid_argument("build_heisenberg: expected " + std::to_string(bonds) +
                                " couplings, got " + std::to_string(couplings.size()));
  const std::size_t dim = std::size_t{1} << n;
  ComplexMatrix h = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim),
                                        static_cast<Eigen::Index>(dim));
  for (std::size_t b = 0; b < bonds; ++b) {
    if (couplings[b] == 0.0) continue;
    const std::size_t i = b;
    const std::size_t j = (b + 1) % n;
    for (auto axis : {PauliAxis::X, PauliAxis::Y, PauliAxis::Z})
      h += 0.5 * couplings[b] * pauli_embed(axis, i, n) * pauli_embed(axis, j, n);
  }
  return HermitianOperator(std::move(h));
}

/// Independent uniform draws on [−j_scale, j_scale].
inline std::vector<double> sample_couplings(Rng& rng, std::size_t n_bonds, double j_scale) {
  if (!(j_scale >= 0.0)) throw std::domain_error("sample_couplings: j_scale must be >= 0");
  std::vector<double> out(n_bonds);
  for (auto& j : out) j = rng.uniform(-j_scale, j_scale);
  return out;
}

/// Draws j_sys then j_bath from `rng` in that order. A non-interacting bath
/// still consumes its draws so both settings share the system couplings.
inline void sample_collision_couplings(CollisionConfig& cfg, Rng& rng) {
  cfg.j_sys = sample_couplings(rng, bond_count(cfg.n_sys, cfg.boundary), cfg.j_scale);
  cfg.j_bath = sample_couplings(rng, bond_count(cfg.n_bath, cfg.boundary), cfg.j_scale);
  if (!cfg.interacting_bath) std::fill(cfg.j_bath.begin(), cfg.j_bath.end(), 0.0);
}

/// The χ- and λ-independent part of a configuration: free evolution of bath
/// and system over Δt, embedded on the joint register. Shared across every
/// grid point with the same couplings.
struct CollisionEvolution {
  UnitaryOperator u_bath;
  UnitaryOperator u_sys;

  static CollisionEvolution from_config(const CollisionConfig& cfg) {
    const auto h_sys = build_heisenberg(cfg.j_sys, cfg.n_sys, cfg.boundary);
    const auto h_bath = build_heisenberg(cfg.j_bath, cfg.n_bath, cfg.boundary);
    const ComplexMatrix u_sys = herm_expm(h_sys, cfg.dt).matrix();
    const ComplexMatrix u_bath = herm_expm(h_bath, cfg.dt).matrix();
    return {
        UnitaryOperator(kron(identity(std::size_t{1} << cfg.n_sys), u_bath)),
        UnitaryOperator(kron(u_sys, identity(std::size_t{1} << cfg.n_bath))),
    };
  }
};

enum class CollisionPhase { exchange, depolarization, bath_evolution, system_evolution };

inline std::string_view to_string(CollisionPhase p) {
  switch (p) {
    case CollisionPhase::exchange: return "exchange";
    case CollisionPhase::depolarization: return "depolarization";
    case CollisionPhase::bath_evolution: return "bath_evolution";
    case CollisionPhase::system_evolution: return "system_evolution";
  }
  return "?";
}

using PhaseObserver = std::function<void(CollisionPhase, const ComplexMatrix&)>;

/// Precomputed operators for one (χ, λ, couplings) configuration.
class CollisionProtocol {
 public:
  CollisionProtocol(const CollisionConfig& cfg, CollisionEvolution evolution)
      : n_sys_(cfg.n_sys), n_bath_(cfg.n_bath), evolution_(std::move(evolution)),
        exchange_(UnitaryOperator::identity_on(cfg.total_qubits())) {
    const std::size_t total = cfg.total_qubits();
    if (evolution_.u_bath.dim() != (std::size_t{1} << total) ||
        evolution_.u_sys.dim() != (std::size_t{1} << total))
      throw std::invalid_argument("CollisionProtocol: evolution unitaries must act on the joint register");
    // Pair swaps act on disjoint qubits and commute; their product is one unitary.
    ComplexMatrix ex = identity(std::size_t{1} << total);
    for (std::size_t m = 0; m < n_sys_; ++m)
      ex = partial_swap(cfg.chi, {m, n_sys_ + m}, total).matrix() * ex;
    exchange_ = UnitaryOperator(std::move(ex));
    depolarizers_.reserve(n_bath_);
    for (std::size_t m = 0; m < n_bath_; ++m) {
      depolarizers_.push_back(depolarizing_channel(cfg.lambda, n_sys_ + m, total));
      if (!depolarizers_.back().is_cptp())
        throw std::logic_error("CollisionProtocol: depolarizing channel failed CPTP check");
    }
  }

  explicit CollisionProtocol(const CollisionConfig& cfg)
      : CollisionProtocol(cfg, CollisionEvolution::from_config(cfg)) {}

  std::size_t n_sys() const noexcept { return n_sys_; }
  std::size_t n_bath() const noexcept { return n_bath_; }
  std::size_t dim() const noexcept { return exchange_.dim(); }

  /// One collision step on an arbitrary joint-register matrix. Linear in `m`.
  ComplexMatrix step(const ComplexMatrix& m, const PhaseObserver& observer = {}) const {
    auto emit = [&](CollisionPhase phase, const ComplexMatrix& x) {
      if (observer) observer(phase, x);
    };
    const auto& ex = exchange_.matrix();
    ComplexMatrix x = ex * m * ex.adjoint();
    emit(CollisionPhase::exchange, x);
    for (const auto& d : depolarizers_) x = d.apply(x);
    emit(CollisionPhase::depolarization, x);
    const auto& ub = evolution_.u_bath.matrix();
    x = ub * x * ub.adjoint();
    emit(CollisionPhase::bath_evolution, x);
    const auto& us = evolution_.u_sys.matrix();
    x = us * x * us.adjoint();
    emit(CollisionPhase::system_evolution, x);
    return x;
  }

  DensityMatrix step(const DensityMatrix& rho, const PhaseObserver& observer = {}) const {
    if (rho.dim() != dim())
      throw std::invalid_argument("collision_step: state dimension does not match register");
    return DensityMatrix(step(rho.matrix(), observer), DensityMatrix::unchecked);
  }

  std::vector<std::size_t> system_qubits() const {
    std::vector<std::size_t> q(n_sys_);
    for (std::size_t i = 0; i < n_sys_; ++i) q[i] = i;
    return q;
  }

  std::vector<std::size_t> bath_qubits() const {
    std::vector<std::size_t> q(n_bath_);
    for (std::size_t i = 0; i < n_bath_; ++i) q[i] = n_sys_ + i;
    return q;
  }

 private:
  std::size_t n_sys_;
  std::size_t n_bath_;
  CollisionEvolution evolution_;
  UnitaryOperator exchange_;
  std::vector<KrausChannel> depolarizers_;
};

/// One collision step with caller-provided free-evolution unitaries, both
/// already embedded on the joint register.
inline DensityMatrix collision_step(const DensityMatrix& rho_sb, const CollisionConfig& cfg,
                                    const UnitaryOperator& u_bath,
                                    const UnitaryOperator& u_sys) {
  if (rho_sb.num_qubits() != cfg.total_qubits())
    throw std::invalid_argument("collision_step: state has " +
                                std::to_string(rho_sb.num_qubits()) + " qubits, expected " +
                                std::to_string(cfg.total_qubits()));
  const CollisionProtocol protocol(cfg, CollisionEvolution{u_bath, u_sys});
  return protocol.step(rho_sb);
}

inline Trajectory generate_trajectory(const CollisionConfig& cfg, std::size_t steps,
                                      const CollisionEvolution& evolution) {
  if (steps == 0) throw std::invalid_argument("generate_trajectory: steps must be >= 1");
  cfg.validate();
  const CollisionProtocol protocol(cfg, evolution);
  const auto sys = protocol.system_qubits();
  Trajectory traj{{}, cfg};
  traj.states.reserve(steps);
  ComplexMatrix joint = kron(cfg.sys_init.matrix(), cfg.bath_init.matrix());
  for (std::size_t k = 0; k < steps; ++k) {
    joint = protocol.step(joint);
    traj.states.emplace_back(partial_trace_matrix(joint, sys), DensityMatrix::unchecked);
  }
  return traj;
}

inline Trajectory generate_trajectory(const CollisionConfig& cfg, std::size_t steps) {
  cfg.validate();
  return generate_trajectory(cfg, steps, CollisionEvolution::from_config(cfg));
}

/// Linear map on system states acting on column-major vectorized density
/// matrices: vec(Φ(ρ)) = superoperator · vec(ρ).
class MarkovMap {
 public:
  explicit MarkovMap(ComplexMatrix superoperator) : super_(std::move(superoperator)) {
    const auto d2 = super_.rows();
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(d2))));
    if (super_.rows() != super_.cols() || d * d != d2)
      throw std::invalid_argument("MarkovMap: superoperator must be d^2 x d^2");
    dim_ = static_cast<std::size_t>(d);
  }

  const ComplexMatrix& superoperator() const noexcept { return super_; }
  std::size_t dim() const noexcept { return dim_; }

  ComplexMatrix apply(const ComplexMatrix& rho) const {
    const auto d = static_cast<Eigen::Index>(dim_);
    if (rho.rows() != d || rho.cols() != d)
      throw std::invalid_argument("MarkovMap: state dimension mismatch");
    const Eigen::VectorXcd v = super_ * rho.reshaped();
    return v.reshaped(d, d);
  }

  DensityMatrix apply(const DensityMatrix& rho) const {
    return DensityMatrix(apply(rho.matrix()), DensityMatrix::unchecked);
  }

  /// Max |Σ_i Φ(E_jk)_ii − δ_jk| over the matrix-unit basis.
  double trace_preservation_error() const {
    double err = 0.0;
    const auto d = static_cast<Eigen::Index>(dim_);
    for (Eigen::Index col = 0; col < super_.cols(); ++col) {
      Complex tr = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) tr += super_(i + i * d, col);
      const Eigen::Index j = col % d;
      const Eigen::Index k = col / d;
      err = std::max(err, std::abs(tr - (j == k ? 1.0 : 0.0)));
    }
    return err;
  }

 private:
  ComplexMatrix super_;
  std::size_t dim_ = 0;
};

/// At λ = 1 the bath is reset to I/2^n_bath before it can carry anything to
/// the next step, so one step closes over system states:
/// Φ(ρ_S) = Tr_bath[step(ρ_S ⊗ I/2^n_bath)].
inline MarkovMap derive_markov_map(const CollisionConfig& cfg,
                                   const CollisionEvolution& evolution) {
  cfg.validate();
  if (cfg.lambda != 1.0)
    throw std::domain_error("derive_markov_map: requires lambda = 1 (got " +
                            std::to_string(cfg.lambda) + ")");
  const CollisionProtocol protocol(cfg, evolution);
  const auto sys = protocol.system_qubits();
  const std::size_t d = std::size_t{1} << cfg.n_sys;
  const auto di = static_cast<Eigen::Index>(d);
  const ComplexMatrix bath_mixed = DensityMatrix::maximally_mixed(cfg.n_bath).matrix();
  ComplexMatrix super(di * di, di * di);
  for (Eigen::Index k = 0; k < di; ++k) {
    for (Eigen::Index j = 0; j < di; ++j) {
      ComplexMatrix unit = ComplexMatrix::Zero(di, di);
      unit(j, k) = 1.0;
      const ComplexMatrix out =
          partial_trace_matrix(protocol.step(kron(unit, bath_mixed)), sys);
      super.col(j + k * di) = out.reshaped();
    }
  }
  return MarkovMap(std::move(super));
}

inline MarkovMap derive_markov_map(const CollisionConfig& cfg) {
  cfg.validate();
  return derive_markov_map(cfg, CollisionEvolution::from_config(cfg));
}

}  // namespace qelm
