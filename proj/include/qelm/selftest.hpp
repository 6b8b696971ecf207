#pragma once

// Runtime invariant checks over randomized inputs, exposed through the
// `selftest` CLI subcommand.

#include "qelm/channels.hpp"
#include "qelm/collision.hpp"
#include "qelm/qcore.hpp"
#include "qelm/random.hpp"
#include "qelm/readout.hpp"
#include "qelm/reservoir.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qelm {

struct SelfTestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace selftest_detail {

using Check = std::function<std::optional<std::string>(Rng&)>;

inline std::string worse(const char* what, double value, double tol) {
  return std::string(what) + " = " + std::to_string(value) + " exceeds " + std::to_string(tol);
}

inline CollisionConfig random_collision_config(Rng& rng, double lambda) {
  CollisionConfig cfg;
  cfg.chi = rng.uniform(0.0, std::numbers::pi / 2);
  cfg.lambda = lambda;
  cfg.dt = rng.uniform(0.1, 2.0);
  sample_collision_couplings(cfg, rng);
  cfg.sys_init = random_density(rng, 2);
  cfg.bath_init = random_density(rng, 2);
  return cfg;
}

inline std::vector<std::pair<std::string, Check>> checks() {
  std::vector<std::pair<std::string, Check>> out;

  out.emplace_back("partial trace preserves trace", [](Rng& rng) -> std::optional<std::string> {
    for (int i = 0; i < 10; ++i) {
      const auto rho = random_density(rng, 4);
      const double err = std::abs(partial_trace(rho, {1, 3}).trace() - rho.trace());
      if (err > 1e-12) return worse("|Tr reduced - Tr full|", err, 1e-12);
    }
    return std::nullopt;
  });

  out.emplace_back("herm_expm inverse and group law", [](Rng& rng) -> std::optional<std::string> {
    for (int i = 0; i < 10; ++i) {
      const auto h = random_hermitian(rng, 8);
      const double t1 = rng.uniform(-5.0, 5.0), t2 = rng.uniform(-5.0, 5.0);
      const ComplexMatrix inv = herm_expm(h, t1).matrix() * herm_expm(h, -t1).matrix();
      const double e1 = detail::max_abs(inv - identity(8));
      if (e1 > 1e-9) return worse("|U(t)U(-t) - I|", e1, 1e-9);
      const ComplexMatrix sum = herm_expm(h, t1 + t2).matrix() -
                                herm_expm(h, t1).matrix() * herm_expm(h, t2).matrix();
      const double e2 = detail::max_abs(sum);
      if (e2 > 1e-9) return worse("|U(t1+t2) - U(t1)U(t2)|", e2, 1e-9);
    }
    return std::nullopt;
  });

  out.emplace_back("depolarizing closed form", [](Rng& rng) -> std::optional<std::string> {
    for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const auto rho = random_density(rng, 1);
      const ComplexMatrix expected = (1.0 - lambda) * rho.matrix() + lambda * 0.5 * identity(2);
      const double err = detail::max_abs(depolarize_qubit(rho, lambda, 0).matrix() - expected);
      if (err > 1e-12) return worse("|Delta(rho) - closed form|", err, 1e-12);
      if (!depolarizing_channel(lambda, 0, 1).is_cptp(1e-10)) return "completeness violated";
    }
    return std::nullopt;
  });

  out.emplace_back("partial swap unitarity", [](Rng& rng) -> std::optional<std::string> {
    for (int i = 0; i < 20; ++i) {
      const auto p = partial_swap(rng.uniform(0.0, std::numbers::pi / 2), {0, 2}, 4);
      const double err = detail::max_abs(p.matrix() * p.matrix().adjoint() - identity(16));
      if (err > 1e-12) return worse("|P P^dag - I|", err, 1e-12);
    }
    return std::nullopt;
  });

  out.emplace_back("joint state valid after every phase", [](Rng& rng) -> std::optional<std::string> {
    for (int i = 0; i < 5; ++i) {
      const auto cfg = random_collision_config(rng, rng.uniform01());
      const CollisionProtocol protocol(cfg);
      std::optional<std::string> failure;
      auto observer = [&](CollisionPhase phase, const ComplexMatrix& m) {
        if (failure) return;
        if (auto why = DensityMatrix(m, DensityMatrix::unchecked).violation())
          failure = std::string(to_string(phase)) + ": " + *why;
      };
      DensityMatrix joint = tensor(cfg.sys_init, cfg.bath_init);
      for (int k = 0; k < 5 && !failure; ++k) joint = protocol.step(joint, observer);
      if (failure) return failure;
    }
    return std::nullopt;
  });

  out.emplace_back("Markov map reproduces lambda=1 trajectory", [](Rng& rng) -> std::optional<std::string> {
    for (int i = 0; i < 5; ++i) {
      auto cfg = random_collision_config(rng, 1.0);
      cfg.bath_init = DensityMatrix::maximally_mixed(2);
      const auto traj = generate_trajectory(cfg, 8);
      const auto phi = derive_markov_map(cfg);
      ComplexMatrix rho = cfg.sys_init.matrix();
      for (std::size_t k = 1; k <= traj.steps(); ++k) {
        rho = phi.apply(rho);
        const double d = trace_distance(rho, traj.at_step(k).matrix());
        if (d > 1e-9) return worse("trace distance", d, 1e-9);
      }
    }
    return std::nullopt;
  });

  out.emplace_back("reservoir map matches direct evolution", [](Rng& rng) -> std::optional<std::string> {
    ReservoirConfig cfg;
    cfg.j_matrix = sample_reservoir_couplings(rng, cfg.n_res, cfg.j_scale);
    const ReservoirMap map(cfg);
    const auto h = build_reservoir_hamiltonian(cfg);
    const std::array<MeasurementBasis, 2> bases{MeasurementBasis::Z, MeasurementBasis::X};
    for (int i = 0; i < 5; ++i) {
      const auto rho = random_density(rng, 2);
      const auto injected = inject(rho, cfg);
      const double rt = trace_distance(partial_trace(injected, {0, 1}), rho);
      if (rt > 1e-12) return worse("inject round trip", rt, 1e-12);
      const double err =
          (map.measure(rho) - evolve_and_measure(injected, h, cfg.evolve_time, bases)).cwiseAbs().maxCoeff();
      if (err > 1e-10) return worse("feature mismatch", err, 1e-10);
    }
    return std::nullopt;
  });

  out.emplace_back("readout residual orthogonality", [](Rng& rng) -> std::optional<std::string> {
    std::vector<RealVector> cols;
    RealVector y(40);
    for (int s = 0; s < 40; ++s) {
      RealVector c(6);
      for (auto& v : c) v = rng.uniform(-1.0, 1.0);
      cols.push_back(c);
      y(s) = rng.uniform(-1.0, 1.0);
    }
    const auto x = FeatureMatrix::from_columns(cols, true);
    const auto model = train(x, y);
    const RealMatrix resid = RealMatrix(y.transpose()) - predict(model, x);
    const double err = (resid * x.values.transpose()).cwiseAbs().maxCoeff();
    if (err > 1e-8) return worse("|(Y - WX) X^T|", err, 1e-8);
    const RealVector mean = RealVector::Constant(40, y.mean());
    if (std::abs(nmse(y, y)) > 0.0) return "nmse(y, y) != 0";
    if (std::abs(nmse(mean, y) - 1.0) > 1e-12) return "nmse(mean, y) != 1";
    return std::nullopt;
  });

  return out;
}

}  // namespace selftest_detail

inline std::vector<SelfTestResult> run_selftest(std::uint64_t seed = 7) {
  std::vector<SelfTestResult> results;
  std::uint64_t index = 0;
  for (auto& [name, check] : selftest_detail::checks()) {
    Rng rng(derive_seed(seed, index++));
    SelfTestResult r{name, false, {}};
    try {
      auto failure = check(rng);
      r.passed = !failure;
      if (failure) r.detail = *failure;
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace qelm
