#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <numbers>

using namespace qelm;
using Catch::Matchers::ContainsSubstring;

namespace {

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

CollisionConfig random_config(Rng& rng, double lambda) {
  CollisionConfig cfg;
  cfg.chi = rng.uniform(0.0, std::numbers::pi / 2);
  cfg.lambda = lambda;
  sample_collision_couplings(cfg, rng);
  cfg.sys_init = random_density(rng, 2);
  cfg.bath_init = random_density(rng, 2);
  return cfg;
}

}  // namespace

TEST_CASE("Heisenberg Hamiltonian", "[collision]") {
  SECTION("two sites, unit coupling: singlet -3/2, triplet +1/2") {
    const std::array<double, 1> j{1.0};
    const auto h = build_heisenberg(j, 2, Boundary::open);
    const RealVector ev = h.eigenvalues();
    REQUIRE(ev.size() == 4);
    CHECK(ev(0) == Catch::Approx(-1.5).margin(1e-12));
    for (int i = 1; i < 4; ++i) CHECK(ev(i) == Catch::Approx(0.5).margin(1e-12));
  }

  SECTION("periodic pair counts the bond twice") {
    const std::array<double, 2> jp{0.3, 0.4};
    const std::array<double, 1> jo{0.7};
    CHECK(max_abs(build_heisenberg(jp, 2, Boundary::periodic).matrix() -
                  build_heisenberg(jo, 2, Boundary::open).matrix()) <= 1e-15);
  }

  SECTION("zero couplings and single site give zero") {
    const std::array<double, 1> zero{0.0};
    CHECK(max_abs(build_heisenberg(zero, 2, Boundary::open).matrix()) == 0.0);
    CHECK(max_abs(build_heisenberg(std::span<const double>{}, 1, Boundary::open).matrix()) == 0.0);
  }

  SECTION("conserves total magnetization") {
    Rng rng(1);
    const auto j = sample_couplings(rng, 3, 1.0);
    const auto h = build_heisenberg(j, 3, Boundary::periodic);
    ComplexMatrix mz = ComplexMatrix::Zero(8, 8);
    for (std::size_t q = 0; q < 3; ++q) mz += pauli_embed(PauliAxis::Z, q, 3);
    CHECK(max_abs(h.matrix() * mz - mz * h.matrix()) <= 1e-13);
  }

  SECTION("bond count mismatch") {
    const std::array<double, 2> j{1.0, 1.0};
    CHECK_THROWS_WITH(build_heisenberg(j, 2, Boundary::open), ContainsSubstring("expected 1"));
  }
}

TEST_CASE("coupling sampling", "[collision]") {
  SECTION("deterministic in the seed") {
    Rng a(99), b(99), c(100);
    const auto ja = sample_couplings(a, 10, 1.0);
    CHECK(ja == sample_couplings(b, 10, 1.0));
    CHECK(ja != sample_couplings(c, 10, 1.0));
  }

  SECTION("uniform on [-s, s]") {
    Rng rng(17);
    const double s = 0.8;
    const auto j = sample_couplings(rng, 20000, s);
    double mean = 0.0, sq = 0.0;
    for (double v : j) {
      CHECK(std::abs(v) <= s);
      mean += v;
      sq += v * v;
    }
    mean /= static_cast<double>(j.size());
    sq /= static_cast<double>(j.size());
    CHECK(std::abs(mean) < 0.02);
    CHECK(sq == Catch::Approx(s * s / 3.0).epsilon(0.03));
  }

  SECTION("non-interacting bath keeps system draws") {
    CollisionConfig a, b;
    b.interacting_bath = false;
    Rng ra(5), rb(5);
    sample_collision_couplings(a, ra);
    sample_collision_couplings(b, rb);
    CHECK(a.j_sys == b.j_sys);
    CHECK(b.j_bath == std::vector<double>{0.0});
    CHECK(ra.next() == rb.next());
  }

  SECTION("j_scale = 0 gives zeros, negative rejected") {
    Rng rng(1);
    CHECK(sample_couplings(rng, 3, 0.0) == std::vector<double>(3, 0.0));
    CHECK_THROWS_AS(sample_couplings(rng, 3, -1.0), std::domain_error);
  }
}

TEST_CASE("collision step", "[collision]") {
  Rng rng(23);

  SECTION("chi = 0 and lambda = 1: system only feels its own Hamiltonian") {
    CollisionConfig cfg;
    cfg.lambda = 1.0;
    sample_collision_couplings(cfg, rng);
    cfg.sys_init = random_density(rng, 2);
    const auto traj = generate_trajectory(cfg, 3);
    const auto h = build_heisenberg(cfg.j_sys, 2, cfg.boundary);
    const ComplexMatrix u = herm_expm(h, cfg.dt).matrix();
    ComplexMatrix rho = cfg.sys_init.matrix();
    for (std::size_t k = 1; k <= 3; ++k) {
      rho = u * rho * u.adjoint();
      CHECK(max_abs(traj.at_step(k).matrix() - rho) <= 1e-12);
    }
  }

  SECTION("full swap without couplings exchanges system and bath") {
    CollisionConfig cfg;
    cfg.chi = std::numbers::pi / 2;
    cfg.j_sys = {0.0};
    cfg.j_bath = {0.0};
    cfg.sys_init = random_density(rng, 2);
    cfg.bath_init = random_density(rng, 2);
    const auto traj = generate_trajectory(cfg, 2);
    CHECK(trace_distance(traj.at_step(1), cfg.bath_init) <= 1e-12);
    CHECK(trace_distance(traj.at_step(2), cfg.sys_init) <= 1e-12);
  }

  SECTION("full swap into a depolarized bath") {
    // λ = 1 resets the bath each step, so after the second swap the system
    // holds I/4 regardless of its start.
    CollisionConfig cfg;
    cfg.chi = std::numbers::pi / 2;
    cfg.lambda = 1.0;
    cfg.sys_init = random_density(rng, 2);
    cfg.bath_init = random_density(rng, 2);
    const auto traj = generate_trajectory(cfg, 3);
    CHECK(trace_distance(traj.at_step(1), cfg.bath_init) <= 1e-12);
    CHECK(trace_distance(traj.at_step(2), DensityMatrix::maximally_mixed(2)) <= 1e-12);
  }

  SECTION("joint state stays a density matrix after every phase") {
    for (int i = 0; i < 5; ++i) {
      const auto cfg = random_config(rng, rng.uniform01());
      const CollisionProtocol protocol(cfg);
      std::vector<CollisionPhase> seen;
      DensityMatrix joint = tensor(cfg.sys_init, cfg.bath_init);
      for (int k = 0; k < 4; ++k) {
        joint = protocol.step(joint, [&](CollisionPhase phase, const ComplexMatrix& m) {
          seen.push_back(phase);
          const auto why = DensityMatrix(m, DensityMatrix::unchecked).violation();
          CHECK_FALSE(why.has_value());
        });
      }
      REQUIRE(seen.size() == 16);
      CHECK(seen[0] == CollisionPhase::exchange);
      CHECK(seen[1] == CollisionPhase::depolarization);
      CHECK(seen[2] == CollisionPhase::bath_evolution);
      CHECK(seen[3] == CollisionPhase::system_evolution);
    }
  }

  SECTION("unitary steps preserve joint purity") {
    auto cfg = random_config(rng, 0.0);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(16);
    psi(3) = 1.0;
    const CollisionProtocol protocol(cfg);
    DensityMatrix joint = DensityMatrix::pure(psi);
    for (int k = 0; k < 5; ++k) joint = protocol.step(joint);
    CHECK(joint.purity() == Catch::Approx(1.0).margin(1e-12));
  }

  SECTION("deterministic trajectories") {
    const auto cfg = random_config(rng, 0.3);
    const auto a = generate_trajectory(cfg, 6);
    const auto b = generate_trajectory(cfg, 6);
    for (std::size_t k = 1; k <= 6; ++k) CHECK(a.at_step(k) == b.at_step(k));
  }

  SECTION("collision_step agrees with the protocol") {
    const auto cfg = random_config(rng, 0.6);
    const auto evo = CollisionEvolution::from_config(cfg);
    const auto joint = random_density(rng, 4);
    const auto a = collision_step(joint, cfg, evo.u_bath, evo.u_sys);
    const auto b = CollisionProtocol(cfg, evo).step(joint);
    CHECK(max_abs(a.matrix() - b.matrix()) <= 1e-15);
    CHECK_THROWS_AS(collision_step(random_density(rng, 3), cfg, evo.u_bath, evo.u_sys),
                    std::invalid_argument);
  }

  SECTION("config validation") {
    CollisionConfig cfg;
    cfg.chi = 2.0;
    CHECK_THROWS_WITH(generate_trajectory(cfg, 1), ContainsSubstring("CollisionConfig.chi"));
    cfg.chi = 0.0;
    cfg.lambda = -0.5;
    CHECK_THROWS_WITH(generate_trajectory(cfg, 1), ContainsSubstring("CollisionConfig.lambda"));
    cfg.lambda = 0.0;
    cfg.j_sys = {0.1, 0.2};
    CHECK_THROWS_WITH(generate_trajectory(cfg, 1), ContainsSubstring("CollisionConfig.j_sys"));
    cfg.j_sys = {0.0};
    CHECK_THROWS_AS(generate_trajectory(cfg, 0), std::invalid_argument);
  }
}

TEST_CASE("Markov map at lambda = 1", "[collision]") {
  Rng rng(29);

  SECTION("reproduces the trajectory") {
    for (int i = 0; i < 5; ++i) {
      auto cfg = random_config(rng, 1.0);
      cfg.bath_init = DensityMatrix::maximally_mixed(2);
      const auto traj = generate_trajectory(cfg, 10);
      const auto phi = derive_markov_map(cfg);
      ComplexMatrix rho = cfg.sys_init.matrix();
      for (std::size_t k = 1; k <= 10; ++k) {
        rho = phi.apply(rho);
        CHECK(trace_distance(rho, traj.at_step(k).matrix()) <= 1e-9);
      }
    }
  }

  SECTION("any bath start is forgotten after one step") {
    auto cfg = random_config(rng, 1.0);
    const auto traj = generate_trajectory(cfg, 6);
    const auto phi = derive_markov_map(cfg);
    // The first step still sees the initial bath; from then on the map holds.
    ComplexMatrix rho = traj.at_step(1).matrix();
    for (std::size_t k = 2; k <= 6; ++k) {
      rho = phi.apply(rho);
      CHECK(trace_distance(rho, traj.at_step(k).matrix()) <= 1e-9);
    }
  }

  SECTION("matches tomography with physical product inputs") {
    for (int i = 0; i < 3; ++i) {
      const auto cfg = random_config(rng, 1.0);
      const auto phi = derive_markov_map(cfg);
      CHECK(max_abs(phi.superoperator() - oracle::markov_map_from_tomography(cfg)) <= 1e-10);
    }
  }

  SECTION("trace preserving") {
    const auto cfg = random_config(rng, 1.0);
    CHECK(derive_markov_map(cfg).trace_preservation_error() <= 1e-12);
  }

  SECTION("undefined away from lambda = 1") {
    const auto cfg = random_config(rng, 0.9);
    CHECK_THROWS_AS(derive_markov_map(cfg), std::domain_error);
  }
}
