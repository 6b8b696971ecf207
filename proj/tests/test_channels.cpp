#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <numbers>

using namespace qelm;

namespace {

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::VectorXcd ket(std::size_t index, std::size_t dim) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return v;
}

}  // namespace

TEST_CASE("partial swap", "[channels]") {
  const Eigen::VectorXcd k01 = ket(1, 4);
  const Eigen::VectorXcd k10 = ket(2, 4);

  SECTION("full swap exchanges |01> and |10> up to phase i") {
    const auto p = partial_swap(std::numbers::pi / 2, {0, 1}, 2);
    CHECK((p.matrix() * k01 - Complex{0.0, 1.0} * k10).norm() <= 1e-15);
  }

  SECTION("half swap gives an equal superposition") {
    const auto p = partial_swap(std::numbers::pi / 4, {0, 1}, 2);
    const Eigen::VectorXcd expected = (k01 + Complex{0.0, 1.0} * k10) / std::sqrt(2.0);
    CHECK((p.matrix() * k01 - expected).norm() <= 1e-15);
  }

  SECTION("chi = 0 is the identity") {
    CHECK(max_abs(partial_swap(0.0, {1, 3}, 4).matrix() - identity(16)) == 0.0);
  }

  SECTION("squared full swap is -I") {
    const auto p = partial_swap(std::numbers::pi / 2, {0, 1}, 2);
    CHECK(max_abs(p.matrix() * p.matrix() + identity(4)) <= 1e-15);
  }

  SECTION("unitary on random angles and pairs") {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
      const double chi = rng.uniform(0.0, std::numbers::pi / 2);
      const auto p = partial_swap(chi, {i % 2, 2 + (i % 2)}, 4);
      CHECK(max_abs(p.matrix() * p.matrix().adjoint() - identity(16)) <= 1e-12);
    }
  }

  SECTION("pair swaps on disjoint qubits commute") {
    const ComplexMatrix a = partial_swap(0.3, {0, 2}, 4).matrix();
    const ComplexMatrix b = partial_swap(0.3, {1, 3}, 4).matrix();
    CHECK(max_abs(a * b - b * a) <= 1e-14);
  }

  SECTION("errors") {
    CHECK_THROWS_AS(partial_swap(-0.01, {0, 1}, 2), std::domain_error);
    CHECK_THROWS_AS(partial_swap(1.6, {0, 1}, 2), std::domain_error);
    CHECK_THROWS_AS(partial_swap(0.5, {1, 1}, 2), std::invalid_argument);
  }
}

TEST_CASE("depolarizing channel", "[channels]") {
  Rng rng(5);
  const auto zero = DensityMatrix::basis_state(1);

  SECTION("lambda = 0 is the identity map") {
    const auto rho = random_density(rng, 1);
    CHECK(max_abs(depolarize_qubit(rho, 0.0, 0).matrix() - rho.matrix()) <= 1e-15);
  }

  SECTION("lambda = 1 maps everything to I/2") {
    for (int i = 0; i < 5; ++i) {
      const auto rho = random_density(rng, 1);
      CHECK(max_abs(depolarize_qubit(rho, 1.0, 0).matrix() - 0.5 * identity(2)) <= 1e-15);
    }
  }

  SECTION("lambda = 0.5 on |0>") {
    ComplexMatrix expected = ComplexMatrix::Zero(2, 2);
    expected.diagonal() << 0.75, 0.25;
    CHECK(max_abs(depolarize_qubit(zero, 0.5, 0).matrix() - expected) <= 1e-15);
  }

  SECTION("closed form (1 - lambda) rho + lambda I/2") {
    for (double lambda : {0.1, 0.33, 0.8}) {
      const auto rho = random_density(rng, 1);
      const ComplexMatrix expected = (1.0 - lambda) * rho.matrix() + 0.5 * lambda * identity(2);
      CHECK(max_abs(depolarize_qubit(rho, lambda, 0).matrix() - expected) <= 1e-14);
    }
  }

  SECTION("acts locally inside a larger register") {
    const auto a = random_density(rng, 1);
    const auto b = random_density(rng, 1);
    const double lambda = 0.4;
    const auto out = depolarize_qubit(tensor(a, b), lambda, 1);
    const ComplexMatrix expected =
        kron(a.matrix(), (1.0 - lambda) * b.matrix() + 0.5 * lambda * identity(2));
    CHECK(max_abs(out.matrix() - expected) <= 1e-14);
  }

  SECTION("maps on different sites commute") {
    const auto rho = random_density(rng, 3);
    const auto d0 = depolarizing_channel(0.3, 0, 3);
    const auto d2 = depolarizing_channel(0.7, 2, 3);
    CHECK(max_abs(d0.apply(d2.apply(rho.matrix())) - d2.apply(d0.apply(rho.matrix()))) <= 1e-14);
  }

  SECTION("completeness and positivity for a lambda sweep") {
    for (int i = 0; i <= 20; ++i) {
      const double lambda = i / 20.0;
      const auto ch = depolarizing_channel(lambda, 1, 2);
      CHECK(ch.is_cptp(1e-12));
      const auto out = apply_kraus(random_density(rng, 2), ch);
      CHECK_FALSE(out.violation());
    }
  }

  SECTION("errors") {
    CHECK_THROWS_AS(depolarizing_channel(1.01, 0, 1), std::domain_error);
    CHECK_THROWS_AS(depolarizing_channel(-0.1, 0, 1), std::domain_error);
    CHECK_THROWS_AS(depolarizing_channel(0.5, 2, 2), std::out_of_range);
  }
}

TEST_CASE("generic Kraus channels", "[channels]") {
  SECTION("amplitude reset to |0>") {
    ComplexMatrix k0 = ComplexMatrix::Zero(2, 2), k1 = ComplexMatrix::Zero(2, 2);
    k0(0, 0) = 1.0;
    k1(0, 1) = 1.0;
    const KrausChannel reset({k0, k1}, "reset");
    CHECK(reset.is_cptp());
    Rng rng(9);
    const auto out = apply_kraus(random_density(rng, 1), reset);
    CHECK(max_abs(out.matrix() - DensityMatrix::basis_state(1).matrix()) <= 1e-15);
  }

  SECTION("channel from a random isometry is CPTP and preserves states") {
    // Stack the first d columns of a random 4d x 4d unitary into 4 Kraus blocks.
    Rng rng(10);
    const std::size_t d = 4;
    const ComplexMatrix u = random_unitary(rng, 4 * d).matrix();
    std::vector<ComplexMatrix> ops;
    for (std::size_t b = 0; b < 4; ++b)
      ops.push_back(u.block(static_cast<Eigen::Index>(b * d), 0, static_cast<Eigen::Index>(d),
                            static_cast<Eigen::Index>(d)));
    const KrausChannel ch(ops, "isometry");
    CHECK(verify_cptp(ch, 1e-10));
    for (int i = 0; i < 5; ++i) {
      const auto out = apply_kraus(random_density(rng, 2), ch);
      CHECK_FALSE(out.violation());
    }
  }

  SECTION("verify_cptp rejects incomplete and mismatched sets") {
    const std::vector<ComplexMatrix> half{std::sqrt(0.5) * identity(2)};
    CHECK_FALSE(verify_cptp(half, 1e-10));
    const std::vector<ComplexMatrix> mixed{identity(2), ComplexMatrix::Zero(4, 4)};
    CHECK_FALSE(verify_cptp(mixed, 1e-10));
    CHECK_FALSE(verify_cptp(std::span<const ComplexMatrix>{}, 1e-10));
    const std::vector<ComplexMatrix> unit{identity(2)};
    CHECK(verify_cptp(unit, 0.0));
  }

  SECTION("dimension checks") {
    const auto ch = depolarizing_channel(0.5, 0, 1);
    CHECK_THROWS_AS(apply_kraus(DensityMatrix::basis_state(2), ch), std::invalid_argument);
    CHECK_THROWS_AS(KrausChannel({identity(2), identity(4)}), std::invalid_argument);
  }
}

TEST_CASE("swap gate", "[channels]") {
  const ComplexMatrix s = swap_gate();
  CHECK(max_abs(s * s - identity(4)) <= 1e-15);
  Rng rng(13);
  const auto a = random_density(rng, 1);
  const auto b = random_density(rng, 1);
  CHECK(max_abs(s * kron(a.matrix(), b.matrix()) * s - kron(b.matrix(), a.matrix())) <= 1e-15);
}
