#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qelm;

namespace {

std::vector<RealVector> random_columns(Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<RealVector> out;
  for (std::size_t c = 0; c < cols; ++c) {
    RealVector v(static_cast<Eigen::Index>(rows));
    for (auto& e : v) e = rng.uniform(-1.0, 1.0);
    out.push_back(v);
  }
  return out;
}

RealVector random_vector(Rng& rng, std::size_t n) {
  RealVector v(static_cast<Eigen::Index>(n));
  for (auto& e : v) e = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("training", "[readout]") {
  Rng rng(3);

  SECTION("one feature, exact proportional target") {
    const std::vector<RealVector> cols{RealVector::Constant(1, 1.0), RealVector::Constant(1, 2.0),
                                       RealVector::Constant(1, 3.0)};
    const auto x = FeatureMatrix::from_columns(cols, false);
    RealVector y(3);
    y << 2.0, 4.0, 6.0;
    const auto model = train(x, y);
    REQUIRE(model.weights.size() == 1);
    CHECK(model.weights(0, 0) == Catch::Approx(2.0).margin(1e-12));
  }

  SECTION("full-rank design matches the normal equations") {
    const auto x = FeatureMatrix::from_columns(random_columns(rng, 6, 40), false);
    const RealMatrix y = RealMatrix(random_vector(rng, 40).transpose());
    const auto model = train(x, y);
    CHECK((model.weights - oracle::normal_equations(x.values, y)).cwiseAbs().maxCoeff() <= 1e-8);
  }

  SECTION("residual is orthogonal to the features") {
    const auto x = FeatureMatrix::from_columns(random_columns(rng, 6, 40), true);
    const RealVector y = random_vector(rng, 40);
    const auto model = train(x, y);
    const RealMatrix resid = RealMatrix(y.transpose()) - predict(model, x);
    CHECK((resid * x.values.transpose()).cwiseAbs().maxCoeff() <= 1e-8);
  }

  SECTION("bias row absorbs a constant offset") {
    auto cols = random_columns(rng, 3, 20);
    RealVector y(20);
    for (int s = 0; s < 20; ++s) y(s) = 0.5 * cols[s](0) - cols[s](2) + 4.0;
    const auto model = train(FeatureMatrix::from_columns(cols, true), y);
    CHECK(model.weights(0, 0) == Catch::Approx(0.5).margin(1e-10));
    CHECK(model.weights(0, 1) == Catch::Approx(0.0).margin(1e-10));
    CHECK(model.weights(0, 2) == Catch::Approx(-1.0).margin(1e-10));
    CHECK(model.weights(0, 3) == Catch::Approx(4.0).margin(1e-10));
    CHECK(predict(model, cols[7])(0) == Catch::Approx(y(7)).margin(1e-10));
  }

  SECTION("duplicated feature rows are handled by the pseudoinverse") {
    auto cols = random_columns(rng, 3, 30);
    for (auto& c : cols) {
      RealVector d(6);
      d << c, c;
      c = d;
    }
    RealVector y(30);
    for (int s = 0; s < 30; ++s) y(s) = cols[s](0) + 2.0 * cols[s](1);
    const auto x = FeatureMatrix::from_columns(cols, false);
    const auto model = train(x, y);
    CHECK(model.weights.allFinite());
    CHECK(nmse(RealVector(predict(model, x).row(0).transpose()), y) <= 1e-20);
    // Minimum-norm solution splits each weight evenly across the copies.
    CHECK(model.weights(0, 0) == Catch::Approx(0.5).margin(1e-10));
    CHECK(model.weights(0, 3) == Catch::Approx(0.5).margin(1e-10));
  }

  SECTION("ridge shrinks the weights monotonically") {
    const auto x = FeatureMatrix::from_columns(random_columns(rng, 5, 30), false);
    const RealVector y = random_vector(rng, 30);
    double previous = train(x, y).weights.norm();
    for (double eps : {1e-3, 1e-1, 1.0, 10.0, 100.0}) {
      const auto model = train(x, y, eps);
      CHECK(model.weights.norm() < previous);
      previous = model.weights.norm();
    }
  }

  SECTION("ridge with tiny epsilon approaches least squares") {
    const auto x = FeatureMatrix::from_columns(random_columns(rng, 4, 30), true);
    const RealVector y = random_vector(rng, 30);
    CHECK((train(x, y, 1e-10).weights - train(x, y).weights).cwiseAbs().maxCoeff() <= 1e-7);
  }

  SECTION("shape errors") {
    const auto x = FeatureMatrix::from_columns(random_columns(rng, 4, 10), true);
    CHECK_THROWS_AS(train(x, random_vector(rng, 9)), std::invalid_argument);
    CHECK_THROWS_AS(train(x, random_vector(rng, 10), -1.0), std::domain_error);
    const auto model = train(x, random_vector(rng, 10));
    CHECK_THROWS_AS(predict(model, random_vector(rng, 5)), std::invalid_argument);
    const auto no_bias = FeatureMatrix::from_columns(random_columns(rng, 4, 10), false);
    CHECK_THROWS_AS(predict(model, no_bias), std::invalid_argument);
    const std::vector<RealVector> ragged{RealVector::Zero(2), RealVector::Zero(3)};
    CHECK_THROWS_AS(FeatureMatrix::from_columns(ragged, true), std::invalid_argument);
  }
}

TEST_CASE("nmse", "[readout]") {
  Rng rng(5);
  const RealVector y = random_vector(rng, 25);

  SECTION("perfect prediction scores zero") { CHECK(nmse(y, y) == 0.0); }

  SECTION("predicting the mean scores one") {
    CHECK(nmse(RealVector::Constant(25, y.mean()), y) == Catch::Approx(1.0).margin(1e-12));
  }

  SECTION("affine rescaling of both vectors leaves it unchanged") {
    const RealVector p = y + 0.1 * random_vector(rng, 25);
    const double base = nmse(p, y);
    const RealVector p2 = (3.0 * p).array() - 7.0;
    const RealVector y2 = (3.0 * y).array() - 7.0;
    CHECK(nmse(p2, y2) == Catch::Approx(base).epsilon(1e-10));
  }

  SECTION("hand computed value") {
    RealVector a(4), p(4);
    a << 1.0, 2.0, 3.0, 4.0;
    p << 1.0, 2.0, 3.0, 5.0;
    CHECK(nmse(p, a) == Catch::Approx(1.0 / 5.0));
  }

  SECTION("errors") {
    CHECK_THROWS_AS(nmse(RealVector::Zero(3), RealVector::Zero(4)), std::invalid_argument);
    CHECK_THROWS_AS(nmse(RealVector::Zero(1), RealVector::Zero(1)), std::invalid_argument);
    CHECK_THROWS_AS(nmse(RealVector::Zero(3), RealVector::Constant(3, 2.0)), std::domain_error);
  }
}

TEST_CASE("features unrelated to the target generalize at chance", "[readout]") {
  Rng rng(8);
  std::vector<double> scores;
  for (int trial = 0; trial < 50; ++trial) {
    const auto x_train = FeatureMatrix::from_columns(random_columns(rng, 3, 60), true);
    const auto x_test = FeatureMatrix::from_columns(random_columns(rng, 3, 20), true);
    const RealVector y_train = random_vector(rng, 60);
    const RealVector y_test = random_vector(rng, 20);
    scores.push_back(train_eval_step(x_train, y_train, x_test, y_test));
  }
  const double mean = oracle::welford(scores).first;
  CHECK(mean == Catch::Approx(1.0).margin(0.3));
}
