#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "preval/error.hpp"
#include "preval/scale.hpp"

using namespace preval;
using namespace preval::scale;

namespace {

struct Instance {
  Matrix z;
  Matrix y;
  std::vector<int> truth;
};

// Noisy scores correlated with the truth. Redrawn until at least one row is
// misclassified, so the loss grows without bound in c and the minimizer is finite.
Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(2, 20), kd(2, 4);
  while (true) {
    const Index n = nd(rng), k = kd(rng);
    Instance in;
    in.truth.resize(static_cast<std::size_t>(n));
    std::uniform_int_distribution<int> cls(0, static_cast<int>(k) - 1);
    for (auto& t : in.truth) t = cls(rng);
    in.y = one_hot(in.truth, k);
    in.z = oracle::gaussian(n, k, rng) + 0.8 * (2.0 * in.y.array() - 1.0).matrix();
    bool misclassified = false;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      in.z.row(i).maxCoeff(&best);
      if (best != in.truth[static_cast<std::size_t>(i)]) misclassified = true;
    }
    if (misclassified) return in;
  }
}

}  // namespace

TEST_CASE("softmax_rows: examples") {
  Matrix z(3, 2);
  z << 0, 0, 1000, 1000, std::log(1.0), std::log(3.0);
  const Matrix p = softmax_rows(z);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(1, 0) == doctest::Approx(0.5));
  CHECK(p(2, 0) == doctest::Approx(0.25));
  CHECK(p(2, 1) == doctest::Approx(0.75));
  std::mt19937_64 rng(1);
  const Matrix r = oracle::gaussian(10, 4, rng) * 50.0;
  const Matrix pr = softmax_rows(r);
  CHECK((pr.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK((pr.array() >= 0.0).all());
  CHECK((softmax_rows(r.array() + 1234.5) - pr).cwiseAbs().maxCoeff() < 1e-12);
  Matrix bad = z;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(softmax_rows(bad), NumericError);
}

TEST_CASE("log_loss: examples") {
  const Matrix y = one_hot({0, 1, 2}, 3);
  CHECK(log_loss(y, y) == 0.0);
  CHECK(log_loss(Matrix::Constant(3, 3, 1.0 / 3.0), y) == doctest::Approx(std::log(3.0)));
  Matrix p(2, 2);
  p << 0.5, 0.5, 0.75, 0.25;
  CHECK(log_loss(p, one_hot({0, 1}, 2)) == doctest::Approx((std::log(2.0) + std::log(4.0)) / 2.0));
  Matrix zero = Matrix::Zero(1, 2);
  zero(0, 1) = 1.0;
  CHECK(std::isfinite(log_loss(zero, one_hot({0}, 2))));
  Matrix malformed = Matrix::Ones(1, 2);
  CHECK_THROWS_AS(log_loss(p.topRows(1), malformed), ParameterError);
}

TEST_CASE("scaled_loss_and_grad: c = 0 and the separable limit") {
  std::mt19937_64 rng(2);
  const Instance in = random_instance(rng);
  CHECK(scaled_loss_and_grad(0.0, in.z, in.y).loss == doctest::Approx(std::log(static_cast<double>(in.y.cols()))));
  const Matrix z = 2.0 * in.y.array() - 1.0;
  double previous = std::numeric_limits<double>::infinity();
  for (double c : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
    const double loss = scaled_loss_and_grad(c, z, in.y).loss;
    CHECK(loss < previous);
    previous = loss;
  }
  CHECK(previous < 1e-12);
  CHECK_THROWS_AS(scaled_loss_and_grad(std::numeric_limits<double>::infinity(), in.z, in.y), NumericError);
}

TEST_CASE("scaled_loss_and_grad: loss matches oracle and gradient matches finite differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> cd(-3.0, 5.0);
  for (int t = 0; t < 100; ++t) {
    const Instance in = random_instance(rng);
    const double c = cd(rng);
    const LossGrad lg = scaled_loss_and_grad(c, in.z, in.y);
    CHECK(lg.loss == doctest::Approx(oracle::scaled_log_loss(c, in.z, in.truth)).epsilon(1e-12));
    const double fd =
        oracle::central_difference([&](double v) { return oracle::scaled_log_loss(v, in.z, in.truth); }, c, 1e-5);
    CHECK(std::abs(lg.grad - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("minimize_scale: multi-start agreement and golden-section oracle") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const Instance in = random_instance(rng);
    const ScaleFitResult a = minimize_scale(in.z, in.y, 0.1);
    const ScaleFitResult b = minimize_scale(in.z, in.y, 1.0);
    const ScaleFitResult c = minimize_scale(in.z, in.y, 10.0);
    CHECK(a.converged);
    CHECK(b.converged);
    CHECK(c.converged);
    CHECK(std::abs(a.c - b.c) <= 1e-6);
    CHECK(std::abs(c.c - b.c) <= 1e-6);
    CHECK(b.loss >= 0.0);
    CHECK(std::abs(scaled_loss_and_grad(b.c, in.z, in.y).grad) <= 1e-8 * std::max(1.0, b.loss));
    const auto f = [&](double v) { return oracle::scaled_log_loss(v, in.z, in.truth); };
    CHECK(std::abs(oracle::golden_section(f, -1e4, 1e4) - b.c) <= 1e-4);  // c is unconstrained
  }
}

TEST_CASE("minimize_scale: degenerate and negative optimum") {
  const Matrix y = one_hot({0, 1, 1, 2}, 3);
  const ScaleFitResult d = minimize_scale(Matrix::Zero(4, 3), y, 2.5);
  CHECK(d.degenerate);
  CHECK(d.converged);
  CHECK(d.c == 2.5);
  CHECK(d.loss == doctest::Approx(std::log(3.0)));

  // Scores that point away from the truth: c is unconstrained, so it goes negative.
  std::mt19937_64 rng(5);
  Instance in = random_instance(rng);
  in.z = -in.z;
  const ScaleFitResult r = minimize_scale(in.z, in.y);
  CHECK(r.c < 0.0);
  CHECK(std::abs(scaled_loss_and_grad(r.c, in.z, in.y).grad) <= 1e-8);
}

TEST_CASE("one_hot: shape and errors") {
  const Matrix y = one_hot({1, 0}, 3);
  CHECK(y.rows() == 2);
  CHECK(y.cols() == 3);
  CHECK(y(0, 1) == 1.0);
  CHECK(y.sum() == 2.0);
  CHECK_THROWS(one_hot({3}, 3));
}
