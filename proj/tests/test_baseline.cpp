#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "preval/baseline.hpp"
#include "preval/data.hpp"
#include "preval/error.hpp"
#include "preval/scale.hpp"

using namespace preval;
using namespace preval::baseline;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

std::vector<int> class_of(const LabelVector& y) {
  std::vector<int> out;
  for (const auto& l : y) out.push_back(std::stoi(l));
  return out;
}

// Two far-apart Gaussian blobs in p dimensions, labels "0"/"1".
std::pair<Matrix, LabelVector> separable(Index n, Index p, std::mt19937_64& rng) {
  Matrix x = oracle::gaussian(n, p, rng);
  LabelVector y;
  for (Index i = 0; i < n; ++i) {
    x(i, 0) += i % 2 ? 8.0 : -8.0;
    y.push_back(i % 2 ? "1" : "0");
  }
  return {x, y};
}

}  // namespace

TEST_CASE("lr_objective_grad: zero parameters give n ln k") {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::gaussian(9, 4, rng);
  const Matrix y = scale::one_hot({0, 1, 2, 0, 1, 2, 0, 1, 2}, 3);
  const ObjectiveGrad og = lr_objective_grad(Matrix::Zero(4, 3), Vector::Zero(3), x, y, 2.0);
  CHECK(og.value == doctest::Approx(9.0 * std::log(3.0)));
}

TEST_CASE("lr_objective_grad: value matches the oracle and the gradient matches finite differences") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> nd(2, 15), pd(1, 6), kd(2, 4);
  std::uniform_real_distribution<double> ld(0.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    const Index n = nd(rng), p = pd(rng), k = kd(rng);
    const Matrix x = oracle::gaussian(n, p, rng);
    std::vector<int> truth(static_cast<std::size_t>(n));
    std::uniform_int_distribution<int> cls(0, static_cast<int>(k) - 1);
    for (auto& v : truth) v = cls(rng);
    const Matrix y = scale::one_hot(truth, k);
    const Matrix beta = oracle::gaussian(p, k, rng);
    const Vector b = oracle::gaussian(k, 1, rng);
    const double lambda = ld(rng);
    const ObjectiveGrad og = lr_objective_grad(beta, b, x, y, lambda);
    CHECK(og.value == doctest::Approx(oracle::lr_objective(beta, b, x, truth, lambda)).epsilon(1e-12));

    Matrix fd_beta(p, k);
    Vector fd_b(k);
    const double h = 1e-6;
    for (Index j = 0; j < k; ++j) {
      for (Index f = 0; f < p; ++f) {
        fd_beta(f, j) = oracle::central_difference(
            [&](double v) {
              Matrix bb = beta;
              bb(f, j) = v;
              return oracle::lr_objective(bb, b, x, truth, lambda);
            },
            beta(f, j), h);
      }
      fd_b(j) = oracle::central_difference(
          [&](double v) {
            Vector bb = b;
            bb(j) = v;
            return oracle::lr_objective(beta, bb, x, truth, lambda);
          },
          b(j), h);
    }
    const double scale_ref = std::max({1.0, max_abs(fd_beta), fd_b.cwiseAbs().maxCoeff()});
    CHECK(max_abs(og.grad_beta - fd_beta) <= 1e-6 * scale_ref);
    CHECK((og.grad_intercepts - fd_b).cwiseAbs().maxCoeff() <= 1e-6 * scale_ref);
  }
}

TEST_CASE("lr_objective_grad: linear in the penalty, and errors") {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::gaussian(6, 3, rng);
  const Matrix y = scale::one_hot({0, 1, 0, 1, 1, 0}, 2);
  const Matrix beta = oracle::gaussian(3, 2, rng);
  const Vector b = Vector::Zero(2);
  const double v1 = lr_objective_grad(beta, b, x, y, 0.7).value;
  const double v2 = lr_objective_grad(beta, b, x, y, 1.4).value;
  CHECK(v2 - v1 == doctest::Approx(0.7 * beta.squaredNorm()));
  Matrix bad = beta;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(lr_objective_grad(bad, b, x, y, 1.0), NumericError);
  CHECK_THROWS_AS(lr_objective_grad(beta, b, x, y, -1.0), ParameterError);
  CHECK_THROWS_AS(lr_objective_grad(beta, b, x, Matrix::Ones(6, 2), 1.0), ParameterError);
}

TEST_CASE("fit_lr: separable data, monotone trace, optimality") {
  std::mt19937_64 rng(4);
  const auto [x, y] = separable(60, 3, rng);
  LrTrace trace;
  const LrModel m = fit_lr(x, y, 1.0, {}, &trace);
  CHECK(predict(m, x) == y);
  REQUIRE(trace.objective.size() >= 2);
  for (std::size_t i = 1; i < trace.objective.size(); ++i) CHECK(trace.objective[i] <= trace.objective[i - 1]);
  const Matrix onehot = scale::one_hot(class_of(y), 2);
  const ObjectiveGrad at_opt = lr_objective_grad(m.beta, m.intercepts, x, onehot, 1.0);
  CHECK(at_opt.value <= lr_objective_grad(Matrix::Zero(3, 2), Vector::Zero(2), x, onehot, 1.0).value);
  CHECK(at_opt.value == doctest::Approx(trace.objective.back()));
  if (m.converged) {
    const double gnorm = std::sqrt(at_opt.grad_beta.squaredNorm() + at_opt.grad_intercepts.squaredNorm());
    CHECK(gnorm <= 1e-6 * std::max(1.0, std::abs(at_opt.value)));
  }
}

TEST_CASE("fit_lr: heavy penalty shrinks to the class prior") {
  const auto d = data::make_blobs(80, 5, 4, 3.0, 5);
  const LrModel m = fit_lr(d.x, d.labels, 1e9);
  CHECK(m.beta.norm() <= 1e-3);
  CHECK(max_abs(predict_proba(m, d.x).array() - 0.25) < 1e-3);
}

TEST_CASE("fit_lr: errors") {
  const Matrix x = Matrix::Random(6, 2);
  CHECK_THROWS_AS(fit_lr(x, LabelVector(6, "a"), 1.0), DataError);
  CHECK_THROWS_AS(fit_lr(x, LabelVector(5, "a"), 1.0), DimensionError);
  CHECK_THROWS_AS(fit_lr(x, {"a", "b", "a", "b", "a", "b"}, -1.0), ParameterError);
}

TEST_CASE("fit_lr_cv: one-value grid equals fit_lr") {
  const auto d = data::make_blobs(60, 4, 3, 2.0, 6);
  LrCvConfig cfg;
  cfg.lambdas = {0.3};
  LrCvReport report;
  const LrModel cv = fit_lr_cv(d.x, d.labels, cfg, &report);
  const LrModel direct = fit_lr(d.x, d.labels, 0.3);
  CHECK(cv.beta == direct.beta);
  CHECK(cv.intercepts == direct.intercepts);
  CHECK(report.chosen == 0);
}

TEST_CASE("fit_lr_cv: chosen penalty is the exhaustive minimum and reruns are identical") {
  const auto d = data::make_blobs(75, 6, 3, 1.2, 7);
  LrCvConfig cfg;
  cfg.lambdas = log_lambda_grid(1e-2, 1e2, 5);
  cfg.seed = 3;
  LrCvReport report;
  const LrModel m = fit_lr_cv(d.x, d.labels, cfg, &report);

  const auto fold = data::stratified_kfold(d.labels, cfg.folds, cfg.seed);
  const auto enc = data::encode_one_vs_rest(d.labels);
  std::vector<double> pooled(cfg.lambdas.size(), 0.0);
  for (std::size_t l = 0; l < cfg.lambdas.size(); ++l) {
    for (int f = 0; f < cfg.folds; ++f) {
      std::vector<Index> train, test;
      LabelVector ytr;
      for (std::size_t i = 0; i < fold.size(); ++i) {
        if (fold[i] == f) {
          test.push_back(static_cast<Index>(i));
        } else {
          train.push_back(static_cast<Index>(i));
          ytr.push_back(d.labels[i]);
        }
      }
      const LrModel fm = fit_lr(d.x(train, Eigen::all), ytr, cfg.lambdas[l]);
      const Matrix prob = predict_proba(fm, d.x(test, Eigen::all));
      for (std::size_t r = 0; r < test.size(); ++r)
        pooled[l] -= std::log(prob(static_cast<Index>(r), enc.index[static_cast<std::size_t>(test[r])]));
    }
    pooled[l] /= static_cast<double>(d.labels.size());
    CHECK(report.cv_logloss[l] == doctest::Approx(pooled[l]).epsilon(1e-10));
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < pooled.size(); ++l)
    if (pooled[l] <= pooled[best]) best = l;
  CHECK(report.chosen == best);
  CHECK(m.lambda == cfg.lambdas[best]);

  LrCvConfig serial = cfg;
  serial.exec = Exec::serial;
  const LrModel again = fit_lr_cv(d.x, d.labels, serial);
  CHECK(again.beta == m.beta);
  CHECK(again.lambda == m.lambda);
}

TEST_CASE("fit_lr_cv: class smaller than the fold count") {
  Matrix x = Matrix::Random(12, 2);
  LabelVector y(12, "a");
  y[0] = y[1] = y[2] = "b";
  CHECK_THROWS_AS(fit_lr_cv(x, y), StratificationError);
}

TEST_CASE("ridge_raw: shares the path, keeps c = 1, and matches preval decisions") {
  const auto d = data::make_blobs(100, 8, 3, 1.0, 8);
  const auto held = data::make_blobs(200, 8, 3, 1.0, 9);
  const FitResult pv = fit(d.x, d.labels);
  const FitResult raw = fit_ridge_raw(d.x, d.labels);
  CHECK(raw.model.kind == ModelKind::ridge_raw);
  CHECK(raw.model.c_star == 1.0);
  std::size_t best_press = 0;
  for (std::size_t l = 0; l < raw.report.path.size(); ++l) {
    CHECK(raw.report.path[l].press == pv.report.path[l].press);
    if (raw.report.path[l].press < raw.report.path[best_press].press) best_press = l;
  }
  CHECK(raw.report.chosen == best_press);

  FitConfig same;
  same.lambdas = {pv.model.lambda_star};
  const FitResult raw_at = fit_ridge_raw(d.x, d.labels, same);
  CHECK(predict(raw_at.model, held.x) == predict(pv.model, held.x));
  // c* minimizes the prevalidated loss, so c = 1 cannot do better there.
  CHECK(raw_at.report.path[0].preval_logloss >= pv.report.path[pv.report.chosen].preval_logloss);
}

TEST_CASE("ridge_naive: c minimizes the training loss on the full-fit predictions") {
  const auto d = data::make_blobs(90, 6, 3, 1.0, 10);
  const FitResult pv = fit(d.x, d.labels);
  const FitResult nv = fit_ridge_naive(d.x, d.labels);
  CHECK(nv.model.kind == ModelKind::ridge_naive);
  for (std::size_t l = 0; l < nv.report.path.size(); ++l) {
    CHECK(nv.report.path[l].press == pv.report.path[l].press);
    CHECK(nv.report.path[l].train_logloss <= pv.report.path[l].train_logloss + 1e-12);
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < nv.report.path.size(); ++l)
    if (nv.report.path[l].train_logloss < nv.report.path[best].train_logloss) best = l;
  CHECK(nv.report.chosen == best);
}

TEST_CASE("ridge_naive: square random design overfits") {
  std::mt19937_64 rng(11);
  const Index n = 60;
  const Matrix x = oracle::gaussian(n + 400, n, rng);
  LabelVector y;
  for (Index i = 0; i < n + 400; ++i) y.push_back(x(i, 0) + x(i, 1) + 0.5 * oracle::gaussian(1, 1, rng)(0, 0) > 0 ? "p" : "q");
  const Matrix xtr = x.topRows(n);
  const LabelVector ytr(y.begin(), y.begin() + n);
  const Matrix xte = x.bottomRows(400);
  const LabelVector yte(y.begin() + n, y.end());
  const FitResult nv = fit_ridge_naive(xtr, ytr);
  const FitResult pv = fit(xtr, ytr);
  const auto held_loss = [&](const PrevalModel& m) {
    const Matrix prob = predict_proba(m, xte);
    const auto enc = data::encode_with_classes(yte, m.classes);
    double s = 0.0;
    for (std::size_t i = 0; i < yte.size(); ++i) s -= std::log(prob(static_cast<Index>(i), enc.index[i]));
    return s / static_cast<double>(yte.size());
  };
  CHECK(nv.report.path[nv.report.chosen].train_logloss < 1e-3);
  CHECK(nv.model.c_star > pv.model.c_star);
  CHECK(held_loss(nv.model) > 2.0 * held_loss(pv.model));
}
