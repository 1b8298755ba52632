#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "preval/bench.hpp"
#include "preval/error.hpp"

using namespace preval;
using namespace preval::bench;

TEST_CASE("evaluate: perfect and uniform models") {
  PrevalModel m;
  m.feature_center = Vector::Zero(2);
  m.classes = {"a", "b", "c"};
  m.beta = Matrix::Zero(2, 3);
  m.intercept = Vector::Zero(3);
  Matrix x(3, 2);
  x << 1, 0, 0, 1, -1, -1;
  const Metrics uniform = evaluate(m, x, {"a", "b", "c"});
  CHECK(uniform.log_loss == doctest::Approx(std::log(3.0)));
  CHECK(uniform.zero_one_loss == doctest::Approx(2.0 / 3.0));  // ties go to "a"

  m.beta << 50, 0, -50, 0, 50, -50;  // huge margin on the right class
  const Metrics perfect = evaluate(m, x, {"a", "b", "c"});
  CHECK(perfect.zero_one_loss == 0.0);
  CHECK(perfect.log_loss < 1e-20);
  CHECK_THROWS_AS(evaluate(m, x, {"a", "b", "zebra"}), DataError);
  CHECK_THROWS_AS(evaluate(m, x, {"a", "b"}), DimensionError);
}

TEST_CASE("evaluate: matches an independent metric computation on 20 rows") {
  const auto d = data::make_blobs(120, 5, 4, 1.0, 1);
  const auto held = data::make_blobs(20, 5, 4, 1.0, 2);
  for (ModelKind kind : all_methods()) {
    const io::AnyModel model = fit_method(kind, d.x, d.labels, {});
    const Matrix prob = io::predict_proba(model, held.x);
    const auto enc = data::encode_with_classes(held.labels, io::classes_of(model));
    const auto expected = oracle::metrics(prob, enc.index);
    const Metrics got = evaluate(model, held.x, held.labels);
    CHECK(got.zero_one_loss == doctest::Approx(expected.zero_one).epsilon(1e-15));
    CHECK(got.log_loss == doctest::Approx(expected.log_loss).epsilon(1e-13));
  }
}

TEST_CASE("run_benchmark: line count, invariants, argmax agreement, reruns") {
  const auto d = data::make_blobs(100, 6, 3, 1.2, 3);
  BenchmarkOptions opts;
  opts.folds = 4;
  opts.seed = 11;
  opts.method.lambdas = {1.0};  // same penalty, so ridge_raw differs from preval only in scale
  std::vector<std::string> streamed;
  const auto reports = run_benchmark("blobs", d.x, d.labels, opts,
                                     [&](const BenchReport& r) { streamed.push_back(to_json_line(r, false)); });
  REQUIRE(reports.size() == 4 * 4);
  CHECK(streamed.size() == reports.size());
  for (const auto& r : reports) {
    CHECK(r.zero_one_loss >= 0.0);
    CHECK(r.zero_one_loss <= 1.0);
    CHECK(r.log_loss >= 0.0);
    CHECK(r.fit_seconds > 0.0);
    CHECK(r.n == 75);
    CHECK(r.p == 6);
    CHECK(r.k == 3);
  }
  for (int f = 0; f < 4; ++f) {
    const auto at = [&](ModelKind m) {
      return *std::find_if(reports.begin(), reports.end(),
                           [&](const BenchReport& r) { return r.split == f && r.method == m; });
    };
    CHECK(at(ModelKind::preval).zero_one_loss == at(ModelKind::ridge_raw).zero_one_loss);
  }
  std::vector<std::string> again;
  run_benchmark("blobs", d.x, d.labels, opts, [&](const BenchReport& r) { again.push_back(to_json_line(r, false)); });
  CHECK(again == streamed);
}

TEST_CASE("to_json_line: field order and optional timing") {
  const BenchReport r{"ds", ModelKind::lr, 2, 0.25, 0.5, 1.5, 10, 3, 2};
  CHECK(to_json_line(r) ==
        R"({"dataset":"ds","method":"lr","split":2,"zero_one_loss":0.25,"log_loss":0.5,"fit_seconds":1.5,"n":10,"p":3,"k":2})");
  CHECK(to_json_line(r, false).find("fit_seconds") == std::string::npos);
}

TEST_CASE("parse_methods") {
  CHECK(parse_methods("lr,preval,lr") == std::vector<ModelKind>{ModelKind::lr, ModelKind::preval});
  CHECK_THROWS_AS(parse_methods("knn"), ParameterError);
  CHECK_THROWS_AS(parse_methods(","), ParameterError);
}

TEST_CASE("learning curve: nested subsets, monotone sizes, csv") {
  const auto pool = data::make_blobs(200, 5, 3, 1.5, 4);
  const auto eval = data::make_blobs(100, 5, 3, 1.5, 5);
  const auto order = nested_order(pool.labels, 6);
  std::set<Index> unique(order.begin(), order.end());
  CHECK(unique.size() == 200);
  // Every prefix is as balanced as possible, so a prefix of size s contains
  // each class at least floor(s / k) times.
  for (std::size_t s : {9, 30, 100}) {
    std::map<std::string, int> counts;
    for (std::size_t i = 0; i < s; ++i) ++counts[pool.labels[static_cast<std::size_t>(order[i])]];
    for (const auto& [l, c] : counts) CHECK(c >= static_cast<int>(s / 3));
  }

  LearningCurveOptions opts;
  opts.sizes = {120, 30, 60, 30};
  opts.methods = {ModelKind::preval, ModelKind::ridge_naive};
  const auto rows = run_learning_curve(pool.x, pool.labels, eval.x, eval.labels, opts);
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].n_train >= rows[i - 1].n_train);
  CHECK(rows.front().n_train == 30);
  CHECK(rows.back().n_train == 120);

  std::ostringstream out;
  write_curve_csv(out, rows);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "method,n_train,p,zero_one_loss,log_loss,fit_seconds");
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 6);

  opts.sizes = {201};
  CHECK_THROWS_AS(run_learning_curve(pool.x, pool.labels, eval.x, eval.labels, opts), DataError);
}

TEST_CASE("fit_method: small classes cap the LR fold count") {
  const auto d = data::make_blobs(9, 3, 3, 3.0, 7);
  CHECK_NOTHROW(fit_method(ModelKind::lr, d.x, d.labels, {}));
}
