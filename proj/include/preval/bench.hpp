#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "preval/baseline.hpp"
#include "preval/data.hpp"
#include "preval/model_io.hpp"
#include "preval/preval.hpp"

namespace preval::bench {

std::vector<ModelKind> all_methods();
std::vector<ModelKind> parse_methods(const std::string& comma_separated);

struct MethodOptions {
  std::vector<double> lambdas = default_lambda_grid();
  data::Normalization normalize = data::Normalization::zscore;
  int lr_folds = 5;
  int lr_max_iter = 100;
  std::uint64_t seed = 0;
  bool keep_loocv_caches = false;
  Exec exec = Exec::parallel;
};

// Per-method fit summaries, filled when requested.
struct FitSummary {
  std::optional<FitReport> ridge;
  std::optional<baseline::LrCvReport> lr;
};

io::AnyModel fit_method(ModelKind method, const Eigen::Ref<const Matrix>& x, const LabelVector& y,
                        const MethodOptions& options, FitSummary* summary = nullptr);

void print_summary(std::ostream& out, ModelKind method, const io::AnyModel& model, const FitSummary& summary);

struct Metrics {
  double zero_one_loss = 0.0;
  double log_loss = 0.0;
};

// Every label must belong to the model's vocabulary.
Metrics evaluate(const io::AnyModel& model, const Eigen::Ref<const Matrix>& x, const LabelVector& labels);

struct BenchReport {
  std::string dataset_id;
  ModelKind method = ModelKind::preval;
  int split = 0;
  double zero_one_loss = 0.0;
  double log_loss = 0.0;
  double fit_seconds = 0.0;
  Index n = 0;  // training rows
  Index p = 0;
  Index k = 0;
};

// One JSON object on one line; fit_seconds is left out when `with_timing` is
// false so that reruns can be compared byte for byte.
std::string to_json_line(const BenchReport& report, bool with_timing = true);

struct BenchmarkOptions {
  std::vector<ModelKind> methods = all_methods();
  int folds = 5;
  std::uint64_t seed = 0;
  MethodOptions method;
};

// Stratified k-fold; one report per (fold, method) in that order. Each report
// is handed to `sink` as soon as it exists.
std::vector<BenchReport> run_benchmark(const std::string& dataset_id, const Eigen::Ref<const Matrix>& x,
                                       const LabelVector& labels, const BenchmarkOptions& options,
                                       const std::function<void(const BenchReport&)>& sink = {});

// Training-pool ordering whose every prefix is as class-balanced as possible;
// prefixes of it are the nested learning-curve subsets.
std::vector<Index> nested_order(const LabelVector& labels, std::uint64_t seed);

struct CurveRow {
  ModelKind method = ModelKind::preval;
  Index n_train = 0;
  Index p = 0;
  double zero_one_loss = 0.0;
  double log_loss = 0.0;
  double fit_seconds = 0.0;
};

struct LearningCurveOptions {
  std::vector<Index> sizes;
  std::vector<ModelKind> methods = {ModelKind::preval};
  std::uint64_t seed = 0;
  MethodOptions method;
};

// Fits every method on nested prefixes of the training pool and scores it on
// the fixed evaluation set. Rows come out by increasing n_train, then method.
std::vector<CurveRow> run_learning_curve(const Eigen::Ref<const Matrix>& x_train, const LabelVector& y_train,
                                         const Eigen::Ref<const Matrix>& x_eval, const LabelVector& y_eval,
                                         const LearningCurveOptions& options);

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows);

}  // namespace preval::bench
