#include "preval/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "preval/error.hpp"
#include "preval/scale.hpp"

namespace preval::bench {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
  return d.count();
}

Matrix rows_of(const Eigen::Ref<const Matrix>& x, const std::vector<Index>& rows) { return x(rows, Eigen::all); }

LabelVector labels_of(const LabelVector& labels, const std::vector<Index>& rows) {
  LabelVector out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(labels[static_cast<std::size_t>(r)]);
  return out;
}

int smallest_class(const LabelVector& labels) {
  std::map<std::string, int> counts;
  for (const auto& l : labels) ++counts[l];
  int smallest = static_cast<int>(labels.size());
  for (const auto& [label, c] : counts) smallest = std::min(smallest, c);
  return smallest;
}

}  // namespace

std::vector<ModelKind> all_methods() {
  return {ModelKind::preval, ModelKind::lr, ModelKind::ridge_raw, ModelKind::ridge_naive};
}

std::vector<ModelKind> parse_methods(const std::string& comma_separated) {
  std::vector<ModelKind> out;
  std::stringstream ss(comma_separated);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const ModelKind m = parse_model_kind(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw ParameterError("no methods given");
  return out;
}

io::AnyModel fit_method(ModelKind method, const Eigen::Ref<const Matrix>& x, const LabelVector& y,
                        const MethodOptions& options, FitSummary* summary) {
  if (method == ModelKind::lr) {
    baseline::LrCvConfig cfg;
    cfg.lambdas = options.lambdas;
    // Small training sets (learning curves) cannot support five folds.
    cfg.folds = std::max(2, std::min(options.lr_folds, smallest_class(y)));
    cfg.seed = options.seed;
    cfg.exec = options.exec;
    cfg.lr.max_iter = options.lr_max_iter;
    cfg.lr.normalize = options.normalize;
    baseline::LrCvReport report;
    auto model = baseline::fit_lr_cv(x, y, cfg, &report);
    if (summary) summary->lr = std::move(report);
    return model;
  }

  FitConfig cfg;
  cfg.lambdas = options.lambdas;
  cfg.normalize = options.normalize;
  cfg.keep_loocv_caches = options.keep_loocv_caches;
  cfg.exec = options.exec;
  FitResult result;
  switch (method) {
    case ModelKind::ridge_raw: result = baseline::fit_ridge_raw(x, y, cfg); break;
    case ModelKind::ridge_naive: result = baseline::fit_ridge_naive(x, y, cfg); break;
    default: result = fit(x, y, cfg); break;
  }
  if (summary) summary->ridge = std::move(result.report);
  return std::move(result.model);
}

void print_summary(std::ostream& out, ModelKind method, const io::AnyModel& model, const FitSummary& summary) {
  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out << "method " << to_string(method) << ", " << io::classes_of(model).size() << " classes, "
      << io::feature_count(model) << " features\n";
  out << std::setprecision(6);
  if (summary.ridge) {
    const FitReport& r = *summary.ridge;
    out << "rank " << r.rank << "\n";
    out << std::setw(12) << "lambda" << std::setw(14) << "c" << std::setw(16) << "preval_logloss"
        << std::setw(16) << "train_logloss" << std::setw(14) << "press" << "\n";
    for (std::size_t l = 0; l < r.path.size(); ++l) {
      const auto& s = r.path[l];
      out << std::setw(12) << s.lambda << std::setw(14) << s.c << std::setw(16) << s.preval_logloss
          << std::setw(16) << s.train_logloss << std::setw(14) << s.press << (l == r.chosen ? "  *" : "") << "\n";
    }
    out << "chosen lambda " << r.path[r.chosen].lambda << ", c " << r.path[r.chosen].c << ", fit "
        << r.fit_seconds << " s\n";
  }
  if (summary.lr) {
    const auto& r = *summary.lr;
    out << std::setw(12) << "lambda" << std::setw(16) << "cv_logloss" << "\n";
    for (std::size_t l = 0; l < r.lambdas.size(); ++l)
      out << std::setw(12) << r.lambdas[l] << std::setw(16) << r.cv_logloss[l] << (l == r.chosen ? "  *" : "")
          << "\n";
    out << "chosen lambda " << r.lambdas[r.chosen] << ", fit " << r.fit_seconds << " s\n";
  }
  out.flags(old_flags);
  out.precision(old_precision);
}

Metrics evaluate(const io::AnyModel& model, const Eigen::Ref<const Matrix>& x, const LabelVector& labels) {
  if (static_cast<Index>(labels.size()) != x.rows())
    throw DimensionError("label count does not match the number of rows");
  if (labels.empty()) throw DataError("evaluation set is empty");
  const auto targets = data::encode_with_classes(labels, io::classes_of(model));
  const Matrix prob = io::predict_proba(model, x);
  const auto predicted = data::argmax_rows(prob);
  Metrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = targets.index[i];
    if (predicted[i] != t) m.zero_one_loss += 1.0;
    m.log_loss -= std::log(std::max(prob(static_cast<Index>(i), t), scale::kProbabilityFloor));
  }
  m.zero_one_loss /= static_cast<double>(labels.size());
  m.log_loss /= static_cast<double>(labels.size());
  return m;
}

std::string to_json_line(const BenchReport& r, bool with_timing) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset_id;
  j["method"] = to_string(r.method);
  j["split"] = r.split;
  j["zero_one_loss"] = r.zero_one_loss;
  j["log_loss"] = r.log_loss;
  if (with_timing) j["fit_seconds"] = r.fit_seconds;
  j["n"] = r.n;
  j["p"] = r.p;
  j["k"] = r.k;
  return j.dump();
}

std::vector<BenchReport> run_benchmark(const std::string& dataset_id, const Eigen::Ref<const Matrix>& x,
                                       const LabelVector& labels, const BenchmarkOptions& options,
                                       const std::function<void(const BenchReport&)>& sink) {
  if (static_cast<Index>(labels.size()) != x.rows())
    throw DimensionError("label count does not match the number of rows");
  if (options.methods.empty()) throw ParameterError("no methods given");
  const auto fold = data::stratified_kfold(labels, options.folds, options.seed);

  std::vector<BenchReport> reports;
  for (int f = 0; f < options.folds; ++f) {
    std::vector<Index> train, test;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? test : train).push_back(static_cast<Index>(i));
    const Matrix x_train = rows_of(x, train);
    const Matrix x_test = rows_of(x, test);
    const LabelVector y_train = labels_of(labels, train);
    const LabelVector y_test = labels_of(labels, test);

    for (ModelKind method : options.methods) {
      const auto start = std::chrono::steady_clock::now();
      const io::AnyModel model = fit_method(method, x_train, y_train, options.method);
      const double fit_seconds = seconds_since(start);

      const Metrics m = evaluate(model, x_test, y_test);
      BenchReport r{dataset_id,  method,          f,
                    m.zero_one_loss, m.log_loss,  fit_seconds,
                    x_train.rows(), x_train.cols(), static_cast<Index>(io::classes_of(model).size())};
      if (sink) sink(r);
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

std::vector<Index> nested_order(const LabelVector& labels, std::uint64_t seed) {
  std::map<std::string, std::vector<Index>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<Index>(i));
  std::mt19937_64 rng(seed);
  for (auto& [label, rows] : members) std::shuffle(rows.begin(), rows.end(), rng);

  std::vector<Index> order;
  order.reserve(labels.size());
  for (std::size_t round = 0; order.size() < labels.size(); ++round)
    for (const auto& [label, rows] : members)
      if (round < rows.size()) order.push_back(rows[round]);
  return order;
}

std::vector<CurveRow> run_learning_curve(const Eigen::Ref<const Matrix>& x_train, const LabelVector& y_train,
                                         const Eigen::Ref<const Matrix>& x_eval, const LabelVector& y_eval,
                                         const LearningCurveOptions& options) {
  if (static_cast<Index>(y_train.size()) != x_train.rows() || static_cast<Index>(y_eval.size()) != x_eval.rows())
    throw DimensionError("label count does not match the number of rows");
  if (x_train.cols() != x_eval.cols()) throw DimensionError("training and evaluation feature counts differ");
  if (options.sizes.empty()) throw ParameterError("no training sizes given");
  std::vector<Index> sizes = options.sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  if (sizes.front() < 2) throw ParameterError("training sizes must be at least 2");
  if (sizes.back() > x_train.rows())
    throw DataError("training size " + std::to_string(sizes.back()) + " exceeds the " +
                    std::to_string(x_train.rows()) + " available rows");

  const std::vector<Index> order = nested_order(y_train, options.seed);
  std::vector<CurveRow> rows;
  for (Index size : sizes) {
    const std::vector<Index> subset(order.begin(), order.begin() + size);
    const Matrix xs = rows_of(x_train, subset);
    const LabelVector ys = labels_of(y_train, subset);
    for (ModelKind method : options.methods) {
      const auto start = std::chrono::steady_clock::now();
      const io::AnyModel model = fit_method(method, xs, ys, options.method);
      const double fit_seconds = seconds_since(start);
      const Metrics m = evaluate(model, x_eval, y_eval);
      rows.push_back({method, size, x_train.cols(), m.zero_one_loss, m.log_loss, fit_seconds});
    }
  }
  return rows;
}

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows) {
  out << "method,n_train,p,zero_one_loss,log_loss,fit_seconds\n";
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  for (const auto& r : rows)
    out << to_string(r.method) << ',' << r.n_train << ',' << r.p << ',' << r.zero_one_loss << ',' << r.log_loss
        << ',' << r.fit_seconds << '\n';
  out.precision(old_precision);
}

}  // namespace preval::bench
