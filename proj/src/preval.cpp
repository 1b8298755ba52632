#include "preval/preval.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "preval/error.hpp"
#include "preval/scale.hpp"

namespace preval {

std::vector<double> log_lambda_grid(double lo, double hi, int count) {
  if (count < 1) throw ParameterError("lambda grid needs at least one value");
  if (!(lo > 0.0) || !(hi > 0.0) || !std::isfinite(lo) || !std::isfinite(hi))
    throw ParameterError("lambda grid bounds must be positive and finite");
  if (count == 1) return {lo};
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> default_lambda_grid() { return log_lambda_grid(1e-3, 1e3, 10); }

Precomputed precompute(const linalg::SvdFactors& svd, const Eigen::Ref<const Matrix>& y) {
  if (svd.U.rows() != y.rows())
    throw DimensionError("U has " + std::to_string(svd.U.rows()) + " rows but targets have " +
                         std::to_string(y.rows()));
  if (svd.U.cols() != svd.sigma.size()) throw DimensionError("U columns do not match the singular values");
  Precomputed out;
  out.R = svd.U * svd.sigma.asDiagonal();
  out.Q = out.R.transpose() * y;
  return out;
}

RidgePathEntry path_entry(const Eigen::Ref<const Matrix>& R, const Eigen::Ref<const Matrix>& Q,
                          const Eigen::Ref<const Vector>& sigma, const Eigen::Ref<const Matrix>& y,
                          double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("ridge penalty must be positive");
  if (R.rows() != y.rows() || R.cols() != sigma.size() || Q.rows() != sigma.size() || Q.cols() != y.cols())
    throw DimensionError("path entry operands have inconsistent shapes");

  RidgePathEntry e;
  e.lambda = lambda;
  const Vector denom = (sigma.array().square() + lambda).matrix();
  e.A = Q.array().colwise() / denom.array();
  e.intercept = y.colwise().mean().transpose();
  e.Yhat = R * e.A;
  e.Yhat.rowwise() += e.intercept.transpose();
  e.Ehat = y - e.Yhat;

  const double intercept_leverage = 1.0 / static_cast<double>(R.rows());
  const Vector raw_leverage =
      ((R.array().square().rowwise() / denom.transpose().array()).rowwise().sum() + intercept_leverage).matrix();
  const Vector one_minus = (1.0 - raw_leverage.array()).max(kLeverageFloor).matrix();
  e.diagH = (1.0 - one_minus.array()).max(0.0).matrix();
  e.Etilde = e.Ehat.array().colwise() / one_minus.array();
  e.Ytilde = prevalidated_predictions(e);
  return e;
}

Matrix prevalidated_predictions(const RidgePathEntry& entry) {
  return entry.Yhat - (entry.Etilde - entry.Ehat);
}

double press(const RidgePathEntry& entry) { return entry.Etilde.squaredNorm(); }

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::preval: return "preval";
    case ModelKind::ridge_raw: return "ridge_raw";
    case ModelKind::ridge_naive: return "ridge_naive";
    case ModelKind::lr: return "lr";
  }
  return "preval";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "preval") return ModelKind::preval;
  if (name == "ridge_raw") return ModelKind::ridge_raw;
  if (name == "ridge_naive") return ModelKind::ridge_naive;
  if (name == "lr") return ModelKind::lr;
  throw ParameterError("unknown method '" + name + "' (expected preval, lr, ridge_raw or ridge_naive)");
}

namespace {

void validate_grid(const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw ParameterError("lambda grid is empty");
  for (double l : lambdas)
    if (!(l > 0.0) || !std::isfinite(l)) throw ParameterError("lambda grid values must be positive and finite");
}

FitReport::Step evaluate_step(const RidgePathEntry& e, const Matrix& indicators, ScalePolicy policy) {
  FitReport::Step s;
  s.lambda = e.lambda;
  s.press = press(e);
  switch (policy) {
    case ScalePolicy::prevalidated: {
      const auto fit = scale::minimize_scale(e.Ytilde, indicators);
      s.c = fit.c;
      s.preval_logloss = fit.loss;
      s.train_logloss = scale::scaled_loss_and_grad(s.c, e.Yhat, indicators).loss;
      break;
    }
    case ScalePolicy::unscaled:
      s.c = 1.0;
      s.preval_logloss = scale::scaled_loss_and_grad(1.0, e.Ytilde, indicators).loss;
      s.train_logloss = scale::scaled_loss_and_grad(1.0, e.Yhat, indicators).loss;
      break;
    case ScalePolicy::naive: {
      const auto fit = scale::minimize_scale(e.Yhat, indicators);
      s.c = fit.c;
      s.train_logloss = fit.loss;
      s.preval_logloss = scale::scaled_loss_and_grad(s.c, e.Ytilde, indicators).loss;
      break;
    }
  }
  return s;
}

double selection_loss(const FitReport::Step& s, ScalePolicy policy) {
  switch (policy) {
    case ScalePolicy::prevalidated: return s.preval_logloss;
    case ScalePolicy::unscaled: return s.press;
    case ScalePolicy::naive: return s.train_logloss;
  }
  return s.preval_logloss;
}

// Minimum loss; equal losses go to the smaller lambda. Always scans in grid
// order so the result does not depend on how the steps were computed.
std::size_t select_step(const std::vector<FitReport::Step>& path, ScalePolicy policy) {
  std::size_t best = path.size();
  for (std::size_t l = 0; l < path.size(); ++l) {
    const double loss = selection_loss(path[l], policy);
    if (std::isnan(loss)) continue;
    if (best == path.size()) {
      best = l;
      continue;
    }
    const double best_loss = selection_loss(path[best], policy);
    if (loss < best_loss || (loss == best_loss && path[l].lambda < path[best].lambda)) best = l;
  }
  if (best == path.size()) throw NumericError("every penalty on the grid produced a non-finite loss");
  return best;
}

ModelKind kind_of(ScalePolicy policy) {
  switch (policy) {
    case ScalePolicy::prevalidated: return ModelKind::preval;
    case ScalePolicy::unscaled: return ModelKind::ridge_raw;
    case ScalePolicy::naive: return ModelKind::ridge_naive;
  }
  return ModelKind::preval;
}

}  // namespace

FitResult fit_with_policy(const Eigen::Ref<const Matrix>& x, const LabelVector& y, const FitConfig& config,
                          ScalePolicy policy) {
  const auto start = std::chrono::steady_clock::now();

  const Index n = x.rows();
  const Index p = x.cols();
  if (static_cast<Index>(y.size()) != n)
    throw DimensionError("got " + std::to_string(y.size()) + " labels for " + std::to_string(n) + " rows");
  if (n < 2) throw DataError("fitting needs at least two rows");
  if (p < 1) throw DataError("fitting needs at least one feature");
  if (!x.allFinite()) throw NumericError("features contain non-finite values");
  validate_grid(config.lambdas);

  const data::EncodedTargets targets = data::encode_one_vs_rest(y, config.class_order);
  if (targets.class_count() < 2) throw DataError("fitting needs at least two distinct classes");
  const Matrix indicators = targets.indicators();

  // The optional normalization and the mean-centering the ridge fit needs are
  // folded into one affine map (x - center) / scale.
  const data::NormalizationStats stats = data::fit_normalization(x, config.normalize);
  const Vector shift = stats.apply(x).colwise().mean().transpose();
  PrevalModel model;
  model.kind = kind_of(policy);
  model.feature_center = stats.scale ? Vector(stats.center + stats.scale->cwiseProduct(shift))
                                     : Vector(stats.center + shift);
  model.feature_scale = stats.scale;
  model.classes = targets.classes;
  const data::NormalizationStats combined{model.feature_center, model.feature_scale};
  const Matrix xc = combined.apply(x);

  const linalg::SvdFactors svd = linalg::compact_svd(xc, config.rank_tol, config.route, config.exec);
  const Precomputed pre = precompute(svd, targets.signs);

  FitReport report;
  report.policy = policy;
  report.rank = svd.rank();
  report.path.resize(config.lambdas.size());
  const auto n_lambdas = static_cast<std::ptrdiff_t>(config.lambdas.size());
  // Exceptions may not leave an OpenMP region; park them and rethrow in order.
  std::vector<std::exception_ptr> errors(config.lambdas.size());
  auto run_step = [&](std::ptrdiff_t l) {
    try {
      const auto entry = path_entry(pre.R, pre.Q, svd.sigma, targets.signs, config.lambdas[l]);
      report.path[l] = evaluate_step(entry, indicators, policy);
    } catch (...) {
      errors[l] = std::current_exception();
    }
  };
  if (config.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t l = 0; l < n_lambdas; ++l) run_step(l);
  } else {
    for (std::ptrdiff_t l = 0; l < n_lambdas; ++l) run_step(l);
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  report.chosen = select_step(report.path, policy);

  const FitReport::Step& chosen = report.path[report.chosen];
  const RidgePathEntry best = path_entry(pre.R, pre.Q, svd.sigma, targets.signs, chosen.lambda);
  model.lambda_star = chosen.lambda;
  model.c_star = chosen.c;
  model.beta = model.c_star * (svd.V * best.A);
  model.intercept = model.c_star * best.intercept;
  if (config.keep_loocv_caches) {
    const Vector denom = (svd.sigma.array().square() + chosen.lambda).matrix();
    model.caches = LoocvCaches{best.A, svd.V, pre.R.array().rowwise() / denom.transpose().array(),
                               best.Etilde, best.intercept};
  }

  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  report.fit_seconds = elapsed.count();
  model.fit_seconds = report.fit_seconds;
  return {std::move(model), std::move(report)};
}

FitResult fit(const Eigen::Ref<const Matrix>& x, const LabelVector& y, const FitConfig& config) {
  return fit_with_policy(x, y, config, ScalePolicy::prevalidated);
}

Matrix prepare_features(const PrevalModel& model, const Eigen::Ref<const Matrix>& x_new) {
  if (x_new.cols() != model.feature_count())
    throw DimensionError("model expects " + std::to_string(model.feature_count()) + " features, data has " +
                         std::to_string(x_new.cols()));
  return data::NormalizationStats{model.feature_center, model.feature_scale}.apply(x_new);
}

Matrix decision_scores(const PrevalModel& model, const Eigen::Ref<const Matrix>& x_new) {
  Matrix scores = prepare_features(model, x_new) * model.beta;
  scores.rowwise() += model.intercept.transpose();
  return scores;
}

Matrix predict_proba(const PrevalModel& model, const Eigen::Ref<const Matrix>& x_new) {
  return scale::softmax_rows(decision_scores(model, x_new));
}

LabelVector predict(const PrevalModel& model, const Eigen::Ref<const Matrix>& x_new) {
  return data::decode(predict_proba(model, x_new), model.classes);
}

LoocvModel loocv_model(const PrevalModel& model, Index i) {
  if (!model.caches) throw ParameterError("model was fitted without leave-one-out caches");
  const LoocvCaches& c = *model.caches;
  const Index n = c.R_over.rows();
  if (i < 0 || i >= n)
    throw ParameterError("row index " + std::to_string(i) + " outside [0, " + std::to_string(n) + ")");
  const Matrix a_dagger = c.A_star - c.R_over.row(i).transpose() * c.Etilde_star.row(i);
  // The intercept direction is 1/sqrt(n) with no penalty, so its downdate is Etilde_i / n.
  const Vector b_dagger = c.intercept_star - c.Etilde_star.row(i).transpose() / static_cast<double>(n);
  return {model.c_star * (c.V * a_dagger), model.c_star * b_dagger};
}

Matrix loocv_coefficients(const PrevalModel& model, Index i) { return loocv_model(model, i).beta; }

}  // namespace preval
