#include "preval/baseline.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <exception>
#include <limits>
#include <string>

#include "preval/error.hpp"
#include "preval/scale.hpp"

namespace preval::baseline {

namespace {

// Objective without the shape and one-hot checks; `truth` holds class indices.
double objective(const Eigen::Ref<const Matrix>& beta, const Eigen::Ref<const Vector>& intercepts,
                 const Eigen::Ref<const Matrix>& x, const std::vector<int>& truth, double lambda,
                 Matrix* grad_beta, Vector* grad_intercepts) {
  Matrix z = x * beta;
  z.rowwise() += intercepts.transpose();
  double nll = 0.0;
  for (Index i = 0; i < z.rows(); ++i) {
    const int t = truth[static_cast<std::size_t>(i)];
    const double row_max = z.row(i).maxCoeff();
    const double shifted_true = z(i, t) - row_max;
    z.row(i) = (z.row(i).array() - row_max).exp();
    const double sum = z.row(i).sum();
    nll += std::log(sum) - shifted_true;
    z.row(i) /= sum;
    z(i, t) -= 1.0;  // z now holds P - Y
  }
  if (grad_beta) *grad_beta = x.transpose() * z + (2.0 * lambda) * beta;
  if (grad_intercepts) *grad_intercepts = z.colwise().sum().transpose();
  return nll + lambda * beta.squaredNorm();
}

std::vector<int> class_indices(const Eigen::Ref<const Matrix>& y_onehot) {
  std::vector<int> truth(static_cast<std::size_t>(y_onehot.rows()));
  for (Index i = 0; i < y_onehot.rows(); ++i) {
    int hot = -1;
    for (Index j = 0; j < y_onehot.cols(); ++j) {
      const double v = y_onehot(i, j);
      if (v == 1.0 && hot < 0)
        hot = static_cast<int>(j);
      else if (v != 0.0)
        throw ParameterError("row " + std::to_string(i) + " of the indicator matrix is not one-hot");
    }
    if (hot < 0) throw ParameterError("row " + std::to_string(i) + " of the indicator matrix is not one-hot");
    truth[static_cast<std::size_t>(i)] = hot;
  }
  return truth;
}

struct Encoded {
  std::vector<int> index;
  Index k = 0;
};

// L-BFGS over (beta, intercepts) with Armijo backtracking. Accepted steps
// never increase the objective.
LrModel fit_encoded(const Eigen::Ref<const Matrix>& x_raw, const Encoded& y, const LabelVector& classes,
                    double lambda, const LrConfig& config, LrTrace* trace) {
  const auto start = std::chrono::steady_clock::now();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("penalty must be non-negative");
  if (config.max_iter < 0) throw ParameterError("max_iter must be non-negative");

  const data::NormalizationStats stats = data::fit_normalization(x_raw, config.normalize);
  const Matrix x = stats.apply(x_raw);
  const Index p = x.cols();
  const Index k = y.k;
  const Index dim = p * k + k;

  Vector theta = Vector::Zero(dim);
  Vector grad(dim);
  auto eval = [&](const Vector& th, Vector& g) {
    Matrix gb;
    Vector gi;
    const double v = objective(Eigen::Map<const Matrix>(th.data(), p, k), th.tail(k), x, y.index, lambda, &gb, &gi);
    g.head(p * k) = Eigen::Map<const Vector>(gb.data(), p * k);
    g.tail(k) = gi;
    return v;
  };

  double f = eval(theta, grad);
  if (trace) trace->objective.assign(1, f);

  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 50;

  int it = 0;
  bool converged = false;
  Vector g_new(dim);
  while (true) {
    if (grad.norm() <= config.grad_tol * std::max(1.0, std::abs(f))) {
      converged = true;
      break;
    }
    if (it >= config.max_iter) break;
    ++it;

    // Two-loop recursion for d = -H g.
    Vector d = -grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t m = s_hist.size(); m-- > 0;) {
      alpha[m] = rho_hist[m] * s_hist[m].dot(d);
      d -= alpha[m] * y_hist[m];
    }
    if (!s_hist.empty()) {
      d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      d /= std::max(1.0, grad.norm());
    }
    for (std::size_t m = 0; m < s_hist.size(); ++m) {
      const double b = rho_hist[m] * y_hist[m].dot(d);
      d += (alpha[m] - b) * s_hist[m];
    }
    double slope = grad.dot(d);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -grad / std::max(1.0, grad.norm());
      slope = grad.dot(d);
    }

    double t = 1.0;
    Vector trial = theta + d;
    double f_new = eval(trial, g_new);
    int halvings = 0;
    while (!(f_new <= f + kArmijo * t * slope) && halvings < kMaxHalvings) {
      t *= 0.5;
      trial = theta + t * d;
      f_new = eval(trial, g_new);
      ++halvings;
    }
    if (!std::isfinite(f_new)) throw NumericError("logistic regression objective became non-finite");
    if (halvings == kMaxHalvings) break;  // no representable decrease left

    Vector s = trial - theta;
    Vector yv = g_new - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta = std::move(trial);
    grad = g_new;
    f = f_new;
    if (trace) trace->objective.push_back(f);
  }

  LrModel model;
  model.beta = Eigen::Map<const Matrix>(theta.data(), p, k);
  model.intercepts = theta.tail(k);
  model.lambda = lambda;
  model.classes = classes;
  model.feature_center = stats.center;
  model.feature_scale = stats.scale;
  model.iterations = it;
  model.converged = converged;
  if (!model.beta.allFinite() || !model.intercepts.allFinite())
    throw NumericError("logistic regression produced non-finite coefficients");
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  model.fit_seconds = elapsed.count();
  return model;
}

Matrix scores(const LrModel& model, const Eigen::Ref<const Matrix>& x_new) {
  if (x_new.cols() != model.feature_count())
    throw DimensionError("model expects " + std::to_string(model.feature_count()) + " features, data has " +
                         std::to_string(x_new.cols()));
  Matrix z = data::NormalizationStats{model.feature_center, model.feature_scale}.apply(x_new) * model.beta;
  z.rowwise() += model.intercepts.transpose();
  return z;
}

void check_inputs(const Eigen::Ref<const Matrix>& x, const LabelVector& y) {
  if (static_cast<Index>(y.size()) != x.rows())
    throw DimensionError("got " + std::to_string(y.size()) + " labels for " + std::to_string(x.rows()) + " rows");
  if (x.rows() < 2) throw DataError("fitting needs at least two rows");
  if (!x.allFinite()) throw NumericError("features contain non-finite values");
}

}  // namespace

ObjectiveGrad lr_objective_grad(const Eigen::Ref<const Matrix>& beta, const Eigen::Ref<const Vector>& intercepts,
                                const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y_onehot,
                                double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("penalty must be non-negative");
  if (!beta.allFinite() || !intercepts.allFinite()) throw NumericError("non-finite logistic regression parameters");
  if (x.cols() != beta.rows() || beta.cols() != intercepts.size() || y_onehot.rows() != x.rows() ||
      y_onehot.cols() != beta.cols())
    throw DimensionError("logistic regression operands have inconsistent shapes");
  ObjectiveGrad out;
  out.value = objective(beta, intercepts, x, class_indices(y_onehot), lambda, &out.grad_beta, &out.grad_intercepts);
  return out;
}

LrModel fit_lr(const Eigen::Ref<const Matrix>& x, const LabelVector& y, double lambda, const LrConfig& config,
               LrTrace* trace) {
  check_inputs(x, y);
  const auto targets = data::encode_one_vs_rest(y, config.class_order);
  if (targets.class_count() < 2) throw DataError("fitting needs at least two distinct classes");
  return fit_encoded(x, {targets.index, targets.class_count()}, targets.classes, lambda, config, trace);
}

LrModel fit_lr_cv(const Eigen::Ref<const Matrix>& x, const LabelVector& y, const LrCvConfig& config,
                  LrCvReport* report) {
  const auto start = std::chrono::steady_clock::now();
  check_inputs(x, y);
  if (config.lambdas.empty()) throw ParameterError("lambda grid is empty");
  const auto targets = data::encode_one_vs_rest(y, config.lr.class_order);
  if (targets.class_count() < 2) throw DataError("fitting needs at least two distinct classes");
  const Encoded all{targets.index, targets.class_count()};
  const std::vector<int> fold = data::stratified_kfold(y, config.folds, config.seed);

  const std::size_t n_lambda = config.lambdas.size();
  std::vector<double> cv_loss(n_lambda, std::numeric_limits<double>::quiet_NaN());
  std::size_t chosen = 0;

  if (n_lambda > 1) {
    const auto n_folds = static_cast<std::size_t>(config.folds);
    std::vector<double> held_out_nll(n_lambda * n_folds, 0.0);
    std::vector<std::exception_ptr> errors(held_out_nll.size());

    auto run_task = [&](std::size_t task) {
      try {
        const std::size_t l = task / n_folds;
        const int f = static_cast<int>(task % n_folds);
        std::vector<Index> train, test;
        for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? test : train).push_back(static_cast<Index>(i));
        Encoded y_train{{}, all.k};
        for (Index i : train) y_train.index.push_back(all.index[static_cast<std::size_t>(i)]);
        const LrModel m = fit_encoded(x(train, Eigen::all), y_train, targets.classes, config.lambdas[l], config.lr,
                                      nullptr);
        const Matrix prob = predict_proba(m, x(test, Eigen::all));
        double nll = 0.0;
        for (std::size_t r = 0; r < test.size(); ++r) {
          const int t = all.index[static_cast<std::size_t>(test[r])];
          nll -= std::log(std::max(prob(static_cast<Index>(r), t), scale::kProbabilityFloor));
        }
        held_out_nll[task] = nll;
      } catch (...) {
        errors[task] = std::current_exception();
      }
    };

    const auto n_tasks = static_cast<std::ptrdiff_t>(held_out_nll.size());
    if (config.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
      for (std::ptrdiff_t task = 0; task < n_tasks; ++task) run_task(static_cast<std::size_t>(task));
    } else {
      for (std::ptrdiff_t task = 0; task < n_tasks; ++task) run_task(static_cast<std::size_t>(task));
    }
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);

    for (std::size_t l = 0; l < n_lambda; ++l) {
      double total = 0.0;
      for (std::size_t f = 0; f < n_folds; ++f) total += held_out_nll[l * n_folds + f];
      cv_loss[l] = total / static_cast<double>(x.rows());
    }
    for (std::size_t l = 1; l < n_lambda; ++l) {
      if (cv_loss[l] < cv_loss[chosen] ||
          (cv_loss[l] == cv_loss[chosen] && config.lambdas[l] > config.lambdas[chosen]))
        chosen = l;
    }
  }

  LrModel model = fit_encoded(x, all, targets.classes, config.lambdas[chosen], config.lr, nullptr);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  model.fit_seconds = elapsed.count();
  if (report) *report = {config.lambdas, cv_loss, chosen, model.fit_seconds};
  return model;
}

Matrix predict_proba(const LrModel& model, const Eigen::Ref<const Matrix>& x_new) {
  return scale::softmax_rows(scores(model, x_new));
}

LabelVector predict(const LrModel& model, const Eigen::Ref<const Matrix>& x_new) {
  return data::decode(predict_proba(model, x_new), model.classes);
}

FitResult fit_ridge_raw(const Eigen::Ref<const Matrix>& x, const LabelVector& y, const FitConfig& config) {
  return fit_with_policy(x, y, config, ScalePolicy::unscaled);
}

FitResult fit_ridge_naive(const Eigen::Ref<const Matrix>& x, const LabelVector& y, const FitConfig& config) {
  return fit_with_policy(x, y, config, ScalePolicy::naive);
}

}  // namespace preval::baseline
