#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "preval/data.hpp"
#include "preval/preval.hpp"
#include "preval/types.hpp"

namespace preval::baseline {

// Multinomial logistic regression fitted by penalized maximum likelihood.
struct LrModel {
  Matrix beta;        // p x k
  Vector intercepts;  // k
  double lambda = 0.0;
  LabelVector classes;
  Vector feature_center;
  std::optional<Vector> feature_scale;
  int iterations = 0;
  bool converged = false;
  double fit_seconds = 0.0;

  Index feature_count() const { return beta.rows(); }
  Index class_count() const { return beta.cols(); }
};

struct ObjectiveGrad {
  double value = 0.0;
  Matrix grad_beta;       // p x k
  Vector grad_intercepts;  // k
};

// Summed negative log-likelihood of softmax(X beta + 1 b^T) plus
// lambda * ||beta||^2. Intercepts are not penalized.
ObjectiveGrad lr_objective_grad(const Eigen::Ref<const Matrix>& beta, const Eigen::Ref<const Vector>& intercepts,
                                const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y_onehot,
                                double lambda);

struct LrConfig {
  int max_iter = 100;
  double grad_tol = 1e-6;  // relative to max(1, |objective|)
  int history = 10;        // L-BFGS memory
  data::Normalization normalize = data::Normalization::none;
  data::ClassOrder class_order = data::ClassOrder::lexicographic;
};

// One objective value per accepted iterate, starting at beta = 0.
struct LrTrace {
  std::vector<double> objective;
};

LrModel fit_lr(const Eigen::Ref<const Matrix>& x, const LabelVector& y, double lambda, const LrConfig& config = {},
               LrTrace* trace = nullptr);

struct LrCvConfig {
  LrConfig lr;
  std::vector<double> lambdas = default_lambda_grid();
  int folds = 5;
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
};

struct LrCvReport {
  std::vector<double> lambdas;
  std::vector<double> cv_logloss;  // pooled held-out mean log-loss
  std::size_t chosen = 0;
  double fit_seconds = 0.0;
};

// Stratified k-fold search over the penalty grid, then a refit on all rows.
// Ties go to the larger penalty.
LrModel fit_lr_cv(const Eigen::Ref<const Matrix>& x, const LabelVector& y, const LrCvConfig& config = {},
                  LrCvReport* report = nullptr);

Matrix predict_proba(const LrModel& model, const Eigen::Ref<const Matrix>& x_new);
LabelVector predict(const LrModel& model, const Eigen::Ref<const Matrix>& x_new);

// Plain ridge classifier: lambda by minimum PRESS, c fixed at 1, scores
// squashed through softmax.
FitResult fit_ridge_raw(const Eigen::Ref<const Matrix>& x, const LabelVector& y, const FitConfig& config = {});

// Ridge with c tuned on the full-fit (unvalidated) predictions and lambda by
// training log-loss after scaling.
FitResult fit_ridge_naive(const Eigen::Ref<const Matrix>& x, const LabelVector& y, const FitConfig& config = {});

}  // namespace preval::baseline
