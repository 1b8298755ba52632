#pragma once

#include <optional>
#include <vector>

#include "preval/data.hpp"
#include "preval/kernels.hpp"
#include "preval/linalg.hpp"
#include "preval/types.hpp"

namespace preval {

// 1 - diag(H) is floored here before dividing.
inline constexpr double kLeverageFloor = 1e-12;

// Ten log-spaced penalties from 1e-3 to 1e3 inclusive.
std::vector<double> default_lambda_grid();
std::vector<double> log_lambda_grid(double lo, double hi, int count);

// R = U diag(sigma), Q = R^T Y. Computed once per fit.
struct Precomputed {
  Matrix R;  // n x r
  Matrix Q;  // r x k
};

Precomputed precompute(const linalg::SvdFactors& svd, const Eigen::Ref<const Matrix>& y);

// Everything the ridge solution at one penalty gives us. The fit carries an
// unpenalized intercept (the column means of Y), so a leave-one-out refit
// re-centers on the remaining rows and the held-out row cannot leak through
// the shared feature mean.
struct RidgePathEntry {
  double lambda = 0.0;
  Matrix A;          // r x k, coefficients in the right-singular basis
  Vector intercept;  // k, column means of Y
  Matrix Yhat;       // n x k, full-fit predictions
  Matrix Ehat;       // n x k, full-fit residuals
  Vector diagH;      // n leverages, 1/n + sum_j R_ij^2 / (sigma_j^2 + lambda)
  Matrix Etilde;     // n x k, leave-one-out residuals
  Matrix Ytilde;     // n x k, prevalidated predictions
  double c = 0.0;
  double preval_logloss = 0.0;
};

RidgePathEntry path_entry(const Eigen::Ref<const Matrix>& R, const Eigen::Ref<const Matrix>& Q,
                          const Eigen::Ref<const Vector>& sigma, const Eigen::Ref<const Matrix>& y,
                          double lambda);

// Yhat - (Etilde - Ehat): row i is what the model fitted without row i predicts.
Matrix prevalidated_predictions(const RidgePathEntry& entry);

// Sum of squared leave-one-out residuals.
double press(const RidgePathEntry& entry);

enum class ModelKind { preval, ridge_raw, ridge_naive, lr };

const char* to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

// How the logit scale c and the penalty are chosen along the path.
enum class ScalePolicy {
  prevalidated,  // c on Ytilde, lambda by prevalidated log-loss
  unscaled,      // c = 1, lambda by PRESS
  naive,         // c on Yhat, lambda by training log-loss after scaling
};

struct FitConfig {
  std::vector<double> lambdas = default_lambda_grid();
  data::Normalization normalize = data::Normalization::none;
  data::ClassOrder class_order = data::ClassOrder::lexicographic;
  double rank_tol = linalg::kDefaultRankTol;
  linalg::SvdRoute route = linalg::SvdRoute::automatic;
  bool keep_loocv_caches = false;
  Exec exec = Exec::parallel;
};

// Retained to reconstruct every leave-one-out model after the fit.
struct LoocvCaches {
  Matrix A_star;          // r x k
  Matrix V;               // p x r
  Matrix R_over;          // n x r, R / (sigma^2 + lambda*)
  Matrix Etilde_star;     // n x k
  Vector intercept_star;  // k, before scaling
};

struct PrevalModel {
  ModelKind kind = ModelKind::preval;
  Matrix beta;       // p x k, already multiplied by c_star
  Vector intercept;  // k, already multiplied by c_star
  double c_star = 1.0;
  double lambda_star = 0.0;
  Vector feature_center;
  std::optional<Vector> feature_scale;
  LabelVector classes;
  std::optional<LoocvCaches> caches;
  double fit_seconds = 0.0;

  Index feature_count() const { return beta.rows(); }
  Index class_count() const { return beta.cols(); }
};

struct FitReport {
  struct Step {
    double lambda = 0.0;
    double c = 0.0;
    double preval_logloss = 0.0;  // log-loss of softmax(c * Ytilde)
    double train_logloss = 0.0;   // log-loss of softmax(c * Yhat)
    double press = 0.0;
  };
  ScalePolicy policy = ScalePolicy::prevalidated;
  std::vector<Step> path;
  std::size_t chosen = 0;
  double fit_seconds = 0.0;
  Index rank = 0;
};

struct FitResult {
  PrevalModel model;
  FitReport report;
};

// Centers (and optionally scales) X, encodes y one-vs-rest, and sweeps the
// penalty grid, fitting the logit scale on the prevalidated predictions.
FitResult fit(const Eigen::Ref<const Matrix>& x, const LabelVector& y, const FitConfig& config = {});

// Same pipeline with a different rule for c and lambda.
FitResult fit_with_policy(const Eigen::Ref<const Matrix>& x, const LabelVector& y, const FitConfig& config,
                          ScalePolicy policy);

// Centered (and scaled) copy of new data, laid out like the training data.
Matrix prepare_features(const PrevalModel& model, const Eigen::Ref<const Matrix>& x_new);

Matrix decision_scores(const PrevalModel& model, const Eigen::Ref<const Matrix>& x_new);
Matrix predict_proba(const PrevalModel& model, const Eigen::Ref<const Matrix>& x_new);
LabelVector predict(const PrevalModel& model, const Eigen::Ref<const Matrix>& x_new);

// The model fitted without training row i, scaled by c*. Scores for new rows
// are prepare_features(x) * beta + intercept.
struct LoocvModel {
  Matrix beta;  // p x k
  Vector intercept;
};

LoocvModel loocv_model(const PrevalModel& model, Index i);
Matrix loocv_coefficients(const PrevalModel& model, Index i);

}  // namespace preval
