#pragma once

#include "preval/types.hpp"

namespace preval::scale {

// Probabilities are floored here before taking logs.
inline constexpr double kProbabilityFloor = 1e-300;

// Row-wise softmax with the row maximum subtracted first.
Matrix softmax_rows(const Eigen::Ref<const Matrix>& logits);

// Mean negative log-likelihood of the indicated class. Rows of `y_onehot` must
// hold exactly one 1 and zeros elsewhere.
double log_loss(const Eigen::Ref<const Matrix>& probabilities, const Eigen::Ref<const Matrix>& y_onehot);

struct LossGrad {
  double loss = 0.0;
  double grad = 0.0;
};

// log_loss(softmax(c * z), y) and its derivative in c.
LossGrad scaled_loss_and_grad(double c, const Eigen::Ref<const Matrix>& z,
                              const Eigen::Ref<const Matrix>& y_onehot);

struct ScaleFitResult {
  double c = 1.0;
  double loss = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;  // z was identically zero, any c is optimal
};

struct ScaleOptions {
  double grad_tol = 1e-10;
  double rel_loss_tol = 1e-12;
  int max_iter = 200;
};

// Minimizes c -> log_loss(softmax(c * z), y) with a safeguarded Newton
// iteration (exact second derivative, Armijo backtracking). c is unconstrained.
ScaleFitResult minimize_scale(const Eigen::Ref<const Matrix>& z, const Eigen::Ref<const Matrix>& y_onehot,
                              double c_init = 1.0, const ScaleOptions& options = {});

// 0/1 indicator matrix for class indices in [0, k).
Matrix one_hot(const std::vector<int>& class_index, Index k);

}  // namespace preval::scale
