#include "preval/scale.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "preval/error.hpp"

namespace preval::scale {

namespace {

void check_same_shape(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("shape mismatch: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

// Column index of the 1 in each row; throws on anything that is not one-hot.
std::vector<Index> true_classes(const Eigen::Ref<const Matrix>& y_onehot) {
  std::vector<Index> out(static_cast<std::size_t>(y_onehot.rows()));
  for (Index i = 0; i < y_onehot.rows(); ++i) {
    Index hot = -1;
    for (Index j = 0; j < y_onehot.cols(); ++j) {
      const double v = y_onehot(i, j);
      if (v == 1.0 && hot < 0) {
        hot = j;
      } else if (v != 0.0) {
        throw ParameterError("row " + std::to_string(i) + " of the indicator matrix is not one-hot");
      }
    }
    if (hot < 0) throw ParameterError("row " + std::to_string(i) + " of the indicator matrix has no class");
    out[static_cast<std::size_t>(i)] = hot;
  }
  return out;
}

struct LossDerivs {
  double loss = 0.0;
  double grad = 0.0;
  double hess = 0.0;
};

// Per row: loss_i = lse(c z_i) - c z_i[t]; d/dc = E_p[z] - z[t]; d2/dc2 = Var_p[z].
// Computed in log space, so no probability floor is needed (or applied).
LossDerivs evaluate(double c, const Eigen::Ref<const Matrix>& z, const std::vector<Index>& truth) {
  const Index n = z.rows();
  const Index k = z.cols();
  LossDerivs out;
  for (Index i = 0; i < n; ++i) {
    double row_max = c * z(i, 0);
    for (Index j = 1; j < k; ++j) row_max = std::max(row_max, c * z(i, j));
    double sum = 0.0, first = 0.0, second = 0.0;
    for (Index j = 0; j < k; ++j) {
      const double e = std::exp(c * z(i, j) - row_max);
      sum += e;
      first += e * z(i, j);
      second += e * z(i, j) * z(i, j);
    }
    const double mean_z = first / sum;
    const Index t = truth[static_cast<std::size_t>(i)];
    const double log_p_true = c * z(i, t) - row_max - std::log(sum);
    out.loss -= log_p_true;
    out.grad += mean_z - z(i, t);
    out.hess += std::max(second / sum - mean_z * mean_z, 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss *= inv_n;
  out.grad *= inv_n;
  out.hess *= inv_n;
  return out;
}

}  // namespace

Matrix softmax_rows(const Eigen::Ref<const Matrix>& logits) {
  if (!logits.allFinite()) throw NumericError("softmax input has non-finite entries");
  Matrix p(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double row_max = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - row_max).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

double log_loss(const Eigen::Ref<const Matrix>& probabilities, const Eigen::Ref<const Matrix>& y_onehot) {
  check_same_shape(probabilities, y_onehot);
  if (probabilities.rows() == 0) throw DimensionError("log-loss of zero rows");
  const auto truth = true_classes(y_onehot);
  double total = 0.0;
  for (Index i = 0; i < probabilities.rows(); ++i) {
    const double p = probabilities(i, truth[static_cast<std::size_t>(i)]);
    total -= std::log(std::max(p, kProbabilityFloor));
  }
  return total / static_cast<double>(probabilities.rows());
}

LossGrad scaled_loss_and_grad(double c, const Eigen::Ref<const Matrix>& z,
                              const Eigen::Ref<const Matrix>& y_onehot) {
  if (!std::isfinite(c)) throw NumericError("scale parameter is not finite");
  check_same_shape(z, y_onehot);
  if (z.rows() == 0) throw DimensionError("scaled loss over zero rows");
  const auto d = evaluate(c, z, true_classes(y_onehot));
  return {d.loss, d.grad};
}

ScaleFitResult minimize_scale(const Eigen::Ref<const Matrix>& z, const Eigen::Ref<const Matrix>& y_onehot,
                              double c_init, const ScaleOptions& options) {
  check_same_shape(z, y_onehot);
  if (z.rows() == 0) throw DimensionError("scale fit over zero rows");
  if (!std::isfinite(c_init)) throw NumericError("initial scale is not finite");
  if (!z.allFinite()) throw NumericError("scores have non-finite entries");
  const auto truth = true_classes(y_onehot);

  ScaleFitResult result;
  if (z.isZero(0.0)) {
    result.c = c_init;
    result.loss = std::log(static_cast<double>(z.cols()));
    result.converged = true;
    result.degenerate = true;
    return result;
  }

  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 60;

  double c = c_init;
  LossDerivs cur = evaluate(c, z, truth);
  int it = 0;
  bool converged = std::abs(cur.grad) <= options.grad_tol;
  while (!converged && it < options.max_iter) {
    ++it;
    double step = cur.hess > 0.0 ? -cur.grad / cur.hess : -cur.grad;
    if (!std::isfinite(step)) step = -cur.grad;

    double t = 1.0;
    LossDerivs next = evaluate(c + t * step, z, truth);
    int halvings = 0;
    while (!(next.loss <= cur.loss + kArmijo * t * cur.grad * step) && halvings < kMaxHalvings) {
      t *= 0.5;
      next = evaluate(c + t * step, z, truth);
      ++halvings;
    }
    if (halvings == kMaxHalvings) {
      // No decrease is representable any more: we are at the optimum to
      // within rounding.
      converged = true;
      break;
    }

    const double change = std::abs(cur.loss - next.loss);
    c += t * step;
    cur = next;
    converged = std::abs(cur.grad) <= options.grad_tol ||
                change <= options.rel_loss_tol * std::abs(cur.loss);
  }

  // Both stopping tests can fire while c is still off by grad / hess when the
  // loss is flat in c; one more Newton step removes most of that. Loss changes
  // are below rounding there, so the step is judged by the gradient, which for
  // a convex function shrinks towards the minimizer.
  if (converged && cur.hess > 0.0 && cur.grad != 0.0) {
    const double step = -cur.grad / cur.hess;
    const LossDerivs next = evaluate(c + step, z, truth);
    if (std::isfinite(step) && std::isfinite(next.loss) && std::abs(next.grad) < std::abs(cur.grad)) {
      c += step;
      cur = next;
    }
  }

  result.c = c;
  result.loss = cur.loss;
  result.iterations = it;
  result.converged = converged;
  return result;
}

Matrix one_hot(const std::vector<int>& class_index, Index k) {
  Matrix y = Matrix::Zero(static_cast<Index>(class_index.size()), k);
  for (std::size_t i = 0; i < class_index.size(); ++i) {
    const int c = class_index[i];
    if (c < 0 || c >= k) throw ParameterError("class index " + std::to_string(c) + " out of range");
    y(static_cast<Index>(i), c) = 1.0;
  }
  return y;
}

}  // namespace preval::scale
