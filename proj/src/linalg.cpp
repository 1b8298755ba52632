#include "preval/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "preval/error.hpp"

namespace preval::linalg {

GramAccumulator::GramAccumulator(GramSide side, Exec exec) : side_(side), exec_(exec) {}

void GramAccumulator::check_width(Index width) {
  if (width_ < 0) {
    width_ = width;
    if (side_ == GramSide::features) running_ = Matrix::Zero(width, width);
    return;
  }
  if (width != width_)
    throw DimensionError("row of length " + std::to_string(width) + " after rows of length " +
                         std::to_string(width_));
}

void GramAccumulator::add_rows(const Eigen::Ref<const Matrix>& rows) {
  if (rows.rows() == 0) return;
  check_width(rows.cols());
  if (side_ == GramSide::features) {
    const Matrix as_columns = rows.transpose();
    kernels::add_gram_of_columns(running_, as_columns, exec_);
  } else {
    for (Index i = 0; i < rows.rows(); ++i) stored_rows_.emplace_back(rows.row(i).transpose());
  }
  rows_seen_ += rows.rows();
}

void GramAccumulator::add_row(const Eigen::Ref<const Vector>& row) {
  add_rows(row.transpose());
}

GramMatrix GramAccumulator::finish() const {
  if (rows_seen_ == 0) throw DimensionError("gram accumulation over an empty row stream");
  if (side_ == GramSide::features) {
    Matrix values = running_;
    kernels::mirror_lower(values);
    return {side_, std::move(values)};
  }
  Matrix x(width_, static_cast<Index>(stored_rows_.size()));
  for (std::size_t i = 0; i < stored_rows_.size(); ++i) x.col(static_cast<Index>(i)) = stored_rows_[i];
  // Columns of x^T are the features; X X^T is the sum of their outer products.
  const Matrix features_as_columns = x.transpose();
  return {side_, kernels::gram_of_columns(features_as_columns, exec_)};
}

GramMatrix accumulate_gram(const Eigen::Ref<const Matrix>& rows, GramSide side, Exec exec) {
  if (rows.rows() == 0 || rows.cols() == 0)
    throw DimensionError("gram accumulation over an empty matrix");
  if (side == GramSide::features) {
    const Matrix as_columns = rows.transpose();
    return {side, kernels::gram_of_columns(as_columns, exec)};
  }
  return {side, kernels::gram_of_columns(rows, exec)};
}

EigenPairs sym_eigendecomp(const GramMatrix& s, double rank_tol) {
  const Matrix& a = s.values;
  if (a.rows() != a.cols()) throw DimensionError("eigendecomposition of a non-square matrix");
  if (!a.allFinite()) throw NumericError("eigendecomposition input has non-finite entries");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) throw NumericError("symmetric eigensolver did not converge");

  // Eigen returns ascending order.
  const Vector& w = solver.eigenvalues();
  const Matrix& q = solver.eigenvectors();
  const Index d = w.size();
  const double largest = d > 0 ? std::max(w(d - 1), 0.0) : 0.0;
  const double cutoff = rank_tol * largest;

  Index kept = 0;
  for (Index j = d - 1; j >= 0 && largest > 0.0 && w(j) > cutoff; --j) ++kept;

  EigenPairs out{Vector(kept), Matrix(d, kept)};
  for (Index j = 0; j < kept; ++j) {
    const Index src = d - 1 - j;
    out.values(j) = std::max(w(src), 0.0);
    Vector v = q.col(src);
    Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v(pivot) < 0.0) v = -v;
    out.vectors.col(j) = v;
  }
  return out;
}

SvdFactors compact_svd(const Eigen::Ref<const Matrix>& x_centered, double rank_tol, SvdRoute route,
                       Exec exec) {
  const Index n = x_centered.rows();
  const Index p = x_centered.cols();
  if (n == 0 || p == 0) throw DimensionError("compact SVD of an empty matrix");
  if (!x_centered.allFinite()) throw NumericError("design matrix has non-finite entries");

  const bool use_features =
      route == SvdRoute::features || (route == SvdRoute::automatic && n >= p);

  SvdFactors f;
  if (use_features) {
    const EigenPairs eig = sym_eigendecomp(accumulate_gram(x_centered, GramSide::features, exec), rank_tol);
    if (eig.values.size() == 0) throw DegenerateInputError("design matrix has rank 0");
    f.sigma = eig.values.cwiseSqrt();
    f.V = eig.vectors;
    f.U = (x_centered * f.V) * f.sigma.cwiseInverse().asDiagonal();
  } else {
    const EigenPairs eig = sym_eigendecomp(accumulate_gram(x_centered, GramSide::examples, exec), rank_tol);
    if (eig.values.size() == 0) throw DegenerateInputError("design matrix has rank 0");
    f.sigma = eig.values.cwiseSqrt();
    f.U = eig.vectors;
    f.V = (x_centered.transpose() * f.U) * f.sigma.cwiseInverse().asDiagonal();
  }
  return f;
}

Matrix ridge_closed_form_oracle(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                                double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("ridge penalty must be non-negative");
  if (x.rows() != y.rows()) throw DimensionError("design and target row counts differ");
  Matrix system = x.transpose() * x;
  system.diagonal().array() += lambda;
  const Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14)
    throw NumericError("ridge normal equations are singular");
  return llt.solve(x.transpose() * y);
}

}  // namespace preval::linalg
