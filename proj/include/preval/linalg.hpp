#pragma once

#include <vector>

#include "preval/kernels.hpp"
#include "preval/types.hpp"

namespace preval::linalg {

// Eigenvalues at or below this fraction of the largest eigenvalue are treated
// as zero. Singular values therefore stop at ~1e-5 of the largest one.
inline constexpr double kDefaultRankTol = 1e-10;

enum class GramSide {
  features,  // X^T X, p x p
  examples,  // X X^T, n x n
};

struct GramMatrix {
  GramSide side = GramSide::features;
  Matrix values;
};

// Streams rows of X into X^T X or X X^T. The features side keeps only the
// p x p running sum; the examples side has to retain the rows because every
// new row adds a row and a column to X X^T. Either way the result does not
// depend on how the rows were chunked.
class GramAccumulator {
 public:
  explicit GramAccumulator(GramSide side, Exec exec = Exec::parallel);

  void add_rows(const Eigen::Ref<const Matrix>& rows);
  void add_row(const Eigen::Ref<const Vector>& row);

  Index rows_seen() const { return rows_seen_; }
  GramMatrix finish() const;

 private:
  void check_width(Index width);

  GramSide side_;
  Exec exec_;
  Index width_ = -1;
  Index rows_seen_ = 0;
  Matrix running_;                   // features side
  std::vector<Vector> stored_rows_;  // examples side
};

GramMatrix accumulate_gram(const Eigen::Ref<const Matrix>& rows, GramSide side,
                           Exec exec = Exec::parallel);

struct EigenPairs {
  Vector values;   // descending, all > rank_tol * max
  Matrix vectors;  // one orthonormal eigenvector per column
};

EigenPairs sym_eigendecomp(const GramMatrix& s, double rank_tol = kDefaultRankTol);

// Compact SVD X = U diag(sigma) V^T keeping only the retained rank.
struct SvdFactors {
  Matrix U;      // n x r
  Vector sigma;  // r, strictly positive, descending
  Matrix V;      // p x r

  Index rank() const { return sigma.size(); }
};

enum class SvdRoute {
  automatic,  // X^T X when n >= p, X X^T otherwise
  features,
  examples,
};

SvdFactors compact_svd(const Eigen::Ref<const Matrix>& x_centered,
                       double rank_tol = kDefaultRankTol, SvdRoute route = SvdRoute::automatic,
                       Exec exec = Exec::parallel);

// (X^T X + lambda I)^{-1} X^T Y by a direct dense solve. O(p^3); used as an
// independent check on the SVD route.
Matrix ridge_closed_form_oracle(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                                double lambda);

}  // namespace preval::linalg
