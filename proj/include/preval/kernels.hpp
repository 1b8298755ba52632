#pragma once

// Data-parallel inner loops. Every kernel has a plain serial version that is
// kept as the reference, and an OpenMP version that must agree with it
// bitwise: the parallel loops only split the *output* among threads, each
// output element is still accumulated in the same order as in the serial code.

#include <cstdint>
#include <span>

#include "preval/types.hpp"

namespace preval {

enum class Exec { serial, parallel };

namespace kernels {

// Number of threads the parallel kernels will use. Honors PREVAL_THREADS as an
// upper bound on the OpenMP default; returns the value that was applied.
int configure_threads_from_env();
int max_threads();

// Row-major stack of n grayscale images of size height x width.
struct ImageView {
  std::span<const double> pixels;
  Index count = 0;
  Index height = 0;
  Index width = 0;

  const double* image(Index i) const { return pixels.data() + i * height * width; }
};

inline constexpr Index kConvKernelSize = 9;

namespace serial {

// Adds m * m^T into the lower triangle of g, one column of m at a time.
void add_gram_of_columns(Matrix& g, const Eigen::Ref<const Matrix>& m);

// m * m^T (both triangles filled).
Matrix gram_of_columns(const Eigen::Ref<const Matrix>& m);

// Valid-mode cross-correlation of every image with every kernel (one kernel
// per row of `weights`, 9x9 row-major), ReLU, then mean over positions.
Matrix conv_relu_mean(const ImageView& images, const Eigen::Ref<const Matrix>& weights);

}  // namespace serial

namespace omp {

void add_gram_of_columns(Matrix& g, const Eigen::Ref<const Matrix>& m);
Matrix gram_of_columns(const Eigen::Ref<const Matrix>& m);
Matrix conv_relu_mean(const ImageView& images, const Eigen::Ref<const Matrix>& weights);

}  // namespace omp

inline void add_gram_of_columns(Matrix& g, const Eigen::Ref<const Matrix>& m, Exec exec) {
  if (exec == Exec::serial)
    serial::add_gram_of_columns(g, m);
  else
    omp::add_gram_of_columns(g, m);
}

// Copies the lower triangle onto the upper one.
void mirror_lower(Matrix& g);

inline Matrix gram_of_columns(const Eigen::Ref<const Matrix>& m, Exec exec) {
  return exec == Exec::serial ? serial::gram_of_columns(m) : omp::gram_of_columns(m);
}

inline Matrix conv_relu_mean(const ImageView& images, const Eigen::Ref<const Matrix>& weights,
                             Exec exec) {
  return exec == Exec::serial ? serial::conv_relu_mean(images, weights)
                              : omp::conv_relu_mean(images, weights);
}

}  // namespace kernels
}  // namespace preval
