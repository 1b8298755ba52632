#include <algorithm>
#include <cstdlib>
#include <string>

#include <omp.h>

#include "kernels_common.hpp"
#include "preval/kernels.hpp"

namespace preval::kernels {

namespace {
constexpr Index kGramBlock = 32;
}

int configure_threads_from_env() {
  int threads = omp_get_max_threads();
  if (const char* env = std::getenv("PREVAL_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) threads = std::min<int>(threads, static_cast<int>(cap));
  }
  omp_set_num_threads(threads);
  return threads;
}

int max_threads() { return omp_get_max_threads(); }

namespace omp {

void add_gram_of_columns(Matrix& g, const Eigen::Ref<const Matrix>& m) {
  detail::check_gram_target(g, m);
  const Index d = m.rows();
  const Index n_cols = m.cols();
  const Index n_blocks = (d + kGramBlock - 1) / kGramBlock;

  // Each task owns a block of output columns; per element the sum still runs
  // over c in increasing order, as in the serial kernel.
#pragma omp parallel for schedule(dynamic, 1)
  for (Index blk = 0; blk < n_blocks; ++blk) {
    const Index b0 = blk * kGramBlock;
    const Index b1 = std::min(d, b0 + kGramBlock);
    for (Index c = 0; c < n_cols; ++c) {
      const double* col = m.col(c).data();
      for (Index b = b0; b < b1; ++b) {
        const double s = col[b];
        double* out = g.col(b).data();
        for (Index a = b; a < d; ++a) out[a] += s * col[a];
      }
    }
  }
}

Matrix gram_of_columns(const Eigen::Ref<const Matrix>& m) {
  Matrix g = Matrix::Zero(m.rows(), m.rows());
  add_gram_of_columns(g, m);
  mirror_lower(g);
  return g;
}

Matrix conv_relu_mean(const ImageView& images, const Eigen::Ref<const Matrix>& weights) {
  detail::check_conv_inputs(images, weights);
  const Index n_kernels = weights.rows();
  std::vector<detail::KernelTaps> taps(static_cast<std::size_t>(n_kernels));
  for (Index f = 0; f < n_kernels; ++f) taps[f] = detail::kernel_row(weights, f);

  Matrix out(images.count, n_kernels);
#pragma omp parallel for schedule(dynamic, 4)
  for (Index i = 0; i < images.count; ++i) {
    for (Index f = 0; f < n_kernels; ++f)
      out(i, f) = detail::relu_mean_response(images.image(i), images.height, images.width, taps[f]);
  }
  return out;
}

}  // namespace omp
}  // namespace preval::kernels
