#include "kernels_common.hpp"
#include "preval/kernels.hpp"

namespace preval::kernels {

void mirror_lower(Matrix& g) {
  for (Index b = 0; b < g.cols(); ++b)
    for (Index a = b + 1; a < g.rows(); ++a) g(b, a) = g(a, b);
}

namespace serial {

void add_gram_of_columns(Matrix& g, const Eigen::Ref<const Matrix>& m) {
  detail::check_gram_target(g, m);
  const Index d = m.rows();
  for (Index c = 0; c < m.cols(); ++c) {
    const double* col = m.col(c).data();
    for (Index b = 0; b < d; ++b) {
      const double s = col[b];
      double* out = g.col(b).data();
      for (Index a = b; a < d; ++a) out[a] += s * col[a];
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
  Matrix out(images.count, weights.rows());
  for (Index i = 0; i < images.count; ++i) {
    for (Index f = 0; f < weights.rows(); ++f) {
      const auto kernel = detail::kernel_row(weights, f);
      out(i, f) = detail::relu_mean_response(images.image(i), images.height, images.width, kernel);
    }
  }
  return out;
}

}  // namespace serial
}  // namespace preval::kernels
