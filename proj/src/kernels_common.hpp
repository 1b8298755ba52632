#pragma once

#include <algorithm>
#include <array>
#include <string>

#include "preval/error.hpp"
#include "preval/kernels.hpp"

namespace preval::kernels::detail {

using KernelTaps = std::array<double, kConvKernelSize * kConvKernelSize>;

inline void check_gram_target(const Matrix& g, const Eigen::Ref<const Matrix>& m) {
  if (g.rows() != m.rows() || g.cols() != m.rows())
    throw DimensionError("gram accumulator is " + std::to_string(g.rows()) + "x" +
                         std::to_string(g.cols()) + " but vectors have length " +
                         std::to_string(m.rows()));
}

inline void check_conv_inputs(const ImageView& images, const Eigen::Ref<const Matrix>& weights) {
  if (weights.cols() != kConvKernelSize * kConvKernelSize)
    throw DimensionError("convolution weights must have 81 columns (9x9 kernels)");
  if (images.height < kConvKernelSize || images.width < kConvKernelSize)
    throw DimensionError("image " + std::to_string(images.height) + "x" +
                         std::to_string(images.width) + " is smaller than the 9x9 kernel");
  if (static_cast<Index>(images.pixels.size()) != images.count * images.height * images.width)
    throw DimensionError("image buffer size does not match count x height x width");
}

inline KernelTaps kernel_row(const Eigen::Ref<const Matrix>& weights, Index f) {
  KernelTaps taps;
  for (Index t = 0; t < weights.cols(); ++t) taps[t] = weights(f, t);
  return taps;
}

// Mean over all valid positions of max(0, <kernel, patch>).
inline double relu_mean_response(const double* img, Index height, Index width,
                                 const KernelTaps& taps) {
  const Index out_h = height - kConvKernelSize + 1;
  const Index out_w = width - kConvKernelSize + 1;
  double acc = 0.0;
  for (Index y = 0; y < out_h; ++y) {
    for (Index x = 0; x < out_w; ++x) {
      double v = 0.0;
      for (Index u = 0; u < kConvKernelSize; ++u) {
        const double* row = img + (y + u) * width + x;
        const double* w = taps.data() + u * kConvKernelSize;
        for (Index t = 0; t < kConvKernelSize; ++t) v += w[t] * row[t];
      }
      acc += std::max(0.0, v);
    }
  }
  return acc / static_cast<double>(out_h * out_w);
}

}  // namespace preval::kernels::detail
