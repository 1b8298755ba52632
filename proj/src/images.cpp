#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "preval/data.hpp"
#include "preval/error.hpp"

namespace preval::data {

namespace {

template <typename T>
T from_little_endian(const std::array<unsigned char, 8>& bytes) {
  std::array<unsigned char, 8> b = bytes;
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

template <typename T>
std::array<unsigned char, 8> to_little_endian(T v) {
  std::array<unsigned char, 8> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  return b;
}

std::array<unsigned char, 8> read8(std::istream& in, const char* what) {
  std::array<unsigned char, 8> b;
  if (!in.read(reinterpret_cast<char*>(b.data()), 8))
    throw DataError(std::string("image grid truncated while reading ") + what);
  return b;
}

void write8(std::ostream& out, const std::array<unsigned char, 8>& b) {
  out.write(reinterpret_cast<const char*>(b.data()), 8);
}

}  // namespace

ImageStack read_image_grid(std::istream& in) {
  const auto n = from_little_endian<std::int64_t>(read8(in, "header"));
  const auto h = from_little_endian<std::int64_t>(read8(in, "header"));
  const auto w = from_little_endian<std::int64_t>(read8(in, "header"));
  if (n < 0 || h < 0 || w < 0) throw DataError("image grid header has negative dimensions");
  ImageStack s{n, h, w, {}};
  s.pixels.resize(static_cast<std::size_t>(n * h * w));
  for (auto& px : s.pixels) px = from_little_endian<double>(read8(in, "pixels"));
  return s;
}

void write_image_grid(std::ostream& out, const ImageStack& images) {
  if (static_cast<Index>(images.pixels.size()) != images.count * images.height * images.width)
    throw DimensionError("image buffer size does not match count x height x width");
  write8(out, to_little_endian<std::int64_t>(images.count));
  write8(out, to_little_endian<std::int64_t>(images.height));
  write8(out, to_little_endian<std::int64_t>(images.width));
  for (double px : images.pixels) write8(out, to_little_endian(px));
}

ImageStack load_image_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_image_grid(in);
}

void save_image_grid(const std::filesystem::path& path, const ImageStack& images) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_image_grid(out, images);
}

Matrix random_conv_weights(Index p, std::uint64_t seed) {
  if (p < 1) throw ParameterError("projection needs at least one kernel");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  constexpr Index taps = kernels::kConvKernelSize * kernels::kConvKernelSize;
  Matrix w(p, taps);
  for (Index f = 0; f < p; ++f)
    for (Index t = 0; t < taps; ++t) w(f, t) = normal(rng);
  return w;
}

Matrix random_conv_projection(const ImageStack& images, Index p, std::uint64_t seed, Exec exec) {
  if (images.height < kernels::kConvKernelSize || images.width < kernels::kConvKernelSize)
    throw DimensionError("image " + std::to_string(images.height) + "x" + std::to_string(images.width) +
                         " is smaller than the 9x9 kernel");
  return kernels::conv_relu_mean(images.view(), random_conv_weights(p, seed), exec);
}

}  // namespace preval::data
