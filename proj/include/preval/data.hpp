#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "preval/kernels.hpp"
#include "preval/types.hpp"

namespace preval::data {

// ---------------------------------------------------------------------------
// Class encoding

enum class ClassOrder { lexicographic, first_appearance };

struct EncodedTargets {
  Matrix signs;            // n x k: +1 on the true class, -1 elsewhere
  std::vector<int> index;  // class index of every row
  LabelVector classes;

  Index class_count() const { return static_cast<Index>(classes.size()); }
  Matrix indicators() const;  // n x k, 0/1
};

EncodedTargets encode_one_vs_rest(const LabelVector& labels, ClassOrder order = ClassOrder::lexicographic);

// Encodes against a fixed vocabulary; labels outside it are a DataError.
EncodedTargets encode_with_classes(const LabelVector& labels, const LabelVector& classes);

// Per-row argmax, ties to the lowest column.
std::vector<int> argmax_rows(const Eigen::Ref<const Matrix>& scores);
LabelVector decode(const Eigen::Ref<const Matrix>& scores, const LabelVector& classes);

// ---------------------------------------------------------------------------
// Normalization. Statistics always come from training rows only.

enum class Normalization { none, zscore, median };

inline constexpr double kStdFloor = 1e-12;

struct NormalizationStats {
  Vector center;
  std::optional<Vector> scale;

  Matrix apply(const Eigen::Ref<const Matrix>& x) const;
};

NormalizationStats fit_mean_center(const Eigen::Ref<const Matrix>& train);
NormalizationStats fit_zscore(const Eigen::Ref<const Matrix>& train);
NormalizationStats fit_median_center(const Eigen::Ref<const Matrix>& train);
NormalizationStats fit_normalization(const Eigen::Ref<const Matrix>& train, Normalization kind);

struct NormalizedPair {
  Matrix train;
  Matrix eval;
  NormalizationStats stats;
};

NormalizedPair zscore_fit_apply(const Eigen::Ref<const Matrix>& train, const Eigen::Ref<const Matrix>& eval);
NormalizedPair median_center(const Eigen::Ref<const Matrix>& train, const Eigen::Ref<const Matrix>& eval);

Normalization parse_normalization(const std::string& name);
std::string to_string(Normalization kind);

// ---------------------------------------------------------------------------
// CSV

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> levels;  // categorical only, one indicator column each
};

// Describes how CSV columns map to feature columns, so evaluation files are
// laid out exactly like the training file.
struct CsvSchema {
  std::string label_column;
  std::vector<ColumnSpec> columns;

  Index width() const;
  std::vector<std::string> feature_names() const;
};

struct CsvOptions {
  std::string label_column;                  // empty: the last column
  std::vector<std::string> categorical;      // numeric-coded columns to one-hot
};

struct RawDataset {
  Matrix x;
  LabelVector labels;
  CsvSchema schema;
};

RawDataset read_csv(std::istream& in, const CsvOptions& options);
RawDataset read_csv(std::istream& in, const CsvSchema& schema);
RawDataset load_csv(const std::filesystem::path& path, const CsvOptions& options);
RawDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

void write_csv(std::ostream& out, const Eigen::Ref<const Matrix>& x, const LabelVector& labels,
               const std::string& label_column = "label");
void save_csv(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& x,
              const LabelVector& labels, const std::string& label_column = "label");

// ---------------------------------------------------------------------------
// Splitting

// Fold id in [0, k) for every row.
std::vector<int> stratified_kfold(const LabelVector& labels, int k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Images and random convolutional features

struct ImageStack {
  Index count = 0;
  Index height = 0;
  Index width = 0;
  std::vector<double> pixels;  // row-major, image after image

  kernels::ImageView view() const { return {pixels, count, height, width}; }
};

// Raw grid format: three little-endian int64 (n, H, W) followed by n*H*W
// little-endian float64 values.
ImageStack read_image_grid(std::istream& in);
void write_image_grid(std::ostream& out, const ImageStack& images);
ImageStack load_image_grid(const std::filesystem::path& path);
void save_image_grid(const std::filesystem::path& path, const ImageStack& images);

// p x 81 matrix of unit-normal 9x9 kernel weights.
Matrix random_conv_weights(Index p, std::uint64_t seed);

// One feature per random 9x9 kernel: valid-mode convolution, ReLU, global
// average pooling. No bias.
Matrix random_conv_projection(const ImageStack& images, Index p, std::uint64_t seed,
                              Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------
// Synthetic data

struct EncodedDataset {
  Matrix x;
  Matrix y;  // one-vs-rest signs
  LabelVector labels;
  LabelVector classes;
  std::optional<NormalizationStats> stats;
};

// k isotropic unit-variance Gaussian clusters whose centers sit at distance
// `separation` from the origin in random directions. Labels are "0".."k-1",
// balanced to within one.
EncodedDataset make_blobs(Index n, Index p, Index k, double separation, std::uint64_t seed);

struct ImageTask {
  ImageStack images;
  LabelVector labels;
};

// k random smooth class templates on a side x side grid; each image is a
// randomly scaled template plus pixel noise.
ImageTask make_image_task(Index n, Index k, Index side, double noise, std::uint64_t seed);

}  // namespace preval::data
