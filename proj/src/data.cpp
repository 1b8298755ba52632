#include "preval/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <unordered_map>

#include <Eigen/QR>

#include "preval/error.hpp"

namespace preval::data {

// ---------------------------------------------------------------------------
// Class encoding

Matrix EncodedTargets::indicators() const { return (signs.array() + 1.0) * 0.5; }

namespace {

EncodedTargets encode(const LabelVector& labels, LabelVector classes) {
  std::unordered_map<std::string, int> lookup;
  for (std::size_t j = 0; j < classes.size(); ++j) lookup.emplace(classes[j], static_cast<int>(j));

  EncodedTargets out;
  const Index n = static_cast<Index>(labels.size());
  const Index k = static_cast<Index>(classes.size());
  out.signs = Matrix::Constant(n, k, -1.0);
  out.index.resize(labels.size());
  for (Index i = 0; i < n; ++i) {
    const auto it = lookup.find(labels[static_cast<std::size_t>(i)]);
    if (it == lookup.end())
      throw DataError("label '" + labels[static_cast<std::size_t>(i)] + "' is not a known class");
    out.index[static_cast<std::size_t>(i)] = it->second;
    out.signs(i, it->second) = 1.0;
  }
  out.classes = std::move(classes);
  return out;
}

}  // namespace

EncodedTargets encode_one_vs_rest(const LabelVector& labels, ClassOrder order) {
  LabelVector classes;
  if (order == ClassOrder::first_appearance) {
    for (const auto& l : labels)
      if (std::find(classes.begin(), classes.end(), l) == classes.end()) classes.push_back(l);
  } else {
    classes = labels;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  }
  return encode(labels, std::move(classes));
}

EncodedTargets encode_with_classes(const LabelVector& labels, const LabelVector& classes) {
  return encode(labels, classes);
}

std::vector<int> argmax_rows(const Eigen::Ref<const Matrix>& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < scores.cols(); ++j)
      if (scores(i, j) > scores(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

LabelVector decode(const Eigen::Ref<const Matrix>& scores, const LabelVector& classes) {
  if (scores.cols() != static_cast<Index>(classes.size()))
    throw DimensionError("score columns do not match the class vocabulary");
  LabelVector out;
  out.reserve(static_cast<std::size_t>(scores.rows()));
  for (int j : argmax_rows(scores)) out.push_back(classes[static_cast<std::size_t>(j)]);
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

Matrix NormalizationStats::apply(const Eigen::Ref<const Matrix>& x) const {
  if (x.cols() != center.size())
    throw DimensionError("data has " + std::to_string(x.cols()) + " features, statistics have " +
                         std::to_string(center.size()));
  Matrix out = x.rowwise() - center.transpose();
  if (scale) out = out.array().rowwise() / scale->transpose().array();
  return out;
}

namespace {

void require_rows(const Eigen::Ref<const Matrix>& train) {
  if (train.rows() == 0) throw DimensionError("normalization statistics need at least one row");
}

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

NormalizationStats fit_mean_center(const Eigen::Ref<const Matrix>& train) {
  require_rows(train);
  return {train.colwise().mean().transpose(), std::nullopt};
}

NormalizationStats fit_zscore(const Eigen::Ref<const Matrix>& train) {
  require_rows(train);
  NormalizationStats s{train.colwise().mean().transpose(), Vector(train.cols())};
  for (Index j = 0; j < train.cols(); ++j) {
    const double var = (train.col(j).array() - s.center(j)).square().mean();
    (*s.scale)(j) = std::max(std::sqrt(var), kStdFloor);
  }
  return s;
}

NormalizationStats fit_median_center(const Eigen::Ref<const Matrix>& train) {
  require_rows(train);
  Vector center(train.cols());
  for (Index j = 0; j < train.cols(); ++j)
    center(j) = median_of(std::vector<double>(train.col(j).begin(), train.col(j).end()));
  return {center, std::nullopt};
}

NormalizationStats fit_normalization(const Eigen::Ref<const Matrix>& train, Normalization kind) {
  switch (kind) {
    case Normalization::zscore: return fit_zscore(train);
    case Normalization::median: return fit_median_center(train);
    case Normalization::none: break;
  }
  require_rows(train);
  return {Vector::Zero(train.cols()), std::nullopt};
}

NormalizedPair zscore_fit_apply(const Eigen::Ref<const Matrix>& train, const Eigen::Ref<const Matrix>& eval) {
  auto stats = fit_zscore(train);
  return {stats.apply(train), stats.apply(eval), std::move(stats)};
}

NormalizedPair median_center(const Eigen::Ref<const Matrix>& train, const Eigen::Ref<const Matrix>& eval) {
  auto stats = fit_median_center(train);
  return {stats.apply(train), stats.apply(eval), std::move(stats)};
}

Normalization parse_normalization(const std::string& name) {
  if (name == "zscore") return Normalization::zscore;
  if (name == "median") return Normalization::median;
  if (name == "none") return Normalization::none;
  throw ParameterError("unknown normalization '" + name + "' (expected zscore, median or none)");
}

std::string to_string(Normalization kind) {
  switch (kind) {
    case Normalization::zscore: return "zscore";
    case Normalization::median: return "median";
    case Normalization::none: break;
  }
  return "none";
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<int> stratified_kfold(const LabelVector& labels, int k, std::uint64_t seed) {
  if (k < 2) throw ParameterError("stratified k-fold needs k >= 2");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

  for (const auto& [label, rows] : members)
    if (rows.size() < static_cast<std::size_t>(k))
      throw StratificationError("class '" + label + "' has " + std::to_string(rows.size()) +
                                " members, fewer than " + std::to_string(k) + " folds");

  std::mt19937_64 rng(seed);
  std::vector<int> fold(labels.size(), -1);
  // Continue the round-robin across classes so fold sizes stay balanced too.
  std::size_t next = 0;
  for (auto& [label, rows] : members) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t r : rows) {
      fold[r] = static_cast<int>(next % static_cast<std::size_t>(k));
      ++next;
    }
  }
  return fold;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

Vector random_direction(Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(p);
  for (Index j = 0; j < p; ++j) v(j) = normal(rng);
  const double norm = v.norm();
  return norm > 0.0 ? Vector(v / norm) : v;
}

}  // namespace

EncodedDataset make_blobs(Index n, Index p, Index k, double separation, std::uint64_t seed) {
  if (n < 1 || p < 1 || k < 2) throw ParameterError("make_blobs needs n >= 1, p >= 1, k >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  // Orthonormal center directions when they fit, so every pair of centers is
  // separation * sqrt(2) apart; otherwise independent random directions.
  Matrix centers(k, p);
  if (k <= p) {
    Matrix g(p, k);
    for (Index j = 0; j < p; ++j)
      for (Index c = 0; c < k; ++c) g(j, c) = normal(rng);
    const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(p, k);
    centers = separation * q.transpose();
  } else {
    for (Index c = 0; c < k; ++c) centers.row(c) = separation * random_direction(p, rng).transpose();
  }

  std::vector<int> cls(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) cls[static_cast<std::size_t>(i)] = static_cast<int>(i % k);
  std::shuffle(cls.begin(), cls.end(), rng);

  EncodedDataset ds;
  ds.x.resize(n, p);
  ds.labels.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int c = cls[static_cast<std::size_t>(i)];
    for (Index j = 0; j < p; ++j) ds.x(i, j) = centers(c, j) + normal(rng);
    ds.labels.push_back(std::to_string(c));
  }
  auto enc = encode_one_vs_rest(ds.labels);
  ds.y = std::move(enc.signs);
  ds.classes = std::move(enc.classes);
  return ds;
}

ImageTask make_image_task(Index n, Index k, Index side, double noise, std::uint64_t seed) {
  if (n < 1 || k < 2 || side < kernels::kConvKernelSize)
    throw ParameterError("make_image_task needs n >= 1, k >= 2 and side >= 9");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Each template is a sum of a few Gaussian bumps of random sign.
  const Index area = side * side;
  Matrix templates = Matrix::Zero(k, area);
  constexpr int kBumps = 4;
  for (Index c = 0; c < k; ++c) {
    for (int b = 0; b < kBumps; ++b) {
      const double cy = unit(rng) * static_cast<double>(side - 1);
      const double cx = unit(rng) * static_cast<double>(side - 1);
      const double width = 1.0 + 2.0 * unit(rng);
      const double amp = normal(rng);
      for (Index y = 0; y < side; ++y)
        for (Index x = 0; x < side; ++x) {
          const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          templates(c, y * side + x) += amp * std::exp(-d2 / (2.0 * width * width));
        }
    }
  }

  std::vector<int> cls(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) cls[static_cast<std::size_t>(i)] = static_cast<int>(i % k);
  std::shuffle(cls.begin(), cls.end(), rng);

  ImageTask task;
  task.images = {n, side, side, std::vector<double>(static_cast<std::size_t>(n * area))};
  task.labels.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int c = cls[static_cast<std::size_t>(i)];
    const double gain = 0.5 + unit(rng);
    double* img = task.images.pixels.data() + i * area;
    for (Index t = 0; t < area; ++t) img[t] = gain * templates(c, t) + noise * normal(rng);
    task.labels.push_back(std::to_string(c));
  }
  return task;
}

}  // namespace preval::data
