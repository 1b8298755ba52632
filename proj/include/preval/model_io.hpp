#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include "preval/baseline.hpp"
#include "preval/data.hpp"
#include "preval/preval.hpp"

namespace preval::io {

inline constexpr int kSchemaVersion = 1;

using AnyModel = std::variant<PrevalModel, baseline::LrModel>;

// A model plus what is needed to read evaluation files the same way as the
// training file.
struct ModelFile {
  AnyModel model;
  std::optional<data::CsvSchema> feature_schema;
};

ModelKind kind_of(const AnyModel& model);
const LabelVector& classes_of(const AnyModel& model);
Index feature_count(const AnyModel& model);
double fit_seconds_of(const AnyModel& model);
Matrix predict_proba(const AnyModel& model, const Eigen::Ref<const Matrix>& x_new);
LabelVector predict(const AnyModel& model, const Eigen::Ref<const Matrix>& x_new);

// JSON document; doubles are written with round-trip precision.
std::string to_json(const ModelFile& file, int indent = 1);
ModelFile from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace preval::io
