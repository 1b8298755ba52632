#include "preval/model_io.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "preval/error.hpp"

namespace preval::io {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) { return json(std::vector<double>(v.begin(), v.end())); }

Matrix matrix_from_json(const json& j, const char* what, Index expect_cols = -1) {
  if (!j.is_array()) throw DataError(std::string("model field '") + what + "' is not an array of rows");
  const Index rows = static_cast<Index>(j.size());
  Index cols = expect_cols;
  if (rows > 0) cols = static_cast<Index>(j.front().size());
  if (cols < 0) cols = 0;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw DataError(std::string("model field '") + what + "' has ragged rows");
    for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Vector vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string("model field '") + what + "' is not an array");
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

const json& field(const json& doc, const char* name) {
  const auto it = doc.find(name);
  if (it == doc.end()) throw DataError(std::string("model file is missing '") + name + "'");
  return *it;
}

json schema_to_json(const data::CsvSchema& schema) {
  json cols = json::array();
  for (const auto& c : schema.columns) {
    json col{{"name", c.name}, {"kind", c.kind == data::ColumnKind::numeric ? "numeric" : "categorical"}};
    if (c.kind == data::ColumnKind::categorical) col["levels"] = c.levels;
    cols.push_back(std::move(col));
  }
  return {{"label_column", schema.label_column}, {"columns", std::move(cols)}};
}

data::CsvSchema schema_from_json(const json& j) {
  data::CsvSchema schema;
  schema.label_column = field(j, "label_column").get<std::string>();
  for (const json& col : field(j, "columns")) {
    data::ColumnSpec spec;
    spec.name = field(col, "name").get<std::string>();
    const auto kind = field(col, "kind").get<std::string>();
    if (kind == "categorical") {
      spec.kind = data::ColumnKind::categorical;
      spec.levels = field(col, "levels").get<std::vector<std::string>>();
    } else if (kind != "numeric") {
      throw DataError("unknown column kind '" + kind + "' in model file");
    }
    schema.columns.push_back(std::move(spec));
  }
  return schema;
}

}  // namespace

ModelKind kind_of(const AnyModel& model) {
  if (const auto* m = std::get_if<PrevalModel>(&model)) return m->kind;
  return ModelKind::lr;
}

const LabelVector& classes_of(const AnyModel& model) {
  return std::visit([](const auto& m) -> const LabelVector& { return m.classes; }, model);
}

Index feature_count(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.feature_count(); }, model);
}

double fit_seconds_of(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.fit_seconds; }, model);
}

Matrix predict_proba(const AnyModel& model, const Eigen::Ref<const Matrix>& x_new) {
  if (const auto* m = std::get_if<PrevalModel>(&model)) return preval::predict_proba(*m, x_new);
  return baseline::predict_proba(std::get<baseline::LrModel>(model), x_new);
}

LabelVector predict(const AnyModel& model, const Eigen::Ref<const Matrix>& x_new) {
  return data::decode(predict_proba(model, x_new), classes_of(model));
}

std::string to_json(const ModelFile& file, int indent) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["model_kind"] = to_string(kind_of(file.model));
  doc["classes"] = classes_of(file.model);
  std::visit(
      [&](const auto& m) {
        doc["feature_center"] = vector_to_json(m.feature_center);
        if (m.feature_scale) doc["feature_scale"] = vector_to_json(*m.feature_scale);
        doc["beta"] = matrix_to_json(m.beta);
        doc["fit_seconds"] = m.fit_seconds;
      },
      file.model);

  if (const auto* m = std::get_if<PrevalModel>(&file.model)) {
    doc["lambda_star"] = m->lambda_star;
    doc["c_star"] = m->c_star;
    doc["intercepts"] = vector_to_json(m->intercept);
    if (m->caches) {
      doc["loocv_caches"] = {{"A_star", matrix_to_json(m->caches->A_star)},
                             {"V", matrix_to_json(m->caches->V)},
                             {"R_over", matrix_to_json(m->caches->R_over)},
                             {"Etilde_star", matrix_to_json(m->caches->Etilde_star)},
                             {"intercept_star", vector_to_json(m->caches->intercept_star)}};
    }
  } else {
    const auto& lr = std::get<baseline::LrModel>(file.model);
    doc["lambda_star"] = lr.lambda;
    doc["c_star"] = 1.0;
    doc["intercepts"] = vector_to_json(lr.intercepts);
    doc["iterations"] = lr.iterations;
    doc["converged"] = lr.converged;
  }
  if (file.feature_schema) doc["feature_schema"] = schema_to_json(*file.feature_schema);
  return doc.dump(indent);
}

ModelFile from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    const int version = field(doc, "schema_version").get<int>();
    if (version != kSchemaVersion)
      throw DataError("unsupported model schema_version " + std::to_string(version));
    const ModelKind kind = parse_model_kind(field(doc, "model_kind").get<std::string>());
    const auto classes = field(doc, "classes").get<LabelVector>();
    const Index k = static_cast<Index>(classes.size());
    Vector center = vector_from_json(field(doc, "feature_center"), "feature_center");
    std::optional<Vector> scale;
    if (doc.contains("feature_scale")) scale = vector_from_json(doc["feature_scale"], "feature_scale");
    Matrix beta = matrix_from_json(field(doc, "beta"), "beta", k);
    if (beta.cols() != k || beta.rows() != center.size() || (scale && scale->size() != center.size()))
      throw DataError("model file has inconsistent coefficient shapes");

    ModelFile file;
    if (doc.contains("feature_schema")) file.feature_schema = schema_from_json(doc["feature_schema"]);
    const double fit_seconds = doc.value("fit_seconds", 0.0);

    if (kind == ModelKind::lr) {
      baseline::LrModel m;
      m.beta = std::move(beta);
      m.intercepts = vector_from_json(field(doc, "intercepts"), "intercepts");
      if (m.intercepts.size() != k) throw DataError("model file has inconsistent intercepts");
      m.lambda = field(doc, "lambda_star").get<double>();
      m.classes = classes;
      m.feature_center = std::move(center);
      m.feature_scale = std::move(scale);
      m.iterations = doc.value("iterations", 0);
      m.converged = doc.value("converged", false);
      m.fit_seconds = fit_seconds;
      file.model = std::move(m);
    } else {
      PrevalModel m;
      m.kind = kind;
      m.beta = std::move(beta);
      m.intercept = vector_from_json(field(doc, "intercepts"), "intercepts");
      if (m.intercept.size() != k) throw DataError("model file has inconsistent intercepts");
      m.c_star = field(doc, "c_star").get<double>();
      m.lambda_star = field(doc, "lambda_star").get<double>();
      m.classes = classes;
      m.feature_center = std::move(center);
      m.feature_scale = std::move(scale);
      m.fit_seconds = fit_seconds;
      if (doc.contains("loocv_caches")) {
        const json& c = doc["loocv_caches"];
        m.caches = LoocvCaches{matrix_from_json(field(c, "A_star"), "A_star"), matrix_from_json(field(c, "V"), "V"),
                               matrix_from_json(field(c, "R_over"), "R_over"),
                               matrix_from_json(field(c, "Etilde_star"), "Etilde_star"),
                               vector_from_json(field(c, "intercept_star"), "intercept_star")};
      }
      file.model = std::move(m);
    }
    return file;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << to_json(file) << '\n';
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace preval::io
