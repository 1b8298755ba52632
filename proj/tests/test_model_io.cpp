#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "preval/bench.hpp"
#include "preval/data.hpp"
#include "preval/error.hpp"
#include "preval/model_io.hpp"

using namespace preval;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("model json: every kind round-trips predictions within 1e-12") {
  const auto d = data::make_blobs(90, 7, 3, 1.5, 1);
  const auto held = data::make_blobs(50, 7, 3, 1.5, 2);
  for (ModelKind kind : bench::all_methods()) {
    for (auto norm : {data::Normalization::none, data::Normalization::zscore}) {
      bench::MethodOptions opts;
      opts.normalize = norm;
      opts.keep_loocv_caches = kind != ModelKind::lr;
      const io::ModelFile file{bench::fit_method(kind, d.x, d.labels, opts), std::nullopt};
      const io::ModelFile back = io::from_json(io::to_json(file));
      CHECK(io::kind_of(back.model) == kind);
      CHECK(io::classes_of(back.model) == io::classes_of(file.model));
      CHECK(io::fit_seconds_of(back.model) == io::fit_seconds_of(file.model));
      CHECK(max_abs(io::predict_proba(back.model, held.x) - io::predict_proba(file.model, held.x)) <= 1e-12);
      if (const auto* pm = std::get_if<PrevalModel>(&back.model)) {
        REQUIRE(pm->caches.has_value());
        const auto& orig = std::get<PrevalModel>(file.model);
        CHECK(max_abs(loocv_coefficients(*pm, 4) - loocv_coefficients(orig, 4)) <= 1e-12);
        CHECK(pm->lambda_star == orig.lambda_star);
        CHECK(pm->c_star == orig.c_star);
      }
    }
  }
}

TEST_CASE("model json: file round trip keeps the feature schema") {
  std::istringstream csv("colour,size,label\nred,1,a\ngreen,2,b\nblue,3,a\nred,4,b\ngreen,1,a\nblue,2,b\n");
  const auto ds = data::read_csv(csv, data::CsvOptions{});
  const io::ModelFile file{fit(ds.x, ds.labels).model, ds.schema};
  const auto path = std::filesystem::temp_directory_path() / "preval_test_model.json";
  io::save_model(path, file);
  const io::ModelFile back = io::load_model(path);
  std::filesystem::remove(path);
  REQUIRE(back.feature_schema.has_value());
  CHECK(back.feature_schema->label_column == "label");
  CHECK(back.feature_schema->feature_names() == ds.schema.feature_names());
  CHECK(max_abs(io::predict_proba(back.model, ds.x) - io::predict_proba(file.model, ds.x)) <= 1e-12);
}

TEST_CASE("model json: documented fields") {
  const auto d = data::make_blobs(30, 2, 2, 3.0, 3);
  const auto doc = nlohmann::json::parse(io::to_json({fit(d.x, d.labels).model, std::nullopt}));
  for (const char* key : {"schema_version", "model_kind", "classes", "feature_center", "lambda_star", "c_star",
                          "beta", "intercepts"})
    CHECK(doc.contains(key));
  CHECK(doc["beta"].size() == 2);     // p rows
  CHECK(doc["beta"][0].size() == 2);  // k columns
  CHECK_FALSE(doc.contains("feature_scale"));
}

TEST_CASE("model json: malformed documents are data errors") {
  const auto d = data::make_blobs(30, 2, 2, 3.0, 4);
  auto doc = nlohmann::json::parse(io::to_json({fit(d.x, d.labels).model, std::nullopt}));
  CHECK_THROWS_AS(io::from_json("{not json"), DataError);
  auto wrong_version = doc;
  wrong_version["schema_version"] = 99;
  CHECK_THROWS_AS(io::from_json(wrong_version.dump()), DataError);
  auto missing = doc;
  missing.erase("beta");
  CHECK_THROWS_AS(io::from_json(missing.dump()), DataError);
  auto ragged = doc;
  ragged["beta"][0].push_back(1.0);
  CHECK_THROWS_AS(io::from_json(ragged.dump()), DataError);
  auto short_center = doc;
  short_center["feature_center"].erase(0);
  CHECK_THROWS_AS(io::from_json(short_center.dump()), DataError);
  auto wrong_type = doc;
  wrong_type["c_star"] = "big";
  CHECK_THROWS_AS(io::from_json(wrong_type.dump()), DataError);
  CHECK_THROWS_AS(io::load_model("/nonexistent/model.json"), DataError);
}
