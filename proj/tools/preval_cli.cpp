// Command-line front end: fit / eval / benchmark / learning-curve, plus small
// generators for synthetic and projected image datasets.
//
// Exit codes: 0 ok, 2 bad arguments, 3 data errors, 4 numeric failures.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "preval/bench.hpp"
#include "preval/data.hpp"
#include "preval/error.hpp"
#include "preval/kernels.hpp"
#include "preval/model_io.hpp"
#include "preval/preval.hpp"

namespace {

using namespace preval;

constexpr int kExitBadArgs = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::vector<double> parse_grid(const std::string& spec) {
  std::stringstream ss(spec);
  std::string lo, hi, count;
  if (!std::getline(ss, lo, ',') || !std::getline(ss, hi, ',') || !std::getline(ss, count, ',') ||
      ss.rdbuf()->in_avail() > 0)
    throw ParameterError("--lambda-grid expects LO,HI,COUNT");
  try {
    return log_lambda_grid(std::stod(lo), std::stod(hi), std::stoi(count));
  } catch (const std::logic_error&) {
    throw ParameterError("--lambda-grid expects LO,HI,COUNT");
  }
}

std::vector<Index> parse_sizes(const std::string& spec) {
  std::vector<Index> sizes;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      sizes.push_back(static_cast<Index>(std::stoll(item)));
    } catch (const std::logic_error&) {
      throw ParameterError("--sizes expects a comma-separated list of integers");
    }
  }
  if (sizes.empty()) throw ParameterError("--sizes is empty");
  return sizes;
}

std::string dataset_id(const std::string& path) { return std::filesystem::path(path).stem().string(); }

// Writes to the named file, or stdout when the name is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw DataError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

struct CommonDataArgs {
  std::string data;
  std::string label;
  std::vector<std::string> categorical;
};

void add_data_args(CLI::App* cmd, CommonDataArgs& a) {
  cmd->add_option("--data", a.data, "CSV file with a header row")->required();
  cmd->add_option("--label", a.label, "Label column (default: last column)");
  cmd->add_option("--categorical", a.categorical, "Numeric-coded columns to one-hot encode")->delimiter(',');
}

data::RawDataset load(const CommonDataArgs& a) {
  return data::load_csv(a.data, data::CsvOptions{a.label, a.categorical});
}

struct MethodArgs {
  std::string grid;
  std::string normalize = "zscore";
  std::uint64_t seed = 0;
};

void add_method_args(CLI::App* cmd, MethodArgs& a) {
  cmd->add_option("--lambda-grid", a.grid, "Penalty grid LO,HI,COUNT (log-spaced; default 1e-3,1e3,10)");
  cmd->add_option("--normalize", a.normalize, "zscore | median | none")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Seed for fold assignment and subsets")->capture_default_str();
}

bench::MethodOptions method_options(const MethodArgs& a) {
  bench::MethodOptions o;
  if (!a.grid.empty()) o.lambdas = parse_grid(a.grid);
  o.normalize = data::parse_normalization(a.normalize);
  o.seed = a.seed;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  kernels::configure_threads_from_env();

  CLI::App app{"Prevalidated ridge regression and baseline linear classifiers"};
  app.require_subcommand(1);

  // fit
  CommonDataArgs fit_data;
  MethodArgs fit_method_args;
  std::string fit_method = "preval";
  std::string fit_out;
  bool fit_keep_loocv = false;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model and write it as JSON");
  add_data_args(fit_cmd, fit_data);
  add_method_args(fit_cmd, fit_method_args);
  fit_cmd->add_option("--method", fit_method, "preval | lr | ridge_raw | ridge_naive")->capture_default_str();
  fit_cmd->add_option("--out", fit_out, "Model file to write")->required();
  fit_cmd->add_flag("--keep-loocv", fit_keep_loocv, "Store the caches needed for per-row leave-one-out models");

  // eval
  std::string eval_model, eval_data, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Score a saved model on a CSV file (one JSON line)");
  eval_cmd->add_option("--model", eval_model, "Model file")->required();
  eval_cmd->add_option("--data", eval_data, "CSV file laid out like the training file")->required();
  eval_cmd->add_option("--out", eval_out, "Output file (default stdout)");

  // benchmark
  CommonDataArgs bm_data;
  MethodArgs bm_method_args;
  std::string bm_methods = "preval,lr,ridge_raw,ridge_naive";
  int bm_folds = 5;
  bool bm_no_timing = false;
  std::string bm_out;
  auto* bm_cmd = app.add_subcommand("benchmark", "Stratified k-fold comparison, JSON lines");
  add_data_args(bm_cmd, bm_data);
  add_method_args(bm_cmd, bm_method_args);
  bm_cmd->add_option("--methods", bm_methods, "Comma-separated methods")->capture_default_str();
  bm_cmd->add_option("--folds", bm_folds, "Number of folds")->capture_default_str();
  bm_cmd->add_flag("--no-timing", bm_no_timing, "Omit fit_seconds so reruns are byte-identical");
  bm_cmd->add_option("--out", bm_out, "Output file (default stdout)");

  // learning-curve
  CommonDataArgs lc_data;
  MethodArgs lc_method_args;
  std::string lc_eval, lc_sizes, lc_methods = "preval", lc_out;
  auto* lc_cmd = app.add_subcommand("learning-curve", "Metrics over nested training subsets, CSV");
  add_data_args(lc_cmd, lc_data);
  add_method_args(lc_cmd, lc_method_args);
  lc_cmd->add_option("--eval", lc_eval, "Evaluation CSV (default: hold out a stratified fifth of --data)");
  lc_cmd->add_option("--sizes", lc_sizes, "Comma-separated training sizes")->required();
  lc_cmd->add_option("--method,--methods", lc_methods, "Comma-separated methods")->capture_default_str();
  lc_cmd->add_option("--out", lc_out, "Output file (default stdout)");

  // generate
  std::string gen_kind = "blobs", gen_out, gen_images_out;
  Index gen_n = 200, gen_p = 2, gen_k = 2, gen_side = 16;
  double gen_separation = 3.0, gen_noise = 1.0;
  std::uint64_t gen_seed = 0;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
  gen_cmd->add_option("--kind", gen_kind, "blobs | images (random-convolution features of synthetic images)")
      ->capture_default_str();
  gen_cmd->add_option("--n", gen_n, "Rows")->capture_default_str();
  gen_cmd->add_option("--p", gen_p, "Features")->capture_default_str();
  gen_cmd->add_option("--k", gen_k, "Classes")->capture_default_str();
  gen_cmd->add_option("--separation", gen_separation, "Blob center distance from the origin")->capture_default_str();
  gen_cmd->add_option("--noise", gen_noise, "Pixel noise for --kind images")->capture_default_str();
  gen_cmd->add_option("--side", gen_side, "Image side length for --kind images")->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "CSV file")->required();
  gen_cmd->add_option("--images-out", gen_images_out, "Also write the raw image grid (--kind images)");

  // project
  std::string pr_images, pr_labels, pr_out;
  Index pr_features = 256;
  std::uint64_t pr_seed = 0;
  auto* pr_cmd = app.add_subcommand("project", "Random convolutional features of a raw image grid, CSV");
  pr_cmd->add_option("--images", pr_images, "Image grid (int64 n,H,W header + float64 pixels, little-endian)")
      ->required();
  pr_cmd->add_option("--labels", pr_labels, "Text file with one label per line")->required();
  pr_cmd->add_option("--features", pr_features, "Number of random 9x9 kernels")->capture_default_str();
  pr_cmd->add_option("--seed", pr_seed, "Kernel seed")->capture_default_str();
  pr_cmd->add_option("--out", pr_out, "CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadArgs;
  }

  try {
    if (*fit_cmd) {
      const auto ds = load(fit_data);
      const ModelKind method = parse_model_kind(fit_method);
      auto options = method_options(fit_method_args);
      options.keep_loocv_caches = fit_keep_loocv;
      bench::FitSummary summary;
      io::ModelFile file{bench::fit_method(method, ds.x, ds.labels, options, &summary), ds.schema};
      bench::print_summary(std::cout, method, file.model, summary);
      io::save_model(fit_out, file);
      std::cout << "wrote " << fit_out << "\n";
    } else if (*eval_cmd) {
      const auto file = io::load_model(eval_model);
      data::RawDataset ds;
      if (file.feature_schema) {
        ds = data::load_csv(eval_data, *file.feature_schema);
      } else {
        ds = data::load_csv(eval_data, data::CsvOptions{});
      }
      if (ds.x.cols() != io::feature_count(file.model))
        throw DataError("data has " + std::to_string(ds.x.cols()) + " features, model expects " +
                        std::to_string(io::feature_count(file.model)));
      const auto m = bench::evaluate(file.model, ds.x, ds.labels);
      bench::BenchReport r{dataset_id(eval_data), io::kind_of(file.model), 0, m.zero_one_loss, m.log_loss,
                           io::fit_seconds_of(file.model), ds.x.rows(), ds.x.cols(),
                           static_cast<Index>(io::classes_of(file.model).size())};
      Output out(eval_out);
      out.stream() << bench::to_json_line(r) << "\n";
    } else if (*bm_cmd) {
      const auto ds = load(bm_data);
      bench::BenchmarkOptions options;
      options.methods = bench::parse_methods(bm_methods);
      options.folds = bm_folds;
      options.seed = bm_method_args.seed;
      options.method = method_options(bm_method_args);
      Output out(bm_out);
      bench::run_benchmark(dataset_id(bm_data.data), ds.x, ds.labels, options, [&](const bench::BenchReport& r) {
        out.stream() << bench::to_json_line(r, !bm_no_timing) << "\n";
        out.stream().flush();
      });
    } else if (*lc_cmd) {
      const auto ds = load(lc_data);
      bench::LearningCurveOptions options;
      options.sizes = parse_sizes(lc_sizes);
      options.methods = bench::parse_methods(lc_methods);
      options.seed = lc_method_args.seed;
      options.method = method_options(lc_method_args);
      std::vector<bench::CurveRow> rows;
      if (!lc_eval.empty()) {
        const auto ev = data::load_csv(lc_eval, ds.schema);
        rows = bench::run_learning_curve(ds.x, ds.labels, ev.x, ev.labels, options);
      } else {
        const auto fold = data::stratified_kfold(ds.labels, 5, options.seed);
        std::vector<Index> train, test;
        for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == 0 ? test : train).push_back(static_cast<Index>(i));
        LabelVector y_train, y_test;
        for (Index i : train) y_train.push_back(ds.labels[static_cast<std::size_t>(i)]);
        for (Index i : test) y_test.push_back(ds.labels[static_cast<std::size_t>(i)]);
        rows = bench::run_learning_curve(ds.x(train, Eigen::all), y_train, ds.x(test, Eigen::all), y_test, options);
      }
      Output out(lc_out);
      bench::write_curve_csv(out.stream(), rows);
    } else if (*gen_cmd) {
      if (gen_kind == "blobs") {
        const auto ds = data::make_blobs(gen_n, gen_p, gen_k, gen_separation, gen_seed);
        data::save_csv(gen_out, ds.x, ds.labels);
      } else if (gen_kind == "images") {
        const auto task = data::make_image_task(gen_n, gen_k, gen_side, gen_noise, gen_seed);
        if (!gen_images_out.empty()) data::save_image_grid(gen_images_out, task.images);
        data::save_csv(gen_out, data::random_conv_projection(task.images, gen_p, gen_seed + 1), task.labels);
      } else {
        throw ParameterError("unknown --kind '" + gen_kind + "' (expected blobs or images)");
      }
    } else if (*pr_cmd) {
      const auto images = data::load_image_grid(pr_images);
      std::ifstream in(pr_labels);
      if (!in) throw DataError("cannot open '" + pr_labels + "'");
      LabelVector labels;
      for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) labels.push_back(line);
      }
      if (static_cast<Index>(labels.size()) != images.count)
        throw DataError("got " + std::to_string(labels.size()) + " labels for " + std::to_string(images.count) +
                        " images");
      data::save_csv(pr_out, data::random_conv_projection(images, pr_features, pr_seed), labels);
    }
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadArgs;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
