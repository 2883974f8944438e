// gsrtool: command-line front end for the GSR analysis pipeline.
//
// Exit status: 0 success, 1 usage or configuration error, 2 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsr/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageExit = 1;
constexpr int kDataExit = 2;

struct Options {
  std::string config;
  std::string in, out;
  std::vector<std::string> inputs;
  std::string model, peaks_csv, qp_trace, out_dir;
  std::vector<std::string> models;
  bool dl = false;
  bool force = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> folds;
};

gsr::PipelineConfig load(const Options& o) {
  gsr::PipelineConfig cfg = o.config.empty() ? gsr::PipelineConfig{} : gsr::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.folds) cfg.folds = *o.folds;
  gsr::validate(cfg);
  return cfg;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw gsr::DataError("cannot write " + p.string());
  return out;
}

int cmd_preprocess(const Options& o) {
  const auto cfg = load(o);
  const auto rec = gsr::preprocess(gsr::parse_recording_csv(fs::path(o.in)), cfg.preprocess);
  auto out = open_out(o.out);
  gsr::write_recording_csv(out, rec);
  return 0;
}

int cmd_decompose(const Options& o) {
  const auto cfg = load(o);
  auto solver = cfg.solver_settings();
  std::ofstream trace;
  if (!o.qp_trace.empty()) {
    trace = open_out(o.qp_trace);
    trace << "iteration,rho,primal,dual\n";
    solver.on_iteration = [&trace](const gsr::qp::IterationRecord& r) {
      trace << r.iteration << ',' << gsr::format_double(r.rho) << ',' << gsr::format_double(r.residuals.primal)
            << ',' << gsr::format_double(r.residuals.dual) << '\n';
    };
  }
  const auto a = gsr::analyze_recording(gsr::parse_recording_csv(fs::path(o.in)), cfg, false, &solver);
  if (!a.decomposition.converged())
    std::cerr << "warning: decomposition did not converge (" << gsr::qp::to_string(a.decomposition.status) << " after "
              << a.decomposition.iterations << " iterations)\n";
  auto out = open_out(o.out);
  gsr::write_decomposition_csv(out, a.preprocessed.trace, a.decomposition);
  return 0;
}

int cmd_features(const Options& o) {
  if (o.dl && o.model.empty()) throw gsr::ConfigError("--dl requires --model <file>");
  const auto cfg = load(o);
  std::optional<gsr::cnn::CnnParameters> model;
  if (o.dl) model = gsr::cnn::load_model(fs::path(o.model));
  const auto a = gsr::analyze_recording(gsr::parse_recording_csv(fs::path(o.in)), cfg, true);
  if (!a.decomposition.converged())
    std::cerr << "warning: decomposition did not converge (" << gsr::qp::to_string(a.decomposition.status) << ")\n";
  std::optional<gsr::cnn::FeatureMatrix> deep;
  if (model) {
    const auto windows = gsr::window_samples(a);
    for (const auto& w : windows)
      if (w.size() != model->input_length)
        throw gsr::DataError("model expects windows of " + std::to_string(model->input_length) + " samples, got " +
                             std::to_string(w.size()));
    deep = gsr::cnn::extract_features(*model, windows);
  }
  auto out = open_out(o.out);
  gsr::write_features_csv(out, a.windows, a.stats, deep ? &*deep : nullptr);
  if (!o.peaks_csv.empty()) {
    auto pk = open_out(o.peaks_csv);
    gsr::write_peaks_csv(pk, a.peaks);
  }
  return 0;
}

int cmd_train_cnn(const Options& o) {
  const auto cfg = load(o);
  std::vector<std::vector<double>> windows;
  std::vector<int> labels;
  for (const auto& in : o.inputs) {
    const auto a = gsr::analyze_recording(gsr::parse_recording_csv(fs::path(in)), cfg, true);
    auto w = gsr::window_samples(a);
    windows.insert(windows.end(), w.begin(), w.end());
    for (const auto& win : a.windows) labels.push_back(win.label);
  }
  if (windows.empty()) throw gsr::DataError("train-cnn: no labeled windows");
  for (const auto& w : windows)
    if (w.size() != windows.front().size()) throw gsr::DataError("train-cnn: windows of different lengths");
  const auto result =
      gsr::cnn::train(gsr::cnn::init_cnn(cfg.cnn_arch, windows.front().size(), cfg.seed), windows, labels,
                      cfg.training());
  auto out = open_out(o.out);
  gsr::cnn::save_model(out, result.params);
  std::cout << "trained on " << windows.size() << " windows, final loss "
            << gsr::format_double(result.loss_history.back()) << "\n";
  return 0;
}

std::vector<gsr::ModelSpec> parse_specs(const std::vector<std::string>& args, std::uint64_t seed) {
  std::vector<gsr::ModelSpec> specs;
  for (const auto& a : args)
    for (auto part : gsr::text::split(a, ';')) {
      const auto trimmed = gsr::text::trim(part);
      if (trimmed.empty()) continue;
      for (auto s : gsr::parse_model_spec(std::string(trimmed))) {
        s.seed = seed;
        specs.push_back(s);
      }
    }
  if (specs.empty()) throw gsr::ConfigError("--models: no model specs given");
  return specs;
}

int cmd_evaluate(const Options& o) {
  const auto cfg = load(o);
  const auto specs = o.models.empty() ? cfg.model_specs() : parse_specs(o.models, cfg.seed);
  std::vector<fs::path> paths(o.inputs.begin(), o.inputs.end());
  const auto table = gsr::read_features_csv(paths);
  const auto reports = gsr::evaluate_table(table, specs, cfg.folds, cfg.seed);
  auto out = open_out(o.out);
  out << gsr::metrics_json(reports, cfg.folds, cfg.seed, gsr::utc_timestamp()).dump(2) << "\n";
  std::cout << gsr::summary_table(reports);
  return 0;
}

int cmd_pipeline(const Options& o) {
  if (o.inputs.empty()) throw gsr::ConfigError("pipeline: no input recordings");
  const auto cfg = load(o);
  const fs::path dir(o.out_dir);
  if (fs::exists(dir) && !fs::is_empty(dir) && !o.force)
    throw gsr::ConfigError("refusing to overwrite non-empty directory " + dir.string() + " (use --force)");
  std::vector<gsr::Recording> recordings;
  for (const auto& in : o.inputs) recordings.push_back(gsr::parse_recording_csv(fs::path(in)));
  const auto artifacts = gsr::run_pipeline(recordings, cfg, gsr::utc_timestamp());
  for (const auto& w : artifacts.warnings) std::cerr << w << "\n";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw gsr::DataError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [name, content] : artifacts.files) gsr::write_text(dir / name, content);
  std::cout << artifacts.files.at("summary.txt");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GSR analysis: preprocessing, tonic/phasic decomposition, peak and CNN features, stress classifiers"};
  app.require_subcommand(1);
  const std::string keys = "\nConfiguration keys (--config file, `key = value`, `#` comments):\n" +
                           gsr::describe_config_keys();
  app.footer(keys);
  Options o;
  int (*handler)(const Options&) = nullptr;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "configuration file");
    sub->footer(keys);
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "master seed (overrides the config)"); };

  auto* pre = app.add_subcommand("preprocess", "downsample, smooth and normalize a recording");
  pre->add_option("--in", o.in, "recording CSV")->required();
  pre->add_option("--out", o.out, "output recording CSV")->required();
  add_config(pre);
  pre->callback([&] { handler = cmd_preprocess; });

  auto* dec = app.add_subcommand("decompose", "preprocess, then split into phasic, tonic, driver and residual");
  dec->add_option("--in", o.in, "recording CSV")->required();
  dec->add_option("--out", o.out, "decomposition CSV")->required();
  dec->add_option("--qp-trace", o.qp_trace, "write per-iteration solver residuals as CSV");
  add_config(dec);
  dec->callback([&] { handler = cmd_decompose; });

  auto* feat = app.add_subcommand("features", "per-window statistical (and optionally CNN) features");
  feat->add_option("--in", o.in, "labeled recording CSV")->required();
  feat->add_option("--out", o.out, "feature CSV")->required();
  feat->add_flag("--dl", o.dl, "append dl_ columns from a trained CNN");
  feat->add_option("--model", o.model, "CNN model file (see train-cnn)");
  feat->add_option("--peaks-csv", o.peaks_csv, "also write the detected peaks");
  add_config(feat);
  feat->callback([&] { handler = cmd_features; });

  auto* tr = app.add_subcommand("train-cnn", "train the CNN feature extractor on labeled recordings");
  tr->add_option("--in", o.inputs, "labeled recording CSVs")->required();
  tr->add_option("--out", o.out, "model file")->required();
  add_seed(tr);
  add_config(tr);
  tr->callback([&] { handler = cmd_train_cnn; });

  auto* ev = app.add_subcommand("evaluate", "cross-validate classifiers on feature CSVs");
  ev->add_option("--features", o.inputs, "feature CSVs")->required();
  ev->add_option("--models", o.models, "model specs, e.g. knn:k=1..10 gaussian_nb random_forest:depth=1..10");
  ev->add_option("--folds", o.folds, "number of folds (overrides the config)");
  ev->add_option("--out", o.out, "metrics JSON")->required();
  add_seed(ev);
  add_config(ev);
  ev->callback([&] { handler = cmd_evaluate; });

  auto* pl = app.add_subcommand("pipeline", "run every stage and write all artifacts to a directory");
  pl->add_option("--in", o.inputs, "labeled recording CSVs");
  pl->add_option("--out-dir", o.out_dir, "output directory")->required();
  pl->add_flag("--force", o.force, "write into a non-empty directory");
  add_seed(pl);
  add_config(pl);
  pl->callback([&] { handler = cmd_pipeline; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  try {
    return handler(o);
  } catch (const gsr::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const gsr::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataExit;
  }
}
