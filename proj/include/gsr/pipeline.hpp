#pragma once

// End-to-end orchestration and the CSV/JSON artifacts exchanged between stages.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsr/classify.hpp"
#include "gsr/cnn.hpp"
#include "gsr/config.hpp"
#include "gsr/decompose.hpp"
#include "gsr/ingest.hpp"
#include "gsr/peaks.hpp"
#include "gsr/preprocess.hpp"

namespace gsr {

struct RecordingAnalysis {
  Recording preprocessed;
  Decomposition decomposition;
  std::vector<Peak> peaks;
  std::vector<LabeledWindow> windows;  // empty unless windows were requested
  std::vector<StatFeatures> stats;     // one per window
};

/// preprocess -> decompose -> peaks, and optionally windows + statistical features.
inline RecordingAnalysis analyze_recording(const Recording& raw, const PipelineConfig& cfg, bool with_windows,
                                           const qp::QpSettings* solver = nullptr) {
  RecordingAnalysis a;
  // Checked first so an unlabeled input fails before the expensive solve.
  if (with_windows && !raw.has_labels())
    throw DataError("windows require labels (recording `" + raw.id + "` has none)");
  a.preprocessed = preprocess(raw, cfg.preprocess);
  a.decomposition = decompose(a.preprocessed.trace, cfg.decomposition, solver ? *solver : cfg.solver_settings());
  a.peaks = find_peaks(a.preprocessed.trace, a.decomposition.phasic, cfg.peaks);
  if (with_windows) {
    a.windows = segment_windows(a.preprocessed, cfg.window_s, cfg.stride_s);
    for (const auto& w : a.windows) a.stats.push_back(statistical_features(a.preprocessed.trace, a.peaks, w));
  }
  return a;
}

/// Raw preprocessed samples of each window, the CNN's input.
inline std::vector<std::vector<double>> window_samples(const RecordingAnalysis& a) {
  std::vector<std::vector<double>> out;
  const auto& s = a.preprocessed.trace.samples;
  for (const auto& w : a.windows)
    out.emplace_back(s.begin() + static_cast<std::ptrdiff_t>(w.begin), s.begin() + static_cast<std::ptrdiff_t>(w.end));
  return out;
}

// ---- CSV artifacts ----

inline void write_decomposition_csv(std::ostream& out, const SignalTrace& gsr, const Decomposition& d) {
  out << "# converged=" << (d.converged() ? "true" : "false") << " status=" << qp::to_string(d.status)
      << " iterations=" << d.iterations << "\n";
  out << "t,gsr,phasic,tonic,driver,residual\n";
  for (std::size_t i = 0; i < gsr.size(); ++i)
    out << format_double(gsr.time_at(i)) << ',' << format_double(gsr.samples[i]) << ','
        << format_double(d.phasic.samples[i]) << ',' << format_double(d.tonic.samples[i]) << ','
        << format_double(d.driver.samples[i]) << ',' << format_double(d.residual.samples[i]) << '\n';
}

inline void write_peaks_csv(std::ostream& out, const std::vector<Peak>& peaks) {
  out << "time_s,amplitude,onset_s,offset_s\n";
  for (const auto& p : peaks)
    out << format_double(p.time_s) << ',' << format_double(p.amplitude) << ',' << format_double(p.window.onset_s)
        << ',' << format_double(p.window.offset_s) << '\n';
}

inline const std::vector<std::string>& stat_feature_columns() {
  static const std::vector<std::string> cols = {"num_peaks", "mean_gsr", "max_peak_amp"};
  return cols;
}

/// `deep` may be null; otherwise it holds one row per window.
inline void write_features_csv(std::ostream& out, const std::vector<LabeledWindow>& windows,
                               const std::vector<StatFeatures>& stats, const cnn::FeatureMatrix* deep = nullptr) {
  if (deep && deep->rows.size() != windows.size())
    throw ConfigError("write_features_csv: deep feature rows do not match windows");
  out << "window_start_s,window_end_s,label";
  for (const auto& c : stat_feature_columns()) out << ',' << c;
  if (deep)
    for (std::size_t j = 0; j < deep->cols; ++j) out << ",dl_" << j;
  out << '\n';
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out << format_double(windows[i].start_s) << ',' << format_double(windows[i].end_s) << ',' << windows[i].label
        << ',' << stats[i].num_peaks << ',' << format_double(stats[i].mean_gsr) << ','
        << format_double(stats[i].max_peak_amp);
    if (deep)
      for (double v : deep->rows[i]) out << ',' << format_double(v);
    out << '\n';
  }
}

/// Feature rows pooled from one or more feature CSVs.
struct FeatureTable {
  std::vector<int> labels;
  Matrix statistical;
  Matrix deep;  // empty rows when no dl_ columns are present
  std::size_t deep_dim = 0;

  std::size_t size() const noexcept { return labels.size(); }
};

inline void read_features_csv(std::istream& in, const std::string& source, FeatureTable& table) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> deep_cols;
  auto fail = [&](const std::string& what) {
    throw DataError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = text::trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    const auto fields = text::split(sv, ',');
    if (!deep_cols) {
      static const std::vector<std::string> fixed = {"window_start_s", "window_end_s", "label", "num_peaks",
                                                     "mean_gsr",       "max_peak_amp"};
      if (fields.size() < fixed.size()) fail("expected a feature CSV header");
      for (std::size_t j = 0; j < fixed.size(); ++j)
        if (fields[j] != fixed[j]) fail("expected column `" + fixed[j] + "`");
      for (std::size_t j = fixed.size(); j < fields.size(); ++j)
        if (fields[j] != "dl_" + std::to_string(j - fixed.size())) fail("unexpected column `" + std::string(fields[j]) + "`");
      deep_cols = fields.size() - fixed.size();
      if (table.size() > 0 && *deep_cols != table.deep_dim)
        fail("dl_ column count differs from earlier feature files");
      table.deep_dim = *deep_cols;
      continue;
    }
    if (fields.size() != 6 + *deep_cols) fail("wrong number of fields");
    std::vector<double> values(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j == 2) continue;
      auto v = text::parse_double(fields[j]);
      if (!v) fail("non-numeric value `" + std::string(fields[j]) + "`");
      values[j] = *v;
    }
    auto label = text::parse_int(fields[2]);
    if (!label || (*label != 0 && *label != 1)) fail("label must be 0 or 1");
    table.labels.push_back(static_cast<int>(*label));
    table.statistical.emplace_back(values.begin() + 3, values.begin() + 6);
    table.deep.emplace_back(values.begin() + 6, values.end());
  }
  if (!deep_cols) throw DataError(source + ": empty feature file (no header)");
}

inline FeatureTable read_features_csv(const std::vector<std::filesystem::path>& paths) {
  FeatureTable table;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot open feature file " + p.string());
    read_features_csv(in, p.string(), table);
  }
  return table;
}

// ---- evaluation ----

/// Deep features learned per fold: a fresh CNN is trained on the training
/// windows only, then used to embed both training and test windows.
inline FoldFeatureFn cnn_fold_features(const std::vector<std::vector<double>>& windows, const std::vector<int>& labels,
                                       const PipelineConfig& cfg) {
  return [&windows, &labels, cfg](const std::vector<std::size_t>& tr, const std::vector<std::size_t>& te) {
    std::vector<std::vector<double>> xtr;
    std::vector<int> ytr;
    for (auto i : tr) {
      xtr.push_back(windows[i]);
      ytr.push_back(labels[i]);
    }
    auto params = cnn::init_cnn(cfg.cnn_arch, windows.front().size(), cfg.seed);
    // A fold with one class cannot be trained; the untrained network still embeds.
    if (detail::has_both_classes(ytr)) params = cnn::train(params, xtr, ytr, cfg.training()).params;
    std::vector<std::vector<double>> xte;
    for (auto i : te) xte.push_back(windows[i]);
    return FoldFeatures{cnn::extract_features(params, xtr).rows, cnn::extract_features(params, xte).rows};
  };
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Metrics document. Everything except `generated_at` is a function of the inputs.
inline nlohmann::ordered_json metrics_json(const std::vector<CvReport>& reports, int folds, std::uint64_t seed,
                                           const std::string& generated_at) {
  nlohmann::ordered_json doc;
  doc["generated_at"] = generated_at;
  doc["folds"] = folds;
  doc["seed"] = seed;
  auto& arr = doc["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.spec.params()) params[k] = v;
    if (r.spec.standardize) params["standardize"] = *r.spec.standardize;
    arr.push_back({{"model", to_string(r.spec.kind)},
                   {"label", r.spec.label()},
                   {"params", params},
                   {"feature_set", r.feature_set},
                   {"folds", r.fold_accuracy},
                   {"mean", r.mean},
                   {"std", r.std},
                   {"seed", r.seed}});
  }
  return doc;
}

/// One row per (model, feature set).
inline std::string summary_table(const std::vector<CvReport>& reports) {
  std::size_t width = 5;
  for (const auto& r : reports) width = std::max(width, r.spec.label().size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width) + 2) << "model" << std::setw(14) << "feature_set"
     << std::right << std::setw(8) << "mean" << std::setw(8) << "std" << "\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& r : reports)
    os << std::left << std::setw(static_cast<int>(width) + 2) << r.spec.label() << std::setw(14) << r.feature_set
       << std::right << std::setw(8) << r.mean << std::setw(8) << r.std << "\n";
  return os.str();
}

/// Cross-validate every spec on the statistical columns, and on the dl_ columns when present.
inline std::vector<CvReport> evaluate_table(const FeatureTable& table, const std::vector<ModelSpec>& specs, int folds,
                                            std::uint64_t seed) {
  if (table.size() < static_cast<std::size_t>(folds))
    throw DataError("evaluate: " + std::to_string(table.size()) + " windows, need at least " +
                    std::to_string(folds));
  auto reports = cross_validate(specs, table.labels, fixed_features(table.statistical), folds, seed, "statistical");
  if (table.deep_dim > 0) {
    auto deep = cross_validate(specs, table.labels, fixed_features(table.deep), folds, seed, "deep");
    reports.insert(reports.end(), deep.begin(), deep.end());
  }
  return reports;
}

// ---- pipeline ----

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

inline std::string recording_csv_string(const Recording& rec) {
  std::ostringstream os;
  write_recording_csv(os, rec);
  return os.str();
}

/// Everything `pipeline` writes, keyed by file name.
struct PipelineArtifacts {
  std::map<std::string, std::string> files;
  std::vector<CvReport> reports;
  std::vector<std::string> warnings;
};

/// Per recording: <id>.preprocessed.csv, <id>.decomposition.csv, <id>.peaks.csv and
/// <id>.features.csv (statistical columns plus dl_ columns from cnn_model.txt, a CNN
/// trained on all windows). metrics.json and summary.txt hold cross-validation over
/// the statistical set and a deep set whose CNN is retrained inside each fold.
inline PipelineArtifacts run_pipeline(const std::vector<Recording>& recordings, const PipelineConfig& cfg,
                                      const std::string& generated_at) {
  if (recordings.empty()) throw ConfigError("pipeline: no input recordings");
  validate(cfg);
  PipelineArtifacts out;
  std::vector<RecordingAnalysis> analyses;
  std::map<std::string, int> seen;
  for (const auto& rec : recordings) {
    if (seen[rec.id]++) throw ConfigError("pipeline: duplicate recording id `" + rec.id + "`");
    analyses.push_back(analyze_recording(rec, cfg, true));
    const auto& a = analyses.back();
    if (!a.decomposition.converged())
      out.warnings.push_back("warning: decomposition of `" + rec.id + "` did not converge (" +
                             qp::to_string(a.decomposition.status) + ")");
  }

  std::vector<std::vector<double>> windows;
  std::vector<int> labels;
  Matrix stat;
  for (const auto& a : analyses) {
    auto w = window_samples(a);
    windows.insert(windows.end(), w.begin(), w.end());
    for (std::size_t i = 0; i < a.windows.size(); ++i) {
      labels.push_back(a.windows[i].label);
      stat.push_back({static_cast<double>(a.stats[i].num_peaks), a.stats[i].mean_gsr, a.stats[i].max_peak_amp});
    }
  }
  if (windows.size() < static_cast<std::size_t>(cfg.folds))
    throw DataError("pipeline: " + std::to_string(windows.size()) + " labeled windows, need at least " +
                    std::to_string(cfg.folds));
  if (!detail::has_both_classes(labels)) throw DataError("pipeline: both classes must be present among the windows");
  for (const auto& w : windows)
    if (w.size() != windows.front().size())
      throw DataError("pipeline: recordings yield windows of different lengths (mixed sampling rates)");

  const auto model = cnn::train(cnn::init_cnn(cfg.cnn_arch, windows.front().size(), cfg.seed), windows, labels,
                                cfg.training())
                         .params;
  {
    std::ostringstream os;
    cnn::save_model(os, model);
    out.files["cnn_model.txt"] = os.str();
  }

  for (const auto& a : analyses) {
    const auto& id = a.preprocessed.id;
    out.files[id + ".preprocessed.csv"] = recording_csv_string(a.preprocessed);
    std::ostringstream dec, pk, ft;
    write_decomposition_csv(dec, a.preprocessed.trace, a.decomposition);
    write_peaks_csv(pk, a.peaks);
    const auto deep = cnn::extract_features(model, window_samples(a));
    write_features_csv(ft, a.windows, a.stats, &deep);
    out.files[id + ".decomposition.csv"] = dec.str();
    out.files[id + ".peaks.csv"] = pk.str();
    out.files[id + ".features.csv"] = ft.str();
  }

  const auto specs = cfg.model_specs();
  out.reports = cross_validate(specs, labels, fixed_features(stat), cfg.folds, cfg.seed, "statistical");
  auto deep = cross_validate(specs, labels, cnn_fold_features(windows, labels, cfg), cfg.folds, cfg.seed, "deep");
  out.reports.insert(out.reports.end(), deep.begin(), deep.end());
  out.files["metrics.json"] = metrics_json(out.reports, cfg.folds, cfg.seed, generated_at).dump(2) + "\n";
  out.files["summary.txt"] = summary_table(out.reports);
  return out;
}

}  // namespace gsr
