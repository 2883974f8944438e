#pragma once

// Pipeline configuration: a flat `key = value` file with `#` comments.
// Absent keys keep their defaults; unknown keys are rejected.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <limits>
#include <optional>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gsr/classify.hpp"
#include "gsr/cnn.hpp"
#include "gsr/decompose.hpp"
#include "gsr/ingest.hpp"
#include "gsr/peaks.hpp"
#include "gsr/preprocess.hpp"

namespace gsr {

struct PipelineConfig {
  PreprocessConfig preprocess;
  double window_s = 60.0;
  double stride_s = 10.0;
  DecompositionConfig decomposition;
  double qp_tol = 1e-6;
  int qp_max_iter = 20000;
  PeakConfig peaks;
  cnn::CnnArchitecture cnn_arch;
  cnn::TrainingConfig cnn_training;
  int folds = 10;
  std::string models = "knn:k=1..10; gaussian_nb; random_forest:depth=1..10; linear_svm";
  std::uint64_t seed = 42;

  qp::QpSettings solver_settings() const {
    qp::QpSettings s;
    s.tol = qp_tol;
    s.max_iter = qp_max_iter;
    return s;
  }

  std::vector<ModelSpec> model_specs() const {
    std::vector<ModelSpec> out;
    for (auto part : text::split(models, ';')) {
      if (part.empty()) continue;
      for (auto s : parse_model_spec(std::string(text::trim(part)))) {
        s.seed = seed;
        out.push_back(s);
      }
    }
    if (out.empty()) throw ConfigError("models: no model specs given");
    return out;
  }

  cnn::TrainingConfig training() const {
    cnn::TrainingConfig t = cnn_training;
    t.seed = seed;
    return t;
  }
};

namespace config_detail {

inline std::string stages_to_string(const cnn::CnnArchitecture& a) {
  std::string s;
  for (std::size_t i = 0; i < a.stages.size(); ++i) {
    const auto& st = a.stages[i];
    s += (i ? "," : "") + std::to_string(st.channels) + ":" + std::to_string(st.kernel) + ":" + std::to_string(st.pool);
  }
  return s;
}

inline std::optional<cnn::CnnArchitecture> parse_stages(std::string_view v) {
  cnn::CnnArchitecture a;
  a.stages.clear();
  for (auto part : text::split(v, ',')) {
    auto f = text::split(part, ':');
    if (f.size() != 3) return std::nullopt;
    auto c = text::parse_int(f[0]), k = text::parse_int(f[1]), p = text::parse_int(f[2]);
    if (!c || !k || !p || *c < 1 || *k < 1 || *p < 1) return std::nullopt;
    a.stages.push_back({static_cast<int>(*c), static_cast<int>(*k), static_cast<int>(*p)});
  }
  if (a.stages.empty()) return std::nullopt;
  return a;
}

}  // namespace config_detail

/// One documented configuration key.
struct ConfigKey {
  std::string name;
  std::string help;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<bool(PipelineConfig&, std::string_view)> set;  // false when unparsable
  std::function<std::string(const PipelineConfig&)> check;    // constraint text when violated
};

inline const std::vector<ConfigKey>& config_keys() {
  using C = PipelineConfig;
  auto dbl = [](auto getter) {
    return [getter](C& c, std::string_view v) {
      auto d = text::parse_double(v);
      if (!d) return false;
      getter(c) = *d;
      return true;
    };
  };
  auto integer = [](auto getter) {
    return [getter](C& c, std::string_view v) {
      auto d = text::parse_int(v);
      if (!d || *d < std::numeric_limits<int>::min() || *d > std::numeric_limits<int>::max()) return false;
      getter(c) = static_cast<int>(*d);
      return true;
    };
  };
  auto show = [](auto getter) { return [getter](const C& c) { return format_double(static_cast<double>(getter(c))); }; };
  auto positive = [](auto getter) {
    return [getter](const C& c) { return getter(c) > 0 ? std::string{} : std::string("must be > 0"); };
  };
  auto nonneg = [](auto getter) {
    return [getter](const C& c) { return getter(c) >= 0 ? std::string{} : std::string("must be >= 0"); };
  };
  auto any = [](const C&) { return std::string{}; };

#define GSR_REF(expr) [](auto& c) -> auto& { return c.expr; }
  static const std::vector<ConfigKey> keys = {
      {"target_hz", "downsampling target rate in Hz (no upsampling)", show(GSR_REF(preprocess.target_hz)),
       dbl(GSR_REF(preprocess.target_hz)), positive(GSR_REF(preprocess.target_hz))},
      {"smoothing_window_s", "centered moving-average window in seconds", show(GSR_REF(preprocess.smoothing_window_s)),
       dbl(GSR_REF(preprocess.smoothing_window_s)), positive(GSR_REF(preprocess.smoothing_window_s))},
      {"window_s", "analysis window length in seconds", show(GSR_REF(window_s)), dbl(GSR_REF(window_s)),
       [](const C& c) {
         if (!(c.window_s > 0)) return std::string("must be > 0");
         return c.window_s >= c.stride_s ? std::string{} : std::string("must be >= stride_s");
       }},
      {"stride_s", "window stride in seconds", show(GSR_REF(stride_s)), dbl(GSR_REF(stride_s)),
       positive(GSR_REF(stride_s))},
      {"tau0", "slow SCR time constant in seconds", show(GSR_REF(decomposition.tau0)), dbl(GSR_REF(decomposition.tau0)),
       positive(GSR_REF(decomposition.tau0))},
      {"tau1", "fast SCR time constant in seconds (must differ from tau0)", show(GSR_REF(decomposition.tau1)),
       dbl(GSR_REF(decomposition.tau1)),
       [](const C& c) {
         if (!(c.decomposition.tau1 > 0)) return std::string("must be > 0");
         return c.decomposition.tau1 != c.decomposition.tau0 ? std::string{} : std::string("must differ from tau0");
       }},
      {"knot_spacing_s", "tonic spline knot spacing in seconds", show(GSR_REF(decomposition.knot_spacing_s)),
       dbl(GSR_REF(decomposition.knot_spacing_s)), positive(GSR_REF(decomposition.knot_spacing_s))},
      {"alpha", "driver sparsity weight", show(GSR_REF(decomposition.alpha)), dbl(GSR_REF(decomposition.alpha)),
       nonneg(GSR_REF(decomposition.alpha))},
      {"gamma", "tonic spline coefficient penalty", show(GSR_REF(decomposition.gamma)),
       dbl(GSR_REF(decomposition.gamma)), nonneg(GSR_REF(decomposition.gamma))},
      {"qp_tol", "QP solver KKT tolerance", show(GSR_REF(qp_tol)), dbl(GSR_REF(qp_tol)), positive(GSR_REF(qp_tol))},
      {"qp_max_iter", "QP solver iteration cap", show(GSR_REF(qp_max_iter)), integer(GSR_REF(qp_max_iter)),
       positive(GSR_REF(qp_max_iter))},
      {"onset_threshold", "phasic level a response must rise above", show(GSR_REF(peaks.onset_threshold)),
       dbl(GSR_REF(peaks.onset_threshold)),
       [](const C& c) {
         return c.peaks.onset_threshold > c.peaks.offset_threshold ? std::string{}
                                                                    : std::string("must exceed offset_threshold");
       }},
      {"offset_threshold", "phasic level that ends a response", show(GSR_REF(peaks.offset_threshold)),
       dbl(GSR_REF(peaks.offset_threshold)), any},
      {"duration_threshold_s", "shortest onset-to-offset span kept, seconds",
       show(GSR_REF(peaks.duration_threshold_s)), dbl(GSR_REF(peaks.duration_threshold_s)),
       positive(GSR_REF(peaks.duration_threshold_s))},
      {"amplitude_threshold", "smallest peak amplitude kept (strictly greater)",
       show(GSR_REF(peaks.amplitude_threshold)), dbl(GSR_REF(peaks.amplitude_threshold)),
       nonneg(GSR_REF(peaks.amplitude_threshold))},
      {"butterworth_order", "low-pass order applied to the phasic trace (1..4)",
       show(GSR_REF(peaks.butterworth_order)), integer(GSR_REF(peaks.butterworth_order)),
       [](const C& c) {
         return c.peaks.butterworth_order >= 1 && c.peaks.butterworth_order <= 4 ? std::string{}
                                                                                  : std::string("must be in 1..4");
       }},
      {"cutoff_hz", "low-pass cutoff in Hz (clamped to 0.45 fs when fs <= 10 Hz)", show(GSR_REF(peaks.cutoff_hz)),
       dbl(GSR_REF(peaks.cutoff_hz)), positive(GSR_REF(peaks.cutoff_hz))},
      {"cnn_stages", "CNN conv stages as channels:kernel:pool, comma separated",
       [](const C& c) { return config_detail::stages_to_string(c.cnn_arch); },
       [](C& c, std::string_view v) {
         auto a = config_detail::parse_stages(v);
         if (!a) return false;
         c.cnn_arch = *a;
         return true;
       },
       any},
      {"cnn_epochs", "CNN training epochs", show(GSR_REF(cnn_training.epochs)), integer(GSR_REF(cnn_training.epochs)),
       positive(GSR_REF(cnn_training.epochs))},
      {"cnn_batch_size", "CNN minibatch size", show(GSR_REF(cnn_training.batch_size)),
       integer(GSR_REF(cnn_training.batch_size)), positive(GSR_REF(cnn_training.batch_size))},
      {"cnn_learning_rate", "CNN SGD step size", show(GSR_REF(cnn_training.learning_rate)),
       dbl(GSR_REF(cnn_training.learning_rate)), positive(GSR_REF(cnn_training.learning_rate))},
      {"folds", "cross-validation folds", show(GSR_REF(folds)), integer(GSR_REF(folds)),
       [](const C& c) { return c.folds >= 2 ? std::string{} : std::string("must be >= 2"); }},
      {"models", "model specs separated by ';', e.g. knn:k=1..10; random_forest:depth=3,trees=100",
       [](const C& c) { return c.models; },
       [](C& c, std::string_view v) {
         c.models = std::string(v);
         return true;
       },
       [](const C& c) {
         try {
           c.model_specs();
         } catch (const ConfigError& e) {
           return std::string(e.what());
         }
         return std::string{};
       }},
      {"seed", "master seed for shuffling, initialization and cross-validation",
       [](const C& c) { return std::to_string(c.seed); },
       [](C& c, std::string_view v) {
         std::uint64_t s = 0;
         auto r = std::from_chars(v.data(), v.data() + v.size(), s);
         if (r.ec != std::errc() || r.ptr != v.data() + v.size()) return false;
         c.seed = s;
         return true;
       },
       any},
  };
#undef GSR_REF
  return keys;
}

/// Throws ConfigError naming the first key whose constraint fails.
inline void validate(const PipelineConfig& cfg) {
  for (const auto& k : config_keys())
    if (auto why = k.check(cfg); !why.empty()) throw ConfigError("config: " + k.name + " " + why);
}

inline PipelineConfig parse_config(std::istream& in, const std::string& source) {
  PipelineConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = text::trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected `key = value`");
    const std::string key{text::trim(sv.substr(0, eq))};
    std::string_view value = sv.substr(eq + 1);
    if (const auto hash = value.find('#'); hash != std::string_view::npos) value = value.substr(0, hash);
    value = text::trim(value);
    const auto& keys = config_keys();
    auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == key; });
    if (it == keys.end()) throw ConfigError(where + "unknown key `" + key + "`");
    if (!it->set(cfg, value)) throw ConfigError(where + "cannot parse `" + std::string(value) + "` for " + key);
  }
  validate(cfg);
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

/// Every key with its default value and description, one per line.
inline std::string describe_config_keys() {
  const PipelineConfig defaults;
  std::ostringstream os;
  for (const auto& k : config_keys()) os << "  " << k.name << " = " << k.get(defaults) << "\n      " << k.help << "\n";
  return os.str();
}

}  // namespace gsr
