#pragma once

// Small 1-D convolutional network used as a learned feature extractor.
//
//   input (1 x L) -> [conv(k) -> relu -> maxpool(p)] x stages -> flatten -> fc -> 2 logits
//
// Convolutions are "valid" (no padding, stride 1); pooling is non-overlapping and
// drops the incomplete tail. The feature vector is the flattened output of the
// last pooling layer, channel-major: feature[c * len + u].

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gsr/ingest.hpp"
#include "gsr/signal.hpp"

namespace gsr::cnn {

struct ConvStage {
  int channels = 16;
  int kernel = 8;
  int pool = 4;

  friend bool operator==(const ConvStage&, const ConvStage&) = default;
};

struct CnnArchitecture {
  std::vector<ConvStage> stages{{16, 8, 4}, {32, 8, 4}};
  static constexpr int kClasses = 2;

  friend bool operator==(const CnnArchitecture&, const CnnArchitecture&) = default;
};

/// Per-stage lengths for an input length; throws naming the first layer whose output is empty.
struct ShapePlan {
  std::vector<std::size_t> conv_length;
  std::vector<std::size_t> pool_length;
  std::size_t feature_dim = 0;
};

inline ShapePlan plan_shapes(const CnnArchitecture& arch, std::size_t input_length) {
  if (arch.stages.empty()) throw ConfigError("cnn: architecture needs at least one conv stage");
  ShapePlan plan;
  std::size_t len = input_length;
  for (std::size_t s = 0; s < arch.stages.size(); ++s) {
    const auto& st = arch.stages[s];
    if (st.channels < 1 || st.kernel < 1 || st.pool < 1)
      throw ConfigError("cnn: stage " + std::to_string(s) + " has a non-positive size");
    if (len < static_cast<std::size_t>(st.kernel))
      throw ConfigError("cnn: conv" + std::to_string(s) + " (kernel " + std::to_string(st.kernel) +
                        ") does not fit an input of length " + std::to_string(len));
    len = len - static_cast<std::size_t>(st.kernel) + 1;
    plan.conv_length.push_back(len);
    len /= static_cast<std::size_t>(st.pool);
    if (len == 0)
      throw ConfigError("cnn: pool" + std::to_string(s) + " (width " + std::to_string(st.pool) +
                        ") leaves no output for input of length " + std::to_string(plan.conv_length.back()));
    plan.pool_length.push_back(len);
  }
  plan.feature_dim = len * static_cast<std::size_t>(arch.stages.back().channels);
  return plan;
}

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

/// Tensors in fixed order: conv{s}.weight [out, in, k], conv{s}.bias [out], ..., fc.weight [2, D], fc.bias [2].
struct CnnParameters {
  CnnArchitecture arch;
  std::size_t input_length = 0;
  std::uint64_t seed = 0;
  std::vector<Tensor> tensors;

  const Tensor& conv_weight(std::size_t s) const { return tensors[2 * s]; }
  const Tensor& conv_bias(std::size_t s) const { return tensors[2 * s + 1]; }
  const Tensor& fc_weight() const { return tensors[2 * arch.stages.size()]; }
  const Tensor& fc_bias() const { return tensors[2 * arch.stages.size() + 1]; }
  std::size_t feature_dim() const { return plan_shapes(arch, input_length).feature_dim; }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.values.size();
    return n;
  }
};

/// Gradients share the tensor layout of the parameters.
using Gradients = std::vector<std::vector<double>>;

inline Gradients zero_gradients(const CnnParameters& p) {
  Gradients g;
  for (const auto& t : p.tensors) g.emplace_back(t.values.size(), 0.0);
  return g;
}

inline CnnParameters init_cnn(const CnnArchitecture& arch, std::size_t input_length, std::uint64_t seed) {
  const ShapePlan plan = plan_shapes(arch, input_length);
  CnnParameters p;
  p.arch = arch;
  p.input_length = input_length;
  p.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto filled = [&](std::string name, std::vector<std::size_t> shape, double scale) {
    Tensor t{std::move(name), std::move(shape), {}};
    std::size_t count = 1;
    for (auto d : t.shape) count *= d;
    t.values.resize(count, 0.0);
    if (scale > 0.0)
      for (double& v : t.values) v = normal(rng) * scale;
    return t;
  };
  std::size_t in_ch = 1;
  for (std::size_t s = 0; s < arch.stages.size(); ++s) {
    const auto& st = arch.stages[s];
    const auto out = static_cast<std::size_t>(st.channels), k = static_cast<std::size_t>(st.kernel);
    const double fan_in = static_cast<double>(in_ch * k);
    p.tensors.push_back(filled("conv" + std::to_string(s) + ".weight", {out, in_ch, k}, 1.0 / std::sqrt(fan_in)));
    p.tensors.push_back(filled("conv" + std::to_string(s) + ".bias", {out}, 0.0));
    in_ch = out;
  }
  p.tensors.push_back(filled("fc.weight", {CnnArchitecture::kClasses, plan.feature_dim},
                             1.0 / std::sqrt(static_cast<double>(plan.feature_dim))));
  p.tensors.push_back(filled("fc.bias", {CnnArchitecture::kClasses}, 0.0));
  return p;
}

struct ForwardResult {
  std::vector<double> features;
  std::array<double, 2> logits{};
  std::array<double, 2> probabilities{};
};

namespace detail {

/// Intermediate activations kept for backpropagation.
struct Trace {
  std::vector<std::vector<double>> stage_input;  // [stage] channel-major, in_ch x len
  std::vector<std::vector<double>> conv_out;     // pre-activation
  std::vector<std::vector<std::size_t>> argmax;  // per pooled output, index into conv_out
  ForwardResult result;
};

inline std::array<double, 2> softmax(const std::array<double, 2>& z) {
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

inline Trace run_forward(const CnnParameters& p, std::span<const double> input) {
  if (input.size() != p.input_length)
    throw DataError("cnn: window of length " + std::to_string(input.size()) + " but model expects " +
                    std::to_string(p.input_length));
  const ShapePlan plan = plan_shapes(p.arch, p.input_length);
  Trace tr;
  std::vector<double> cur(input.begin(), input.end());
  std::size_t in_ch = 1, len = p.input_length;
  for (std::size_t s = 0; s < p.arch.stages.size(); ++s) {
    const auto& st = p.arch.stages[s];
    const auto out_ch = static_cast<std::size_t>(st.channels), k = static_cast<std::size_t>(st.kernel),
               pool = static_cast<std::size_t>(st.pool);
    const std::size_t clen = plan.conv_length[s], plen = plan.pool_length[s];
    const auto& w = p.conv_weight(s).values;
    const auto& b = p.conv_bias(s).values;

    std::vector<double> conv(out_ch * clen);
    for (std::size_t c = 0; c < out_ch; ++c) {
      double* o = conv.data() + c * clen;
      std::fill(o, o + clen, b[c]);
      for (std::size_t ci = 0; ci < in_ch; ++ci) {
        const double* x = cur.data() + ci * len;
        for (std::size_t j = 0; j < k; ++j) {
          const double wv = w[(c * in_ch + ci) * k + j];
          for (std::size_t t = 0; t < clen; ++t) o[t] += wv * x[t + j];
        }
      }
    }
    std::vector<double> pooled(out_ch * plen);
    std::vector<std::size_t> arg(out_ch * plen);
    for (std::size_t c = 0; c < out_ch; ++c)
      for (std::size_t u = 0; u < plen; ++u) {
        std::size_t best = c * clen + u * pool;
        double bv = std::max(conv[best], 0.0);
        for (std::size_t v = 1; v < pool; ++v) {
          const std::size_t idx = c * clen + u * pool + v;
          const double a = std::max(conv[idx], 0.0);
          if (a > bv) {
            bv = a;
            best = idx;
          }
        }
        pooled[c * plen + u] = bv;
        arg[c * plen + u] = best;
      }
    tr.stage_input.push_back(std::move(cur));
    tr.conv_out.push_back(std::move(conv));
    tr.argmax.push_back(std::move(arg));
    cur = std::move(pooled);
    in_ch = out_ch;
    len = plen;
  }

  const auto& fw = p.fc_weight().values;
  const auto& fb = p.fc_bias().values;
  const std::size_t d = cur.size();
  for (std::size_t c = 0; c < 2; ++c) {
    double z = fb[c];
    for (std::size_t i = 0; i < d; ++i) z += fw[c * d + i] * cur[i];
    tr.result.logits[c] = z;
  }
  tr.result.probabilities = softmax(tr.result.logits);
  tr.result.features = std::move(cur);
  return tr;
}

inline double cross_entropy(const std::array<double, 2>& logits, int label) {
  const double m = std::max(logits[0], logits[1]);
  const double lse = m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
  return lse - logits[static_cast<std::size_t>(label)];
}

/// Activation pattern (ReLU signs and pool winners); finite differences are only
/// meaningful when a perturbation leaves it unchanged.
inline std::vector<std::size_t> activation_pattern(const Trace& tr) {
  std::vector<std::size_t> sig;
  for (std::size_t s = 0; s < tr.conv_out.size(); ++s) {
    for (double v : tr.conv_out[s]) sig.push_back(v > 0.0 ? 1 : 0);
    sig.insert(sig.end(), tr.argmax[s].begin(), tr.argmax[s].end());
  }
  return sig;
}

}  // namespace detail

inline ForwardResult forward(const CnnParameters& p, std::span<const double> window) {
  return detail::run_forward(p, window).result;
}

inline void check_label(int label) {
  if (label != 0 && label != 1) throw DataError("cnn: labels must be 0 or 1");
}

/// Cross-entropy loss of one window.
inline double loss(const CnnParameters& p, std::span<const double> window, int label) {
  check_label(label);
  return detail::cross_entropy(forward(p, window).logits, label);
}

/// Accumulate d(loss)/d(params) for one window into `grad`; returns the loss.
inline double backprop(const CnnParameters& p, std::span<const double> window, int label, Gradients& grad) {
  check_label(label);
  const detail::Trace tr = detail::run_forward(p, window);
  const ShapePlan plan = plan_shapes(p.arch, p.input_length);
  const std::size_t S = p.arch.stages.size();

  std::array<double, 2> dlogits = tr.result.probabilities;
  dlogits[static_cast<std::size_t>(label)] -= 1.0;

  const auto& feat = tr.result.features;
  const std::size_t d = feat.size();
  auto& gfw = grad[2 * S];
  auto& gfb = grad[2 * S + 1];
  const auto& fw = p.fc_weight().values;
  std::vector<double> dcur(d, 0.0);
  for (std::size_t c = 0; c < 2; ++c) {
    gfb[c] += dlogits[c];
    for (std::size_t i = 0; i < d; ++i) {
      gfw[c * d + i] += dlogits[c] * feat[i];
      dcur[i] += fw[c * d + i] * dlogits[c];
    }
  }

  for (std::size_t s = S; s-- > 0;) {
    const auto& st = p.arch.stages[s];
    const auto out_ch = static_cast<std::size_t>(st.channels), k = static_cast<std::size_t>(st.kernel);
    const std::size_t in_ch = s == 0 ? 1 : static_cast<std::size_t>(p.arch.stages[s - 1].channels);
    const std::size_t in_len = s == 0 ? p.input_length : plan.pool_length[s - 1];
    const std::size_t clen = plan.conv_length[s], plen = plan.pool_length[s];
    const auto& conv = tr.conv_out[s];
    const auto& x = tr.stage_input[s];
    const auto& w = p.conv_weight(s).values;
    auto& gw = grad[2 * s];
    auto& gb = grad[2 * s + 1];

    std::vector<double> dconv(out_ch * clen, 0.0);
    for (std::size_t c = 0; c < out_ch; ++c)
      for (std::size_t u = 0; u < plen; ++u) {
        const std::size_t idx = tr.argmax[s][c * plen + u];
        if (conv[idx] > 0.0) dconv[idx] += dcur[c * plen + u];
      }

    std::vector<double> din(s == 0 ? 0 : in_ch * in_len, 0.0);
    for (std::size_t c = 0; c < out_ch; ++c) {
      const double* g = dconv.data() + c * clen;
      double bsum = 0.0;
      for (std::size_t t = 0; t < clen; ++t) bsum += g[t];
      gb[c] += bsum;
      for (std::size_t ci = 0; ci < in_ch; ++ci) {
        const double* xi = x.data() + ci * in_len;
        for (std::size_t j = 0; j < k; ++j) {
          double acc = 0.0;
          for (std::size_t t = 0; t < clen; ++t) acc += g[t] * xi[t + j];
          gw[(c * in_ch + ci) * k + j] += acc;
          if (s > 0) {
            const double wv = w[(c * in_ch + ci) * k + j];
            double* di = din.data() + ci * in_len;
            for (std::size_t t = 0; t < clen; ++t) di[t + j] += g[t] * wv;
          }
        }
      }
    }
    dcur = std::move(din);
  }
  return detail::cross_entropy(tr.result.logits, label);
}

/// Gradient of one window's loss (fresh buffer).
inline Gradients gradient(const CnnParameters& p, std::span<const double> window, int label) {
  Gradients g = zero_gradients(p);
  backprop(p, window, label, g);
  return g;
}

struct TrainingConfig {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;

  void validate() const {
    if (epochs < 1 || batch_size < 1) throw ConfigError("cnn training: epochs and batch_size must be positive");
    if (!(learning_rate >= 0.0)) throw ConfigError("cnn training: learning_rate must be >= 0");
  }
};

struct TrainingResult {
  CnnParameters params;
  std::vector<double> loss_history;  // mean loss over the training set after each epoch
};

inline double mean_loss(const CnnParameters& p, const std::vector<std::vector<double>>& windows,
                        const std::vector<int>& labels) {
  double acc = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) acc += loss(p, windows[i], labels[i]);
  return acc / static_cast<double>(windows.size());
}

/// Minibatch SGD on cross-entropy; batch order comes from a generator seeded by cfg.seed.
inline TrainingResult train(CnnParameters params, const std::vector<std::vector<double>>& windows,
                            const std::vector<int>& labels, const TrainingConfig& cfg) {
  cfg.validate();
  if (windows.size() != labels.size()) throw DataError("cnn training: windows and labels differ in count");
  bool has0 = false, has1 = false;
  for (int l : labels) {
    check_label(l);
    (l == 0 ? has0 : has1) = true;
  }
  if (!has0 || !has1) throw DataError("cnn training: need at least one window of each class");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  TrainingResult out;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      Gradients g = zero_gradients(params);
      for (std::size_t i = start; i < stop; ++i) backprop(params, windows[order[i]], labels[order[i]], g);
      const double step = cfg.learning_rate / static_cast<double>(stop - start);
      for (std::size_t t = 0; t < params.tensors.size(); ++t)
        for (std::size_t j = 0; j < g[t].size(); ++j) params.tensors[t].values[j] -= step * g[t][j];
    }
    out.loss_history.push_back(mean_loss(params, windows, labels));
  }
  out.params = std::move(params);
  return out;
}

/// Rows of learned features, one per window.
struct FeatureMatrix {
  std::size_t cols = 0;
  std::vector<std::vector<double>> rows;
};

inline FeatureMatrix extract_features(const CnnParameters& p, const std::vector<std::vector<double>>& windows) {
  FeatureMatrix m;
  m.cols = p.feature_dim();
  m.rows.reserve(windows.size());
  for (const auto& w : windows) m.rows.push_back(forward(p, w).features);
  return m;
}

using GradientFn = std::function<Gradients(const CnnParameters&, std::span<const double>, int)>;

/// Largest relative error between analytic gradients and central differences
/// (step 1e-4) over `samples` randomly chosen parameters. Parameters whose
/// perturbation changes the ReLU/pooling pattern are skipped, since the loss is
/// not differentiable across that boundary. Relative error is
/// |a - n| / max(|a|, |n|, 1e-7).
inline double numerical_gradient_check(const CnnParameters& params, std::span<const double> window, int label,
                                       std::uint64_t seed = 0, std::size_t samples = 256,
                                       const GradientFn& grad_fn = gradient) {
  const double h = 1e-4;
  const Gradients analytic = grad_fn(params, window, label);
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t t = 0; t < params.tensors.size(); ++t)
    for (std::size_t j = 0; j < params.tensors[t].values.size(); ++j) all.emplace_back(t, j);
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);

  const auto base_pattern = detail::activation_pattern(detail::run_forward(params, window));
  CnnParameters probe = params;
  double worst = 0.0;
  std::size_t checked = 0;
  for (const auto& [t, j] : all) {
    if (checked >= samples) break;
    double& v = probe.tensors[t].values[j];
    const double orig = v;
    v = orig + h;
    const auto plus = detail::run_forward(probe, window);
    v = orig - h;
    const auto minus = detail::run_forward(probe, window);
    v = orig;
    if (detail::activation_pattern(plus) != base_pattern || detail::activation_pattern(minus) != base_pattern)
      continue;
    const double numeric = (detail::cross_entropy(plus.result.logits, label) -
                            detail::cross_entropy(minus.result.logits, label)) /
                           (2.0 * h);
    const double a = analytic[t][j];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-7});
    worst = std::max(worst, rel);
    ++checked;
  }
  return worst;
}

// Model file: a line-oriented text format.
//
//   gsr-cnn 1
//   input_length <L>
//   seed <seed>
//   stages <S>
//   stage <channels> <kernel> <pool>        (S lines)
//   tensor <name> <rank> <dim0> ... <dimR-1>
//   <values, whitespace separated, shortest round-trip decimal>
//   ... one tensor block per tensor, in the fixed parameter order
inline void save_model(std::ostream& out, const CnnParameters& p) {
  out << "gsr-cnn 1\n";
  out << "input_length " << p.input_length << "\n";
  out << "seed " << p.seed << "\n";
  out << "stages " << p.arch.stages.size() << "\n";
  for (const auto& s : p.arch.stages) out << "stage " << s.channels << ' ' << s.kernel << ' ' << s.pool << "\n";
  for (const auto& t : p.tensors) {
    out << "tensor " << t.name << ' ' << t.shape.size();
    for (auto d : t.shape) out << ' ' << d;
    out << "\n";
    for (std::size_t i = 0; i < t.values.size(); ++i)
      out << format_double(t.values[i]) << ((i + 1) % 8 == 0 || i + 1 == t.values.size() ? '\n' : ' ');
  }
}

inline void save_model(const std::filesystem::path& path, const CnnParameters& p) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model " + path.string());
  save_model(out, p);
}

inline CnnParameters load_model(std::istream& in, const std::string& source) {
  auto fail = [&](const std::string& what) { throw DataError(source + ": " + what); };
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "gsr-cnn" || version != 1) fail("not a gsr-cnn v1 model file");
  CnnParameters p;
  std::size_t stages = 0;
  if (!(in >> word >> p.input_length) || word != "input_length") fail("missing input_length");
  if (!(in >> word >> p.seed) || word != "seed") fail("missing seed");
  if (!(in >> word >> stages) || word != "stages") fail("missing stages");
  p.arch.stages.clear();
  for (std::size_t s = 0; s < stages; ++s) {
    ConvStage st;
    if (!(in >> word >> st.channels >> st.kernel >> st.pool) || word != "stage") fail("bad stage line");
    p.arch.stages.push_back(st);
  }
  const CnnParameters expected = init_cnn(p.arch, p.input_length, 0);
  for (const auto& ref : expected.tensors) {
    Tensor t;
    std::size_t rank = 0;
    if (!(in >> word >> t.name >> rank) || word != "tensor") fail("missing tensor header for " + ref.name);
    t.shape.resize(rank);
    for (auto& d : t.shape)
      if (!(in >> d)) fail("bad tensor shape");
    if (t.name != ref.name || t.shape != ref.shape) fail("tensor " + t.name + " does not match the architecture");
    t.values.resize(ref.values.size());
    for (auto& v : t.values) {
      std::string tok;
      if (!(in >> tok)) fail("truncated tensor " + t.name);
      auto parsed = text::parse_double(tok);
      if (!parsed) fail("non-numeric value in tensor " + t.name);
      v = *parsed;
    }
    p.tensors.push_back(std::move(t));
  }
  return p;
}

inline CnnParameters load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model " + path.string());
  return load_model(in, path.string());
}

}  // namespace gsr::cnn
