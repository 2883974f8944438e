#pragma once

// Binary classifiers (labels 0/1) and the k-fold cross-validation harness.
// Every tie is resolved toward class 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "gsr/ingest.hpp"
#include "gsr/signal.hpp"

namespace gsr {

using Matrix = std::vector<std::vector<double>>;

enum class ModelKind { knn, gaussian_nb, random_forest, linear_svm };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::knn: return "knn";
    case ModelKind::gaussian_nb: return "gaussian_nb";
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::linear_svm: return "linear_svm";
  }
  return "?";
}

struct ModelSpec {
  ModelKind kind = ModelKind::knn;
  int k = 1;
  int max_depth = 5;
  int n_trees = 100;
  double lambda = 1e-4;
  int epochs = 100;
  std::optional<bool> standardize;  // unset: on for knn and svm, off otherwise
  std::uint64_t seed = 42;

  bool uses_standardization() const {
    return standardize.value_or(kind == ModelKind::knn || kind == ModelKind::linear_svm);
  }

  void validate() const {
    switch (kind) {
      case ModelKind::knn:
        if (k < 1 || k > 10) throw ConfigError("knn: k must be in 1..10");
        break;
      case ModelKind::random_forest:
        if (max_depth < 1 || max_depth > 10) throw ConfigError("random_forest: depth must be in 1..10");
        if (n_trees < 1) throw ConfigError("random_forest: trees must be >= 1");
        break;
      case ModelKind::linear_svm:
        if (!(lambda > 0.0)) throw ConfigError("linear_svm: lambda must be > 0");
        if (epochs < 1) throw ConfigError("linear_svm: epochs must be >= 1");
        break;
      case ModelKind::gaussian_nb: break;
    }
  }

  /// Kind-specific parameters as (name, value) pairs, in a fixed order.
  std::vector<std::pair<std::string, double>> params() const {
    std::vector<std::pair<std::string, double>> p;
    switch (kind) {
      case ModelKind::knn: p = {{"k", k}}; break;
      case ModelKind::random_forest: p = {{"depth", max_depth}, {"trees", n_trees}}; break;
      case ModelKind::linear_svm: p = {{"lambda", lambda}, {"epochs", epochs}}; break;
      case ModelKind::gaussian_nb: break;
    }
    return p;
  }

  /// Short label such as `knn(k=3)`.
  std::string label() const {
    std::string s = to_string(kind);
    const auto p = params();
    if (p.empty()) return s;
    s += '(';
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + p[i].first + "=" + format_double(p[i].second);
    return s + ')';
  }
};

/// Parse one spec such as `knn:k=1..10`, `random_forest:depth=3,trees=50` or
/// `linear_svm:lambda=1e-3`; an integer range `a..b` expands to one spec per value.
inline std::vector<ModelSpec> parse_model_spec(const std::string& text_spec) {
  const auto colon = text_spec.find(':');
  const std::string name{text::trim(text_spec.substr(0, colon))};
  ModelSpec base;
  if (name == "knn") base.kind = ModelKind::knn;
  else if (name == "gaussian_nb" || name == "nb") base.kind = ModelKind::gaussian_nb;
  else if (name == "random_forest" || name == "rf") base.kind = ModelKind::random_forest;
  else if (name == "linear_svm" || name == "svm") base.kind = ModelKind::linear_svm;
  else throw ConfigError("unknown model `" + name + "` (expected knn, gaussian_nb, random_forest, linear_svm)");

  std::vector<ModelSpec> out{base};
  if (colon == std::string::npos) {
    for (auto& s : out) s.validate();
    return out;
  }
  for (auto item : text::split(std::string_view(text_spec).substr(colon + 1), ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("model parameter `" + std::string(item) + "` needs key=value");
    const std::string key{text::trim(item.substr(0, eq))};
    const std::string_view value = text::trim(item.substr(eq + 1));
    auto bad = [&] { return ConfigError("bad value `" + std::string(value) + "` for " + name + ":" + key); };

    std::vector<double> values;
    if (const auto dots = value.find(".."); dots != std::string_view::npos) {
      auto lo = text::parse_int(value.substr(0, dots)), hi = text::parse_int(value.substr(dots + 2));
      if (!lo || !hi || *lo > *hi) throw bad();
      for (long long v = *lo; v <= *hi; ++v) values.push_back(static_cast<double>(v));
    } else {
      auto v = text::parse_double(value);
      if (!v) throw bad();
      values.push_back(*v);
    }

    auto set = [&](ModelSpec& s, double v) {
      auto as_int = [&] {
        if (v != std::floor(v)) throw bad();
        return static_cast<int>(v);
      };
      if (key == "k" && s.kind == ModelKind::knn) s.k = as_int();
      else if ((key == "depth" || key == "max_depth") && s.kind == ModelKind::random_forest) s.max_depth = as_int();
      else if ((key == "trees" || key == "n_trees") && s.kind == ModelKind::random_forest) s.n_trees = as_int();
      else if (key == "lambda" && s.kind == ModelKind::linear_svm) s.lambda = v;
      else if (key == "epochs" && s.kind == ModelKind::linear_svm) s.epochs = as_int();
      else if (key == "standardize") s.standardize = v != 0.0;
      else throw ConfigError("unknown parameter `" + key + "` for model " + name);
    };
    std::vector<ModelSpec> expanded;
    for (const auto& s : out)
      for (double v : values) {
        ModelSpec c = s;
        set(c, v);
        expanded.push_back(c);
      }
    out = std::move(expanded);
  }
  for (auto& s : out) s.validate();
  return out;
}

/// Train-fold z-scoring. Zero-variance features are centred but not scaled.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& X) {
    Standardizer s;
    const std::size_t d = X.empty() ? 0 : X[0].size();
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    const double n = static_cast<double>(X.size());
    for (std::size_t j = 0; j < d; ++j) {
      double m = 0.0;
      for (const auto& r : X) m += r[j];
      m /= n;
      double v = 0.0;
      for (const auto& r : X) v += (r[j] - m) * (r[j] - m);
      v /= n;
      s.mean[j] = m;
      if (v > 0.0) s.scale[j] = std::sqrt(v);
    }
    return s;
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / scale[j];
    return z;
  }

  Matrix apply(const Matrix& X) const {
    Matrix Z;
    Z.reserve(X.size());
    for (const auto& r : X) Z.push_back(apply(r));
    return Z;
  }
};

struct KnnState {
  Matrix X;
  std::vector<int> y;
};

struct GaussianNbState {
  std::array<std::vector<double>, 2> mean;
  std::array<std::vector<double>, 2> var;
  std::array<double, 2> log_prior{};
};

/// Flat binary tree; a node with feature < 0 is a leaf.
struct DecisionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
  };
  std::vector<Node> nodes;

  int predict(const std::vector<double>& x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].label;
  }
};

struct ForestState {
  std::vector<DecisionTree> trees;
};

struct SvmState {
  std::vector<double> w;
  double b = 0.0;
};

struct TrainedModel {
  ModelSpec spec;
  std::size_t dim = 0;
  std::optional<Standardizer> standardizer;
  std::variant<KnnState, GaussianNbState, ForestState, SvmState> state;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::size_t check_dataset(const Matrix& X, const std::vector<int>& y, const char* where) {
  if (X.size() != y.size()) throw DataError(std::string(where) + ": feature rows and labels differ in count");
  if (X.empty()) throw DataError(std::string(where) + ": no samples");
  const std::size_t d = X[0].size();
  for (const auto& r : X) {
    if (r.size() != d) throw DataError(std::string(where) + ": ragged feature matrix");
    for (double v : r)
      if (!std::isfinite(v)) throw DataError(std::string(where) + ": non-finite feature value");
  }
  for (int l : y)
    if (l != 0 && l != 1) throw DataError(std::string(where) + ": labels must be 0 or 1");
  return d;
}

inline bool has_both_classes(const std::vector<int>& y) {
  return std::find(y.begin(), y.end(), 0) != y.end() && std::find(y.begin(), y.end(), 1) != y.end();
}

inline int majority(std::size_t n0, std::size_t n1) { return n1 > n0 ? 1 : 0; }

inline double gini(std::size_t n0, std::size_t n1) {
  const double n = static_cast<double>(n0 + n1);
  if (n == 0.0) return 0.0;
  const double p0 = static_cast<double>(n0) / n, p1 = static_cast<double>(n1) / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();  // weighted child impurity
};

/// Best Gini split of `idx` on one feature; thresholds are midpoints between
/// consecutive distinct values. The first (lowest-threshold) best split wins.
inline SplitChoice best_split_on(const Matrix& X, const std::vector<int>& y, const std::vector<std::size_t>& idx,
                                 int feature) {
  const auto f = static_cast<std::size_t>(feature);
  std::vector<std::size_t> order = idx;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return X[a][f] < X[b][f]; });
  std::size_t total1 = 0;
  for (auto i : order) total1 += static_cast<std::size_t>(y[i]);
  const std::size_t total0 = order.size() - total1;
  SplitChoice best;
  std::size_t l0 = 0, l1 = 0;
  const double n = static_cast<double>(order.size());
  for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
    (y[order[pos]] ? l1 : l0) += 1;
    const double a = X[order[pos]][f], b = X[order[pos + 1]][f];
    if (!(a < b)) continue;
    const std::size_t r0 = total0 - l0, r1 = total1 - l1;
    const double w = (static_cast<double>(l0 + l1) * gini(l0, l1) + static_cast<double>(r0 + r1) * gini(r0, r1)) / n;
    if (w < best.impurity) {
      double mid = a + (b - a) / 2.0;
      if (!(mid < b)) mid = a;
      best = {feature, mid, w};
    }
  }
  return best;
}

inline int grow(DecisionTree& tree, const Matrix& X, const std::vector<int>& y, const std::vector<std::size_t>& idx,
                int depth, int max_depth, std::size_t mtry, std::mt19937_64& rng) {
  std::size_t n1 = 0;
  for (auto i : idx) n1 += static_cast<std::size_t>(y[i]);
  const std::size_t n0 = idx.size() - n1;
  const int me = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({-1, 0.0, -1, -1, majority(n0, n1)});
  if (depth >= max_depth || n0 == 0 || n1 == 0) return me;

  const std::size_t d = X[0].size();
  std::vector<int> features(d);
  std::iota(features.begin(), features.end(), 0);
  std::shuffle(features.begin(), features.end(), rng);
  // Try the first mtry candidates; if none of them separates anything, keep
  // drawing from the remaining features.
  SplitChoice best;
  for (std::size_t c = 0; c < d; ++c) {
    if (c >= mtry && best.feature >= 0) break;
    const SplitChoice s = best_split_on(X, y, idx, features[c]);
    if (s.feature >= 0 && s.impurity < best.impurity) best = s;
  }
  if (best.feature < 0) return me;

  std::vector<std::size_t> left, right;
  for (auto i : idx) (X[i][static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right).push_back(i);
  tree.nodes[static_cast<std::size_t>(me)].feature = best.feature;
  tree.nodes[static_cast<std::size_t>(me)].threshold = best.threshold;
  const int l = grow(tree, X, y, left, depth + 1, max_depth, mtry, rng);
  const int r = grow(tree, X, y, right, depth + 1, max_depth, mtry, rng);
  tree.nodes[static_cast<std::size_t>(me)].left = l;
  tree.nodes[static_cast<std::size_t>(me)].right = r;
  return me;
}

inline double log_gaussian(double x, double mean, double var) {
  const double diff = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - diff * diff / (2.0 * var);
}

}  // namespace detail

/// Fit one classifier. kNN accepts any non-empty set; the others need both classes.
inline TrainedModel fit(const ModelSpec& spec, const Matrix& X_raw, const std::vector<int>& y) {
  spec.validate();
  const std::size_t d = detail::check_dataset(X_raw, y, "fit");
  TrainedModel m;
  m.spec = spec;
  m.dim = d;
  if (spec.kind != ModelKind::knn) {
    if (X_raw.size() < 2 || !detail::has_both_classes(y))
      throw DataError("fit " + to_string(spec.kind) + ": training data must contain both classes");
  }
  Matrix Xs;
  if (spec.uses_standardization()) {
    m.standardizer = Standardizer::fit(X_raw);
    Xs = m.standardizer->apply(X_raw);
  }
  const Matrix& X = spec.uses_standardization() ? Xs : X_raw;

  switch (spec.kind) {
    case ModelKind::knn: m.state = KnnState{X, y}; break;

    case ModelKind::gaussian_nb: {
      GaussianNbState s;
      double max_var = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double mu = 0.0, v = 0.0;
        for (const auto& r : X) mu += r[j];
        mu /= static_cast<double>(X.size());
        for (const auto& r : X) v += (r[j] - mu) * (r[j] - mu);
        max_var = std::max(max_var, v / static_cast<double>(X.size()));
      }
      const double floor = std::max(1e-9 * max_var, std::numeric_limits<double>::min());
      for (int c = 0; c < 2; ++c) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < X.size(); ++i)
          if (y[i] == c) rows.push_back(i);
        const double n = static_cast<double>(rows.size());
        auto& mean = s.mean[static_cast<std::size_t>(c)];
        auto& var = s.var[static_cast<std::size_t>(c)];
        mean.assign(d, 0.0);
        var.assign(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
          for (auto i : rows) mean[j] += X[i][j];
          mean[j] /= n;
          for (auto i : rows) var[j] += (X[i][j] - mean[j]) * (X[i][j] - mean[j]);
          var[j] = std::max(var[j] / n, floor);
        }
        s.log_prior[static_cast<std::size_t>(c)] = std::log(n / static_cast<double>(X.size()));
      }
      m.state = std::move(s);
      break;
    }

    case ModelKind::random_forest: {
      ForestState s;
      const auto mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
      for (int t = 0; t < spec.n_trees; ++t) {
        std::mt19937_64 rng(detail::splitmix64(spec.seed + static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> idx(X.size());
        if (spec.n_trees > 1) {
          std::uniform_int_distribution<std::size_t> pick(0, X.size() - 1);
          for (auto& i : idx) i = pick(rng);
        } else {
          std::iota(idx.begin(), idx.end(), 0);
        }
        DecisionTree tree;
        detail::grow(tree, X, y, idx, 0, spec.max_depth, mtry, rng);
        s.trees.push_back(std::move(tree));
      }
      m.state = std::move(s);
      break;
    }

    case ModelKind::linear_svm: {
      // Pegasos: step 1/(lambda t) on the L2-regularized hinge loss; the bias is not regularized.
      SvmState s;
      s.w.assign(d, 0.0);
      std::mt19937_64 rng(spec.seed);
      std::vector<std::size_t> order(X.size());
      std::iota(order.begin(), order.end(), 0);
      double t = 0.0;
      for (int e = 0; e < spec.epochs; ++e) {
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
          t += 1.0;
          const double eta = 1.0 / (spec.lambda * t);
          const double yi = y[i] == 1 ? 1.0 : -1.0;
          double score = s.b;
          for (std::size_t j = 0; j < d; ++j) score += s.w[j] * X[i][j];
          for (auto& wj : s.w) wj *= 1.0 - eta * spec.lambda;
          if (yi * score < 1.0) {
            for (std::size_t j = 0; j < d; ++j) s.w[j] += eta * yi * X[i][j];
            s.b += eta * yi;
          }
        }
      }
      m.state = std::move(s);
      break;
    }
  }
  return m;
}

inline int predict_one(const TrainedModel& m, const std::vector<double>& x_raw) {
  if (x_raw.size() != m.dim)
    throw DataError("predict: model fit on " + std::to_string(m.dim) + " features, got " +
                    std::to_string(x_raw.size()));
  const std::vector<double> x = m.standardizer ? m.standardizer->apply(x_raw) : x_raw;

  if (const auto* s = std::get_if<KnnState>(&m.state)) {
    std::vector<std::pair<double, std::size_t>> dist(s->X.size());
    for (std::size_t i = 0; i < s->X.size(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) acc += (s->X[i][j] - x[j]) * (s->X[i][j] - x[j]);
      dist[i] = {acc, i};
    }
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(m.spec.k), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::size_t votes1 = 0;
    for (std::size_t i = 0; i < k; ++i) votes1 += static_cast<std::size_t>(s->y[dist[i].second]);
    return detail::majority(k - votes1, votes1);
  }
  if (const auto* s = std::get_if<GaussianNbState>(&m.state)) {
    std::array<double, 2> score{};
    for (std::size_t c = 0; c < 2; ++c) {
      score[c] = s->log_prior[c];
      for (std::size_t j = 0; j < x.size(); ++j) score[c] += detail::log_gaussian(x[j], s->mean[c][j], s->var[c][j]);
    }
    return score[1] > score[0] ? 1 : 0;
  }
  if (const auto* s = std::get_if<ForestState>(&m.state)) {
    std::size_t votes1 = 0;
    for (const auto& t : s->trees) votes1 += static_cast<std::size_t>(t.predict(x));
    return detail::majority(s->trees.size() - votes1, votes1);
  }
  const auto& s = std::get<SvmState>(m.state);
  double score = s.b;
  for (std::size_t j = 0; j < x.size(); ++j) score += s.w[j] * x[j];
  return score > 0.0 ? 1 : 0;
}

inline std::vector<int> predict(const TrainedModel& m, const Matrix& X) {
  std::vector<int> out;
  out.reserve(X.size());
  for (const auto& r : X) out.push_back(predict_one(m, r));
  return out;
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw DataError("accuracy: length mismatch");
  if (truth.empty()) throw DataError("accuracy: empty label vectors");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

/// Shuffle 0..n-1 with the seed and cut into `folds` contiguous blocks; the
/// first n % folds blocks get one extra sample.
inline std::vector<std::vector<std::size_t>> fold_partition(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross_validate: need at least 2 folds");
  if (n < static_cast<std::size_t>(folds))
    throw DataError("cross_validate: " + std::to_string(n) + " samples is fewer than " + std::to_string(folds) +
                    " folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto k = static_cast<std::size_t>(folds);
  std::vector<std::vector<std::size_t>> out(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return out;
}

struct CvReport {
  ModelSpec spec;
  std::string feature_set = "statistical";
  std::vector<double> fold_accuracy;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over folds
  std::uint64_t seed = 0;
};

/// Per-fold feature matrices: rows for the training indices and the test indices, in that order.
struct FoldFeatures {
  Matrix train;
  Matrix test;
};

using FoldFeatureFn =
    std::function<FoldFeatures(const std::vector<std::size_t>& train_idx, const std::vector<std::size_t>& test_idx)>;

/// Fixed features: rows are selected, nothing is learned.
inline FoldFeatureFn fixed_features(const Matrix& X) {
  return [&X](const std::vector<std::size_t>& tr, const std::vector<std::size_t>& te) {
    FoldFeatures f;
    for (auto i : tr) f.train.push_back(X[i]);
    for (auto i : te) f.test.push_back(X[i]);
    return f;
  };
}

/// Cross-validate several specs on a shared partition. `features` is called
/// once per fold, so anything it learns (e.g. a CNN) sees only training rows.
inline std::vector<CvReport> cross_validate(const std::vector<ModelSpec>& specs, const std::vector<int>& y,
                                            const FoldFeatureFn& features, int folds, std::uint64_t seed,
                                            const std::string& feature_set) {
  for (const auto& s : specs) s.validate();
  for (int l : y)
    if (l != 0 && l != 1) throw DataError("cross_validate: labels must be 0 or 1");
  if (!detail::has_both_classes(y)) throw DataError("cross_validate: both classes must be present");
  const auto parts = fold_partition(y.size(), folds, seed);

  std::vector<CvReport> reports(specs.size());
  for (std::size_t s = 0; s < specs.size(); ++s) {
    reports[s].spec = specs[s];
    reports[s].feature_set = feature_set;
    reports[s].seed = seed;
  }
  for (std::size_t f = 0; f < parts.size(); ++f) {
    std::vector<std::size_t> train_idx;
    for (std::size_t g = 0; g < parts.size(); ++g)
      if (g != f) train_idx.insert(train_idx.end(), parts[g].begin(), parts[g].end());
    std::sort(train_idx.begin(), train_idx.end());
    const auto& test_idx = parts[f];
    const FoldFeatures data = features(train_idx, test_idx);
    std::vector<int> ytr, yte;
    for (auto i : train_idx) ytr.push_back(y[i]);
    for (auto i : test_idx) yte.push_back(y[i]);

    for (std::size_t s = 0; s < specs.size(); ++s) {
      ModelSpec spec = specs[s];
      spec.seed = detail::splitmix64(seed ^ (0x51ED270B27ULL * (f + 1)));
      std::vector<int> pred;
      // A single-class training fold cannot be fit; predict that class.
      if (spec.kind != ModelKind::knn && !detail::has_both_classes(ytr)) {
        pred.assign(yte.size(), ytr.front());
      } else {
        pred = predict(fit(spec, data.train, ytr), data.test);
      }
      reports[s].fold_accuracy.push_back(accuracy(pred, yte));
    }
  }
  for (auto& r : reports) {
    const double n = static_cast<double>(r.fold_accuracy.size());
    r.mean = std::accumulate(r.fold_accuracy.begin(), r.fold_accuracy.end(), 0.0) / n;
    double v = 0.0;
    for (double a : r.fold_accuracy) v += (a - r.mean) * (a - r.mean);
    r.std = std::sqrt(v / n);
  }
  return reports;
}

inline CvReport cross_validate(const ModelSpec& spec, const Matrix& X, const std::vector<int>& y, int folds = 10,
                               std::uint64_t seed = 42) {
  detail::check_dataset(X, y, "cross_validate");
  return cross_validate(std::vector<ModelSpec>{spec}, y, fixed_features(X), folds, seed, "statistical").front();
}

}  // namespace gsr
