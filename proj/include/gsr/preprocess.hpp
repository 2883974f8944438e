#pragma once

// Preprocessing chain: bin-mean downsampling, centered moving average, min-max
// normalization. All stages keep the trace uniformly sampled.

#include <algorithm>
#include <cmath>
#include <vector>

#include "gsr/signal.hpp"

namespace gsr {

namespace detail {

/// Output bin of input sample i: the k with k/target <= i/fs < (k+1)/target.
inline std::size_t bin_of(std::size_t i, double fs, double target_hz) {
  const double scaled = static_cast<double>(i) * target_hz;
  auto k = static_cast<std::size_t>(std::floor(scaled / fs));
  while (static_cast<double>(k + 1) * fs <= scaled) ++k;
  while (k > 0 && static_cast<double>(k) * fs > scaled) --k;
  return k;
}

}  // namespace detail

/// Rates inferred from text timestamps carry round-off; treat those within
/// 1e-9 relative of the target as equal to it.
inline bool at_or_below(double fs, double target_hz) { return fs <= target_hz * (1.0 + 1e-9); }

/// Mean of the input samples falling in each [k/target, (k+1)/target) bin.
/// Traces already at or below the target rate are returned unchanged.
inline SignalTrace downsample(const SignalTrace& trace, double target_hz) {
  if (!(target_hz > 0.0)) throw ConfigError("downsample: target_hz must be positive");
  require_valid(trace, "downsample");
  if (at_or_below(trace.fs, target_hz)) return trace;

  // Deviations are summed around the first sample of each bin so a constant
  // stretch averages to exactly that constant.
  const std::size_t bins = detail::bin_of(trace.size() - 1, trace.fs, target_hz) + 1;
  std::vector<double> anchor(bins, 0.0), dev(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const std::size_t k = detail::bin_of(i, trace.fs, target_hz);
    if (count[k]++ == 0) anchor[k] = trace.samples[i];
    dev[k] += trace.samples[i] - anchor[k];
  }
  SignalTrace out{std::vector<double>(bins), target_hz};
  for (std::size_t k = 0; k < bins; ++k) out.samples[k] = anchor[k] + dev[k] / static_cast<double>(count[k]);
  return out;
}

/// Labels carried through downsample(): a bin keeps its label only when every
/// input sample in it agrees, otherwise it becomes unlabeled.
inline std::vector<int> downsample_labels(const std::vector<int>& labels, double fs, double target_hz) {
  if (labels.empty() || at_or_below(fs, target_hz)) return labels;
  const std::size_t bins = detail::bin_of(labels.size() - 1, fs, target_hz) + 1;
  std::vector<int> out(bins, kUnlabeled);
  std::vector<bool> seen(bins, false), mixed(bins, false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t k = detail::bin_of(i, fs, target_hz);
    if (!seen[k]) {
      out[k] = labels[i];
      seen[k] = true;
    } else if (out[k] != labels[i]) {
      mixed[k] = true;
    }
  }
  for (std::size_t k = 0; k < bins; ++k)
    if (mixed[k]) out[k] = kUnlabeled;
  return out;
}

/// Odd window length used by moving_average for a given duration and rate.
inline std::size_t moving_average_width(double window_s, double fs) {
  auto w = static_cast<std::size_t>(std::llround(window_s * fs));
  if (w % 2 == 0) ++w;
  return w;
}

/// Centered moving average; the window shrinks to the available samples at the edges.
/// Summed as deviations from the window minimum so constants pass through exactly.
inline SignalTrace moving_average(const SignalTrace& trace, double window_s) {
  if (!(window_s > 0.0)) throw ConfigError("moving_average: window_s must be positive");
  require_valid(trace, "moving_average");
  const std::size_t half = moving_average_width(window_s, trace.fs) / 2;
  const std::size_t n = trace.size();
  SignalTrace out{std::vector<double>(n), trace.fs};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    const double anchor = *std::min_element(trace.samples.begin() + static_cast<std::ptrdiff_t>(lo),
                                            trace.samples.begin() + static_cast<std::ptrdiff_t>(hi + 1));
    double dev = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) dev += trace.samples[j] - anchor;
    out.samples[i] = anchor + dev / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// (x - min) / (max - min); a constant trace maps to zeros.
inline SignalTrace min_max_normalize(const SignalTrace& trace) {
  require_valid(trace, "min_max_normalize");
  const auto [lo_it, hi_it] = std::minmax_element(trace.samples.begin(), trace.samples.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  SignalTrace out{std::vector<double>(trace.size(), 0.0), trace.fs};
  if (span > 0.0)
    for (std::size_t i = 0; i < trace.size(); ++i) out.samples[i] = (trace.samples[i] - lo) / span;
  return out;
}

struct PreprocessConfig {
  double target_hz = 20.0;
  double smoothing_window_s = 1.0;
};

inline SignalTrace preprocess(const SignalTrace& trace, const PreprocessConfig& cfg) {
  return min_max_normalize(moving_average(downsample(trace, cfg.target_hz), cfg.smoothing_window_s));
}

/// Preprocess a whole recording, carrying labels through the downsampling step.
inline Recording preprocess(const Recording& rec, const PreprocessConfig& cfg) {
  Recording out;
  out.id = rec.id;
  out.trace = preprocess(rec.trace, cfg);
  out.labels = downsample_labels(rec.labels, rec.trace.fs, cfg.target_hz);
  return out;
}

}  // namespace gsr
