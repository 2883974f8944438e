#pragma once

// Stimulus-driven response detection on the phasic component.
//
//   1. low-pass the phasic trace (Butterworth, causal)
//   2. onset  = upward crossing of onset_threshold; offset = next sample at or
//      below offset_threshold (last sample if none); drop windows shorter than
//      duration_threshold_s
//   3. per window, peak amplitude = max of the preprocessed signal on
//      [onset, offset] minus its value at onset; keep if > amplitude_threshold

#include <algorithm>
#include <string>
#include <vector>

#include "gsr/filter.hpp"
#include "gsr/ingest.hpp"
#include "gsr/signal.hpp"

namespace gsr {

struct PeakConfig {
  double onset_threshold = 0.01;
  double offset_threshold = 0.0;
  double duration_threshold_s = 1.0;
  double amplitude_threshold = 0.005;
  int butterworth_order = 2;
  double cutoff_hz = 5.0;

  void validate() const {
    if (!(duration_threshold_s > 0.0)) throw ConfigError("peaks: duration_threshold_s must be positive");
    if (!(amplitude_threshold >= 0.0)) throw ConfigError("peaks: amplitude_threshold must be >= 0");
    if (!(onset_threshold > offset_threshold))
      throw ConfigError("peaks: onset_threshold must exceed offset_threshold");
    if (butterworth_order < 1 || butterworth_order > 4) throw ConfigError("peaks: butterworth_order must be 1..4");
    if (!(cutoff_hz > 0.0)) throw ConfigError("peaks: cutoff_hz must be positive");
  }

  /// The configured cutoff, clamped to 0.45 fs for slow recordings (fs <= 10 Hz)
  /// where the 5 Hz default would sit at or above Nyquist.
  double effective_cutoff_hz(double fs) const {
    if (fs <= 10.0) return std::min(cutoff_hz, 0.45 * fs);
    return cutoff_hz;
  }
};

struct ResponseWindow {
  std::size_t onset_index = 0;
  std::size_t offset_index = 0;
  double onset_s = 0.0;
  double offset_s = 0.0;

  friend bool operator==(const ResponseWindow&, const ResponseWindow&) = default;
};

struct Peak {
  std::size_t index = 0;
  double time_s = 0.0;
  double amplitude = 0.0;
  ResponseWindow window;

  friend bool operator==(const Peak&, const Peak&) = default;
};

struct StatFeatures {
  std::size_t num_peaks = 0;
  double mean_gsr = 0.0;
  double max_peak_amp = 0.0;
};

inline std::vector<ResponseWindow> detect_response_windows(const SignalTrace& phasic, const PeakConfig& cfg) {
  cfg.validate();
  const auto& x = phasic.samples;
  const std::size_t n = x.size();
  std::vector<ResponseWindow> out;
  std::size_t i = 0;
  while (i < n) {
    const bool crosses = x[i] > cfg.onset_threshold && (i == 0 || x[i - 1] <= cfg.onset_threshold);
    if (!crosses) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n && x[j] > cfg.offset_threshold) ++j;
    if (j == n) j = n - 1;
    const double onset_s = phasic.time_at(i), offset_s = phasic.time_at(j);
    // Duration from the index gap, so exact multiples of the sample period compare exactly.
    const double duration_s = static_cast<double>(j - i) / phasic.fs;
    if (j > i && duration_s >= cfg.duration_threshold_s) out.push_back({i, j, onset_s, offset_s});
    i = j + 1;
  }
  return out;
}

inline std::vector<Peak> extract_peaks(const std::vector<ResponseWindow>& windows, const SignalTrace& signal,
                                       const PeakConfig& cfg) {
  std::vector<Peak> out;
  for (const auto& w : windows) {
    if (w.onset_index > w.offset_index || w.offset_index >= signal.size())
      throw DataError("extract_peaks: window [" + std::to_string(w.onset_index) + ", " +
                      std::to_string(w.offset_index) + "] outside a signal of " + std::to_string(signal.size()) +
                      " samples");
    std::size_t best = w.onset_index;
    for (std::size_t k = w.onset_index + 1; k <= w.offset_index; ++k)
      if (signal.samples[k] > signal.samples[best]) best = k;
    const double amplitude = signal.samples[best] - signal.samples[w.onset_index];
    if (amplitude > cfg.amplitude_threshold) out.push_back({best, signal.time_at(best), amplitude, w});
  }
  return out;
}

/// Features of one analysis window from peaks detected over the whole recording.
inline StatFeatures statistical_features(const SignalTrace& signal, const std::vector<Peak>& peaks,
                                         const LabeledWindow& window) {
  if (window.begin >= window.end || window.end > signal.size())
    throw DataError("statistical_features: window outside the signal");
  StatFeatures f;
  const double anchor = signal.samples[window.begin];
  double dev = 0.0;
  for (std::size_t i = window.begin; i < window.end; ++i) dev += signal.samples[i] - anchor;
  f.mean_gsr = anchor + dev / static_cast<double>(window.end - window.begin);
  for (const auto& p : peaks) {
    if (p.index < window.begin || p.index >= window.end) continue;
    ++f.num_peaks;
    f.max_peak_amp = std::max(f.max_peak_amp, p.amplitude);
  }
  return f;
}

/// Low-pass filter the phasic trace and run window detection + peak extraction.
inline std::vector<Peak> find_peaks(const SignalTrace& signal, const SignalTrace& phasic, const PeakConfig& cfg) {
  cfg.validate();
  const auto coeffs =
      design_butterworth_lowpass(cfg.butterworth_order, cfg.effective_cutoff_hz(phasic.fs), phasic.fs);
  const SignalTrace filtered = apply_iir(coeffs, phasic);
  return extract_peaks(detect_response_windows(filtered, cfg), signal, cfg);
}

}  // namespace gsr
