#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gsr {

/// Thrown for bad input data (unreadable files, malformed rows, degenerate signals).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Thrown for invalid configuration or arguments supplied by the caller.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Uniformly sampled scalar time series.
struct SignalTrace {
  std::vector<double> samples;
  double fs = 1.0;  // Hz

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_s() const noexcept { return static_cast<double>(samples.size()) / fs; }
  double time_at(std::size_t i) const noexcept { return static_cast<double>(i) / fs; }
};

inline constexpr int kUnlabeled = -1;
inline constexpr int kNotStressed = 0;
inline constexpr int kStressed = 1;

/// A recording with optional per-sample labels (-1 unlabeled, 0 baseline, 1 stress).
struct Recording {
  std::string id;
  SignalTrace trace;
  std::vector<int> labels;  // empty when the source had no label column
  bool has_labels() const noexcept { return !labels.empty(); }
};

inline void require_valid(const SignalTrace& trace, const char* where) {
  if (!(trace.fs > 0.0))
    throw ConfigError(std::string(where) + ": sampling rate must be positive");
  if (trace.samples.empty())
    throw DataError(std::string(where) + ": empty trace");
}

}  // namespace gsr
