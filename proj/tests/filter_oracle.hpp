#pragma once

// Measurement and reference recurrence for the IIR filter checks.

#include <cmath>
#include <numbers>
#include <vector>

#include "gsr/filter.hpp"

namespace oracle {

// Steady-state amplitude by projecting onto sin/cos over whole periods after a transient.
inline double steady_amplitude(const gsr::FilterCoefficients& f, double freq, double fs) {
  const double pi = std::numbers::pi;
  const auto n = static_cast<std::size_t>(40 * fs);
  gsr::SignalTrace x{std::vector<double>(n), fs};
  for (std::size_t i = 0; i < n; ++i) x.samples[i] = std::sin(2 * pi * freq * static_cast<double>(i) / fs);
  auto y = apply_iir(f, x);
  const auto skip = static_cast<std::size_t>(10 * fs);
  const auto len = static_cast<std::size_t>(std::floor((n - skip) * freq / fs) * fs / freq);
  double s = 0.0, c = 0.0;
  for (std::size_t i = skip; i < skip + len; ++i) {
    const double ph = 2 * pi * freq * static_cast<double>(i) / fs;
    s += y.samples[i] * std::sin(ph);
    c += y.samples[i] * std::cos(ph);
  }
  return 2.0 / static_cast<double>(len) * std::hypot(s, c);
}

inline std::vector<double> naive_recurrence(const std::vector<double>& b, const std::vector<double>& a,
                                     const std::vector<double>& x) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    double v = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k)
      if (n >= k) v += b[k] * x[n - k];
    for (std::size_t k = 1; k < a.size(); ++k)
      if (n >= k) v -= a[k] * y[n - k];
    y[n] = v;
  }
  return y;
}

}  // namespace oracle
