#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "gsr/signal.hpp"

namespace gsr {

/// Direct-form IIR coefficients. `a[0]` is always 1; a[1..order] are the feedback taps.
struct FilterCoefficients {
  std::vector<double> b;
  std::vector<double> a;
  int order = 0;
  double cutoff_hz = 0.0;
  double fs = 0.0;

  double dc_gain() const {
    double nb = 0.0, na = 0.0;
    for (double v : b) nb += v;
    for (double v : a) na += v;
    return nb / na;
  }
};

namespace detail {

/// Real coefficients of prod_k (1 - r_k z^-1), highest power of z^-1 last.
inline std::vector<double> expand_roots(const std::vector<std::complex<double>>& roots) {
  std::vector<std::complex<double>> poly{1.0};
  for (const auto& r : roots) {
    poly.push_back(0.0);
    for (std::size_t i = poly.size() - 1; i > 0; --i) poly[i] -= r * poly[i - 1];
  }
  std::vector<double> out(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) out[i] = poly[i].real();
  return out;
}

}  // namespace detail

/// Butterworth low-pass: analog prototype poles mapped through the bilinear
/// transform with the cutoff pre-warped, zeros at z = -1, normalized to unit DC gain.
inline FilterCoefficients design_butterworth_lowpass(int order, double cutoff_hz, double fs) {
  if (order < 1 || order > 4) throw ConfigError("butterworth: order must be in 1..4");
  if (!(fs > 0.0)) throw ConfigError("butterworth: fs must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs / 2.0))
    throw ConfigError("butterworth: cutoff " + std::to_string(cutoff_hz) + " Hz must lie in (0, fs/2 = " +
                      std::to_string(fs / 2.0) + ")");

  const double pi = std::numbers::pi;
  const double warped = 2.0 * fs * std::tan(pi * cutoff_hz / fs);
  std::vector<std::complex<double>> poles, zeros;
  for (int k = 0; k < order; ++k) {
    const double theta = pi * (2.0 * k + order + 1) / (2.0 * order);
    const std::complex<double> s = warped * std::polar(1.0, theta);
    poles.push_back((2.0 * fs + s) / (2.0 * fs - s));
    zeros.emplace_back(-1.0, 0.0);
  }
  FilterCoefficients f;
  f.order = order;
  f.cutoff_hz = cutoff_hz;
  f.fs = fs;
  f.a = detail::expand_roots(poles);
  f.b = detail::expand_roots(zeros);
  double sa = 0.0, sb = 0.0;
  for (double v : f.a) sa += v;
  for (double v : f.b) sb += v;
  for (double& v : f.b) v *= sa / sb;
  return f;
}

/// Causal single pass with zero initial state:
/// y[n] = sum_k b[k] x[n-k] - sum_{k>=1} a[k] y[n-k], accumulated in that order.
inline SignalTrace apply_iir(const FilterCoefficients& f, const SignalTrace& trace) {
  if (std::abs(f.fs - trace.fs) > 1e-9 * trace.fs)
    throw ConfigError("apply_iir: filter designed for " + std::to_string(f.fs) + " Hz applied to a " +
                      std::to_string(trace.fs) + " Hz trace");
  const std::size_t n = trace.size();
  SignalTrace out{std::vector<double>(n, 0.0), trace.fs};
  const auto& x = trace.samples;
  auto& y = out.samples;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < f.b.size() && k <= i; ++k) acc += f.b[k] * x[i - k];
    for (std::size_t k = 1; k < f.a.size() && k <= i; ++k) acc -= f.a[k] * y[i - k];
    y[i] = acc;
  }
  return out;
}

}  // namespace gsr
