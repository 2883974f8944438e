#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "filter_oracle.hpp"
#include "gsr/filter.hpp"

using namespace gsr;

using oracle::naive_recurrence;
using oracle::steady_amplitude;

TEST(Butterworth, MinusThreeDbAtCutoff) {
  auto f = design_butterworth_lowpass(2, 1.0, 20.0);
  EXPECT_NEAR(steady_amplitude(f, 1.0, 20.0), 1.0 / std::sqrt(2.0), 0.02 / std::sqrt(2.0));
}

TEST(Butterworth, TwentyDbAtFiveTimesCutoff) {
  auto f = design_butterworth_lowpass(2, 1.0, 20.0);
  EXPECT_LE(steady_amplitude(f, 5.0, 20.0), 0.1);
}

TEST(Butterworth, UnitDcGainAndSettling) {
  for (int order = 1; order <= 4; ++order)
    for (double cutoff : {0.1, 0.5, 1.0, 1.8}) {
      auto f = design_butterworth_lowpass(order, cutoff, 4.0);
      EXPECT_NEAR(f.dc_gain(), 1.0, 1e-9);
      EXPECT_EQ(f.b.size(), static_cast<std::size_t>(order + 1));
      EXPECT_EQ(f.a[0], 1.0);
      const auto n = static_cast<std::size_t>(std::ceil(20.0 / cutoff * 4.0));
      auto y = apply_iir(f, SignalTrace{std::vector<double>(n, 0.7), 4.0});
      EXPECT_NEAR(y.samples.back(), 0.7, 0.007);
    }
}

TEST(Butterworth, ImpulseResponseDecays) {
  for (int order = 1; order <= 4; ++order)
    for (double fs : {4.0, 20.0, 128.0})
      for (double rel : {0.01, 0.1, 0.25, 0.45}) {
        auto f = design_butterworth_lowpass(order, rel * fs, fs);
        std::vector<double> x(100000, 0.0);
        x[0] = 1.0;
        auto y = apply_iir(f, SignalTrace{x, fs});
        EXPECT_LT(std::abs(y.samples.back()), 1e-9) << order << " " << fs << " " << rel;
      }
}

TEST(Butterworth, RejectsBadDesigns) {
  EXPECT_THROW(design_butterworth_lowpass(2, 10.0, 20.0), ConfigError);
  EXPECT_THROW(design_butterworth_lowpass(2, 0.0, 20.0), ConfigError);
  EXPECT_THROW(design_butterworth_lowpass(5, 1.0, 20.0), ConfigError);
  EXPECT_THROW(design_butterworth_lowpass(0, 1.0, 20.0), ConfigError);
}

TEST(ApplyIir, ZeroInZeroOut) {
  auto f = design_butterworth_lowpass(2, 5.0, 20.0);
  auto y = apply_iir(f, SignalTrace{std::vector<double>(64, 0.0), 20.0});
  for (double v : y.samples) EXPECT_EQ(v, 0.0);
}

TEST(ApplyIir, BitExactAgainstNaiveRecurrence) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (int order = 1; order <= 4; ++order) {
    auto f = design_butterworth_lowpass(order, 3.0, 20.0);
    std::vector<double> x(5000);
    for (auto& v : x) v = g(rng);
    EXPECT_EQ(apply_iir(f, SignalTrace{x, 20.0}).samples, naive_recurrence(f.b, f.a, x));
  }
}

TEST(ApplyIir, RateMismatch) {
  auto f = design_butterworth_lowpass(2, 1.0, 20.0);
  EXPECT_THROW(apply_iir(f, SignalTrace{{1.0, 2.0}, 4.0}), ConfigError);
}
