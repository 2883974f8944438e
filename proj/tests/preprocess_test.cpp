#include <gtest/gtest.h>

#include <random>

#include "gsr/preprocess.hpp"

using namespace gsr;

namespace {

// Bin-mean by comparing sample times against bin edges directly in exact rationals:
// sample i (time i/fs) belongs to bin k when k*fs <= i*target < (k+1)*fs.
std::vector<double> oracle_downsample(const std::vector<double>& x, long fs, long target) {
  std::vector<double> sum, cnt;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long num = static_cast<long>(i) * target;
    const auto k = static_cast<std::size_t>(num / fs);
    if (sum.size() <= k) {
      sum.resize(k + 1, 0.0);
      cnt.resize(k + 1, 0.0);
    }
    sum[k] += x[i];
    cnt[k] += 1.0;
  }
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] /= cnt[k];
  return sum;
}

std::vector<double> oracle_moving_average(const std::vector<double>& x, std::size_t w) {
  const long half = static_cast<long>(w / 2), n = static_cast<long>(x.size());
  std::vector<double> out;
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    long count = 0;
    for (long j = i - half; j <= i + half; ++j)
      if (j >= 0 && j < n) {
        acc += x[static_cast<std::size_t>(j)];
        ++count;
      }
    out.push_back(acc / static_cast<double>(count));
  }
  return out;
}

std::vector<double> oracle_normalize(const std::vector<double>& x) {
  double lo = x[0], hi = x[0];
  for (double v : x) lo = std::min(lo, v), hi = std::max(hi, v);
  std::vector<double> out;
  for (double v : x) out.push_back(hi > lo ? (v - lo) / (hi - lo) : 0.0);
  return out;
}

std::vector<double> random_samples(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(5.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST(Downsample, ConstantStaysConstant) {
  SignalTrace t{std::vector<double>(128 * 7, 1.0), 128.0};
  auto d = downsample(t, 20.0);
  EXPECT_EQ(d.fs, 20.0);
  for (double v : d.samples) EXPECT_EQ(v, 1.0);
  EXPECT_LE(std::abs(d.duration_s() - t.duration_s()), 1.0 / 20.0);
}

TEST(Downsample, PassthroughAtOrBelowTarget) {
  SignalTrace t{{1, 2, 3, 4}, 4.0};
  auto d = downsample(t, 20.0);
  EXPECT_EQ(d.samples, t.samples);
  EXPECT_EQ(d.fs, 4.0);
  EXPECT_EQ(downsample(SignalTrace{{1, 2}, 20.0}, 20.0).samples, (std::vector<double>{1, 2}));
}

TEST(Downsample, RampMatchesBinMeanOracle) {
  std::vector<double> ramp(128);
  for (int i = 0; i < 128; ++i) ramp[static_cast<std::size_t>(i)] = i;
  auto d = downsample(SignalTrace{ramp, 128.0}, 20.0);
  auto want = oracle_downsample(ramp, 128, 20);
  ASSERT_EQ(d.samples.size(), 20u);
  ASSERT_EQ(want.size(), 20u);
  for (std::size_t k = 0; k < 20; ++k) EXPECT_NEAR(d.samples[k], want[k], 1e-12);
  EXPECT_DOUBLE_EQ(d.samples[0], 3.0);  // samples 0..6
}

TEST(Downsample, RandomIntegerRatesMatchOracle) {
  std::mt19937_64 rng(3);
  for (long fs : {21L, 64L, 100L, 128L, 700L}) {
    auto x = random_samples(rng, 3000);
    auto got = downsample(SignalTrace{x, static_cast<double>(fs)}, 20.0).samples;
    auto want = oracle_downsample(x, fs, 20);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
  }
}

TEST(Downsample, LabelsFollowBins) {
  std::vector<int> labels(128, 0);
  for (std::size_t i = 64; i < 128; ++i) labels[i] = 1;
  auto out = downsample_labels(labels, 128.0, 20.0);
  ASSERT_EQ(out.size(), 20u);
  // bin 10 covers samples 64..70 (t in [0.5, 0.55)), so it is pure; bin 9 covers 58..63.
  EXPECT_EQ(out[9], 0);
  EXPECT_EQ(out[10], 1);
  std::vector<int> mixed(128, 0);
  mixed[60] = 1;
  EXPECT_EQ(downsample_labels(mixed, 128.0, 20.0)[9], kUnlabeled);
}

TEST(MovingAverage, ImpulseSpreadsOverTwentyOne) {
  std::vector<double> x(300, 0.0);
  x[100] = 1.0;
  auto y = moving_average(SignalTrace{x, 20.0}, 1.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (i >= 90 && i <= 110)
      EXPECT_DOUBLE_EQ(y.samples[i], 1.0 / 21.0) << i;
    else
      EXPECT_EQ(y.samples[i], 0.0) << i;
  }
}

TEST(MovingAverage, ConstantAndSingleSample) {
  auto y = moving_average(SignalTrace{std::vector<double>(50, 0.25), 20.0}, 1.0);
  for (double v : y.samples) EXPECT_DOUBLE_EQ(v, 0.25);
  EXPECT_EQ(moving_average(SignalTrace{{3.0}, 20.0}, 1.0).samples, (std::vector<double>{3.0}));
}

TEST(MovingAverage, EvenWidthIsMadeOdd) {
  EXPECT_EQ(moving_average_width(1.0, 20.0), 21u);
  EXPECT_EQ(moving_average_width(1.0, 4.0), 5u);
  EXPECT_EQ(moving_average_width(1.0, 5.0), 5u);
}

TEST(MovingAverage, MatchesOracleAndIsLinear) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_samples(rng, 400), z = random_samples(rng, 400);
    const double fs = 4.0 + trial;
    auto mx = moving_average(SignalTrace{x, fs}, 1.3);
    auto want = oracle_moving_average(x, moving_average_width(1.3, fs));
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(mx.samples[i], want[i], 1e-12);

    std::vector<double> combo(400);
    for (std::size_t i = 0; i < 400; ++i) combo[i] = 2.5 * x[i] - 0.75 * z[i];
    auto mc = moving_average(SignalTrace{combo, fs}, 1.3);
    auto mz = moving_average(SignalTrace{z, fs}, 1.3);
    for (std::size_t i = 0; i < 400; ++i) EXPECT_NEAR(mc.samples[i], 2.5 * mx.samples[i] - 0.75 * mz.samples[i], 1e-11);
  }
}

TEST(MinMax, Basics) {
  EXPECT_EQ(min_max_normalize(SignalTrace{{2, 4, 6}, 1}).samples, (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(min_max_normalize(SignalTrace{{7, 7, 7}, 1}).samples, (std::vector<double>{0, 0, 0}));
  std::vector<double> unit{0, 0.3, 1, 0.25};
  EXPECT_EQ(min_max_normalize(SignalTrace{unit, 1}).samples, unit);
}

TEST(MinMax, AffineInvariance) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    auto x = random_samples(rng, 200);
    std::vector<double> y;
    const double a = std::uniform_real_distribution<double>(0.1, 50)(rng);
    const double b = std::uniform_real_distribution<double>(-10, 10)(rng);
    for (double v : x) y.push_back(a * v + b);
    auto nx = min_max_normalize(SignalTrace{x, 4});
    auto ny = min_max_normalize(SignalTrace{y, 4});
    EXPECT_EQ(*std::min_element(nx.samples.begin(), nx.samples.end()), 0.0);
    EXPECT_EQ(*std::max_element(nx.samples.begin(), nx.samples.end()), 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(nx.samples[i], ny.samples[i], 1e-12);
  }
}

TEST(Preprocess, ChainMatchesStageOracles) {
  std::mt19937_64 rng(17);
  auto x = random_samples(rng, 128 * 30);
  auto out = preprocess(SignalTrace{x, 128.0}, PreprocessConfig{});
  EXPECT_EQ(out.fs, 20.0);
  auto want = oracle_normalize(oracle_moving_average(oracle_downsample(x, 128, 20), 21));
  ASSERT_EQ(out.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_NEAR(out.samples[i], want[i], 1e-12);
    EXPECT_GE(out.samples[i], 0.0);
    EXPECT_LE(out.samples[i], 1.0);
  }
  auto again = preprocess(SignalTrace{x, 128.0}, PreprocessConfig{});
  EXPECT_EQ(again.samples, out.samples);
}

TEST(Preprocess, ConstantGivesZeros) {
  auto out = preprocess(SignalTrace{std::vector<double>(500, 3.3), 128.0}, PreprocessConfig{});
  for (double v : out.samples) EXPECT_EQ(v, 0.0);
}

TEST(Preprocess, InvalidInputs) {
  EXPECT_THROW(downsample(SignalTrace{{1.0}, 10.0}, 0.0), ConfigError);
  EXPECT_THROW(moving_average(SignalTrace{{1.0}, 10.0}, -1.0), ConfigError);
  EXPECT_THROW(min_max_normalize(SignalTrace{{}, 10.0}), DataError);
}
