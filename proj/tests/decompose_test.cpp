#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <random>

#include "eda_synth.hpp"
#include "gsr/decompose.hpp"

using namespace gsr;

namespace {

void expect_reconstruction(const SignalTrace& y, const Decomposition& d) {
  ASSERT_EQ(d.phasic.size(), y.size());
  ASSERT_EQ(d.tonic.size(), y.size());
  ASSERT_EQ(d.driver.size(), y.size());
  ASSERT_EQ(d.residual.size(), y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    ASSERT_EQ(d.phasic.samples[i] + d.tonic.samples[i] + d.residual.samples[i], y.samples[i]) << i;
}

// Indices of the `count` largest strict local maxima.
std::vector<std::size_t> top_local_maxima(const std::vector<double>& x, std::size_t count) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 1; i + 1 < x.size(); ++i)
    if (x[i] > x[i - 1] && x[i] >= x[i + 1]) idx.push_back(i);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });
  idx.resize(std::min(count, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::size_t count_above(const std::vector<double>& x, double level) {
  return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [&](double v) { return v > level; }));
}

}  // namespace

TEST(CvxEdaModel, ShapesForHundredSamplesAtFourHz) {
  SignalTrace tr{std::vector<double>(100, 0.3), 4.0};
  auto m = build_cvxeda_model(tr, DecompositionConfig{});
  // knots every 40 samples at -40, 0, 40, 80, 120, 160
  EXPECT_EQ(knot_interval_samples(10.0, 4.0), 40);
  EXPECT_EQ(m.knots, 6);
  EXPECT_EQ(m.num_variables(), 100 + 6 + 2);
  EXPECT_EQ(m.program.P.rows(), 108);
  EXPECT_EQ(m.program.G.rows(), 100);
}

TEST(CvxEdaModel, OperatorsAreThreeTapBanded) {
  SignalTrace tr{std::vector<double>(300, 0.3), 20.0};
  auto m = build_cvxeda_model(tr, DecompositionConfig{});
  for (const auto* op : {&m.A, &m.M})
    for (int j = 0; j < op->outerSize(); ++j)
      for (qp::SparseMatrix::InnerIterator it(*op, j); it; ++it) {
        EXPECT_LE(it.row() - it.col(), 2);
        EXPECT_GE(it.row() - it.col(), 0);
      }
  const auto taps = driver_taps(2.0, 0.7, 20.0);
  EXPECT_DOUBLE_EQ(m.A.coeff(10, 10), taps[0]);
  EXPECT_DOUBLE_EQ(m.A.coeff(10, 9), taps[1]);
  EXPECT_DOUBLE_EQ(m.A.coeff(10, 8), taps[2]);
  EXPECT_DOUBLE_EQ(m.M.coeff(10, 9), 2.0);
}

TEST(CvxEdaModel, SplineBasisIsPartitionOfUnity) {
  SignalTrace tr{std::vector<double>(500, 0.3), 4.0};
  auto m = build_cvxeda_model(tr, DecompositionConfig{});
  Eigen::VectorXd rowsum = m.B * Eigen::VectorXd::Ones(m.knots);
  for (Eigen::Index i = 0; i < rowsum.size(); ++i) EXPECT_NEAR(rowsum[i], rowsum[0], 1e-12);
}

TEST(CvxEdaModel, PsdWithoutTonicPenalty) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  SignalTrace tr{std::vector<double>(60), 4.0};
  for (auto& v : tr.samples) v = u(rng);
  DecompositionConfig cfg;
  cfg.gamma = 0.0;
  auto m = build_cvxeda_model(tr, cfg);
  Eigen::MatrixXd P(m.program.P);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * es.eigenvalues().maxCoeff());
  EXPECT_LE((P - P.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CvxEdaModel, RejectsShortTracesAndBadConfig) {
  EXPECT_THROW(build_cvxeda_model(SignalTrace{{1, 2, 3}, 4.0}, DecompositionConfig{}), DataError);
  DecompositionConfig same;
  same.tau1 = same.tau0;
  EXPECT_THROW(build_cvxeda_model(SignalTrace{std::vector<double>(10, 0), 4.0}, same), ConfigError);
  DecompositionConfig neg;
  neg.alpha = -1;
  EXPECT_THROW(neg.validate(), ConfigError);
}

TEST(Decompose, ZeroTraceGivesZeroComponents) {
  SignalTrace tr{std::vector<double>(400, 0.0), 4.0};
  auto d = decompose(tr, DecompositionConfig{});
  EXPECT_TRUE(d.converged());
  expect_reconstruction(tr, d);
  for (const auto* c : {&d.phasic, &d.tonic, &d.driver, &d.residual})
    for (double v : c->samples) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(Decompose, ConstantGoesToTonic) {
  SignalTrace tr{std::vector<double>(200, 0.5), 4.0};
  auto d = decompose(tr, DecompositionConfig{});
  ASSERT_TRUE(d.converged());
  expect_reconstruction(tr, d);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    EXPECT_LE(std::abs(d.phasic.samples[i]), 1e-3);
    EXPECT_NEAR(d.tonic.samples[i], 0.5, 1e-3);
  }
}

TEST(Decompose, TwoPulsesLocateDriverMaxima) {
  const double fs = 20.0;
  const std::vector<double> onsets{72.0, 168.0};
  auto tr = synth::ramp_with_pulses(4800, fs, onsets);
  auto d = decompose(tr, DecompositionConfig{});
  ASSERT_TRUE(d.converged());
  expect_reconstruction(tr, d);
  auto top = top_local_maxima(d.driver.samples, 2);
  ASSERT_EQ(top.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(static_cast<double>(top[k]) / fs, onsets[k], 0.5);
  EXPECT_GE(*std::min_element(d.driver.samples.begin(), d.driver.samples.end()), -10 * 1e-6);
}

TEST(Decompose, PureTonicHasSmallPhasic) {
  for (double period : {60.0, 120.0, 300.0}) {
    auto tr = synth::pure_tonic(1200, 4.0, period, 0.4, 1e-4);
    auto d = decompose(tr, DecompositionConfig{});
    ASSERT_TRUE(d.converged());
    expect_reconstruction(tr, d);
    const auto [lo, hi] = std::minmax_element(tr.samples.begin(), tr.samples.end());
    double rmax = 0.0;
    for (double v : d.phasic.samples) rmax = std::max(rmax, std::abs(v));
    EXPECT_LE(rmax, 0.01 * (*hi - *lo)) << period;
  }
}

TEST(Decompose, LargerAlphaIsNoLessSparse) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 5; ++trial) {
    std::uniform_real_distribution<double> on(5.0, 110.0);
    std::vector<double> onsets{on(rng), on(rng), on(rng)};
    auto tr = synth::ramp_with_pulses(480, 4.0, onsets, 0.2 + 0.1 * trial);
    DecompositionConfig lo, hi;
    hi.alpha = 10 * lo.alpha;
    auto a = decompose(tr, lo);
    auto b = decompose(tr, hi);
    ASSERT_TRUE(a.converged() && b.converged());
    EXPECT_LE(count_above(b.driver.samples, 1e-3), count_above(a.driver.samples, 1e-3)) << trial;
  }
}

TEST(Decompose, Deterministic) {
  auto tr = synth::ramp_with_pulses(600, 4.0, {30.0, 90.0});
  auto a = decompose(tr, DecompositionConfig{});
  auto b = decompose(tr, DecompositionConfig{});
  EXPECT_EQ(a.driver.samples, b.driver.samples);
  EXPECT_EQ(a.residual.samples, b.residual.samples);
}

TEST(Decompose, IterationCapStillReconstructs) {
  auto tr = synth::ramp_with_pulses(600, 4.0, {30.0, 90.0});
  qp::QpSettings s;
  s.max_iter = 3;
  s.polish = false;
  auto d = decompose(tr, DecompositionConfig{}, s);
  EXPECT_FALSE(d.converged());
  expect_reconstruction(tr, d);
}
