#pragma once

// Tonic/phasic decomposition of a skin-conductance trace as a sparse convex QP.
//
// The observed trace y is modelled as
//     y = r + t + e,   r = M q,   p = A q >= 0,   t = B l + C d
// where p is a sparse nonnegative driver, A/M are the banded operators of the
// bilinear-discretized biexponential response (p -> r is the filter M A^-1),
// B is a cubic B-spline basis and C = [1, time] carries offset and drift.
// The QP over x = (q, l, d) is
//     minimize  0.5 ||M q + B l + C d - y||^2 + alpha 1'(A q) + 0.5 gamma ||l||^2
//     s.t.      A q >= 0

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "gsr/qp.hpp"
#include "gsr/signal.hpp"

namespace gsr {

struct DecompositionConfig {
  double tau0 = 2.0;            // slow time constant, s
  double tau1 = 0.7;            // fast time constant, s
  double knot_spacing_s = 10.0;
  double alpha = 8e-4;          // driver sparsity weight
  double gamma = 1e-2;          // spline coefficient penalty

  void validate() const {
    if (!(tau0 > 0.0) || !(tau1 > 0.0)) throw ConfigError("decomposition: tau0 and tau1 must be positive");
    if (tau0 == tau1) throw ConfigError("decomposition: tau0 and tau1 must differ");
    if (!(knot_spacing_s > 0.0)) throw ConfigError("decomposition: knot_spacing_s must be positive");
    if (!(alpha >= 0.0) || !(gamma >= 0.0)) throw ConfigError("decomposition: alpha and gamma must be >= 0");
  }
};

/// Assembled QP plus the operators that map its solution back to signal components.
struct CvxEdaModel {
  qp::QuadraticProgram program;
  qp::SparseMatrix A;  // N x N driver operator
  qp::SparseMatrix M;  // N x N moving-average operator
  qp::SparseMatrix B;  // N x knots spline basis
  Eigen::MatrixXd C;   // N x 2 offset + linear drift
  Eigen::Index n = 0;
  Eigen::Index knots = 0;

  Eigen::Index num_variables() const { return n + knots + C.cols(); }
};

struct Decomposition {
  SignalTrace phasic;
  SignalTrace tonic;
  SignalTrace driver;
  SignalTrace residual;
  qp::QpStatus status = qp::QpStatus::max_iterations;
  int iterations = 0;
  bool converged() const noexcept { return status == qp::QpStatus::converged; }
};

/// Taps {k0, k1, k2} of A: row i of A q is k0 q[i] + k1 q[i-1] + k2 q[i-2].
inline std::array<double, 3> driver_taps(double tau0, double tau1, double fs) {
  const double delta = 1.0 / fs;
  const double a1 = 1.0 / std::min(tau0, tau1);
  const double a0 = 1.0 / std::max(tau0, tau1);
  const double scale = (a1 - a0) * delta * delta;
  return {(a1 * delta + 2.0) * (a0 * delta + 2.0) / scale, (2.0 * a1 * a0 * delta * delta - 8.0) / scale,
          (a1 * delta - 2.0) * (a0 * delta - 2.0) / scale};
}

/// Knot interval in samples (at least one).
inline Eigen::Index knot_interval_samples(double knot_spacing_s, double fs) {
  return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(knot_spacing_s * fs)));
}

/// Number of spline columns. Knots sit at -ks, 0, ks, ... through the first knot
/// at or past N-1, plus one more beyond it; the exterior knot on each side keeps
/// the basis a partition of unity up to both boundaries.
inline Eigen::Index spline_knot_count(Eigen::Index n, Eigen::Index ks) {
  return (n - 1 + ks - 1) / ks + 1 + 2;
}

/// Discrete cubic B-spline: a triangle of half-width ks convolved with itself, peak 1.
inline std::vector<double> cubic_spline_kernel(Eigen::Index ks) {
  std::vector<double> tri;
  for (Eigen::Index i = 1; i < ks; ++i) tri.push_back(static_cast<double>(i));
  for (Eigen::Index i = ks; i > 0; --i) tri.push_back(static_cast<double>(i));
  std::vector<double> out(2 * tri.size() - 1, 0.0);
  for (std::size_t i = 0; i < tri.size(); ++i)
    for (std::size_t j = 0; j < tri.size(); ++j) out[i + j] += tri[i] * tri[j];
  const double peak = *std::max_element(out.begin(), out.end());
  for (double& v : out) v /= peak;
  return out;
}

namespace detail {

inline qp::SparseMatrix banded_three_tap(Eigen::Index n, const std::array<double, 3>& taps) {
  std::vector<qp::Triplet> t;
  t.reserve(static_cast<std::size_t>(3 * n));
  for (Eigen::Index i = 2; i < n; ++i)
    for (int k = 0; k < 3; ++k) t.emplace_back(int(i), int(i - k), taps[static_cast<std::size_t>(k)]);
  qp::SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace detail

inline CvxEdaModel build_cvxeda_model(const SignalTrace& trace, const DecompositionConfig& cfg) {
  cfg.validate();
  require_valid(trace, "build_cvxeda_model");
  const Eigen::Index n = static_cast<Eigen::Index>(trace.size());
  if (n < 4) throw DataError("build_cvxeda_model: trace too short (need at least 4 samples)");

  CvxEdaModel model;
  model.n = n;
  model.A = detail::banded_three_tap(n, driver_taps(cfg.tau0, cfg.tau1, trace.fs));
  model.M = detail::banded_three_tap(n, {1.0, 2.0, 1.0});

  const Eigen::Index ks = knot_interval_samples(cfg.knot_spacing_s, trace.fs);
  const std::vector<double> spline = cubic_spline_kernel(ks);
  const Eigen::Index half = static_cast<Eigen::Index>(spline.size()) / 2;
  model.knots = spline_knot_count(n, ks);
  {
    std::vector<qp::Triplet> t;
    for (Eigen::Index k = 0; k < model.knots; ++k) {
      const Eigen::Index centre = (k - 1) * ks;
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(spline.size()); ++j) {
        const Eigen::Index row = centre - half + j;
        if (row >= 0 && row < n) t.emplace_back(int(row), int(k), spline[static_cast<std::size_t>(j)]);
      }
    }
    model.B = qp::SparseMatrix(n, model.knots);
    model.B.setFromTriplets(t.begin(), t.end());
  }
  model.C.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    model.C(i, 0) = 1.0;
    model.C(i, 1) = static_cast<double>(i + 1) / static_cast<double>(n);
  }

  // Design matrix Phi = [M B C] so that the fitted signal is Phi x.
  const Eigen::Index nv = model.num_variables();
  qp::SparseMatrix phi(n, nv);
  {
    std::vector<qp::Triplet> t;
    t.reserve(static_cast<std::size_t>(model.M.nonZeros() + model.B.nonZeros() + 2 * n));
    for (int j = 0; j < model.M.outerSize(); ++j)
      for (qp::SparseMatrix::InnerIterator it(model.M, j); it; ++it) t.emplace_back(int(it.row()), j, it.value());
    for (int j = 0; j < model.B.outerSize(); ++j)
      for (qp::SparseMatrix::InnerIterator it(model.B, j); it; ++it)
        t.emplace_back(int(it.row()), int(n) + j, it.value());
    for (Eigen::Index i = 0; i < n; ++i)
      for (int j = 0; j < 2; ++j) t.emplace_back(int(i), int(n + model.knots) + j, model.C(i, j));
    phi.setFromTriplets(t.begin(), t.end());
  }
  const Eigen::Map<const Eigen::VectorXd> y(trace.samples.data(), n);

  qp::SparseMatrix ridge(nv, nv);
  {
    std::vector<qp::Triplet> t;
    for (Eigen::Index k = 0; k < model.knots; ++k) t.emplace_back(int(n + k), int(n + k), cfg.gamma);
    ridge.setFromTriplets(t.begin(), t.end());
  }
  qp::SparseMatrix phit = phi.transpose();
  model.program.P = qp::SparseMatrix(phit * phi) + ridge;
  model.program.P.prune(0.0);
  model.program.P.makeCompressed();

  model.program.c = -(phit * y);
  model.program.c.head(n) += cfg.alpha * (model.A.transpose() * Eigen::VectorXd::Ones(n));

  {
    std::vector<qp::Triplet> t;
    for (int j = 0; j < model.A.outerSize(); ++j)
      for (qp::SparseMatrix::InnerIterator it(model.A, j); it; ++it) t.emplace_back(int(it.row()), j, it.value());
    model.program.G = qp::SparseMatrix(n, nv);
    model.program.G.setFromTriplets(t.begin(), t.end());
  }
  model.program.h = Eigen::VectorXd::Zero(n);
  return model;
}

/// Decompose a (preprocessed) trace. Non-convergence is reported through
/// Decomposition::status; the components are still filled in from the best iterate.
inline Decomposition decompose(const SignalTrace& trace, const DecompositionConfig& cfg,
                               const qp::QpSettings& solver = {}) {
  const CvxEdaModel model = build_cvxeda_model(trace, cfg);
  const qp::QpSolution sol = qp::solve_qp(model.program, solver);
  const Eigen::Index n = model.n;

  const Eigen::VectorXd q = sol.x.head(n);
  const Eigen::VectorXd l = sol.x.segment(n, model.knots);
  const Eigen::VectorXd d = sol.x.tail(model.C.cols());
  const Eigen::VectorXd r = model.M * q;
  const Eigen::VectorXd t = model.B * l + model.C * d;
  const Eigen::VectorXd p = model.A * q;

  auto as_trace = [&](const Eigen::VectorXd& v) {
    return SignalTrace{std::vector<double>(v.data(), v.data() + v.size()), trace.fs};
  };
  Decomposition out;
  out.phasic = as_trace(r);
  out.tonic = as_trace(t);
  out.driver = as_trace(p);
  out.residual.fs = trace.fs;
  out.residual.samples.resize(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    // e is the remainder, nudged by ulps so that (r + t) + e == y holds bit-exactly.
    const double y_i = trace.samples[i];
    const double s = out.phasic.samples[i] + out.tonic.samples[i];
    double e = y_i - s;
    for (int guard = 0; s + e != y_i && guard < 8; ++guard)
      e = std::nextafter(e, s + e < y_i ? HUGE_VAL : -HUGE_VAL);
    out.residual.samples[i] = e;
  }
  out.status = sol.status;
  out.iterations = sol.iterations;
  return out;
}

}  // namespace gsr
