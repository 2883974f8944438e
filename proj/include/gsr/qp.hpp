#pragma once

// Convex quadratic programming by operator splitting.
//
//   minimize    0.5 x'Px + c'x
//   subject to  Gx >= h
//
// The iteration follows the usual ADMM splitting with an auxiliary z = Gx:
// a single sparse LDL' factorization of (P + sigma I + rho G'G) is computed
// up front and reused until the residual balancing heuristic changes rho.
// Problem data is equilibrated (modified Ruiz) before iterating, and once the
// iterates are close, the active set is guessed and the reduced KKT system is
// solved directly ("polishing"), which gives solutions accurate to round-off.
//
// Termination is always checked on the unscaled problem:
//   primal      ||max(h - Gx, 0)||_inf            <= tol * (1 + ||h||_inf)
//   dual        ||Px + c - G'lambda||_inf          <= tol * (1 + ||c||_inf)
//   complement  max_i |lambda_i (Gx - h)_i|        <= tol
// with lambda >= 0 recovered from the ADMM dual variable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "gsr/signal.hpp"

namespace gsr::qp {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

struct QuadraticProgram {
  SparseMatrix P;  // n x n, symmetric PSD
  Vector c;        // n
  SparseMatrix G;  // m x n
  Vector h;        // m

  Eigen::Index num_variables() const { return c.size(); }
  Eigen::Index num_constraints() const { return h.size(); }
};

enum class QpStatus { converged, max_iterations, infeasible_suspected };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::converged: return "converged";
    case QpStatus::max_iterations: return "max_iterations";
    case QpStatus::infeasible_suspected: return "infeasible_suspected";
  }
  return "unknown";
}

/// Normalized KKT residuals of a primal/dual pair (see the header comment).
struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
};

struct QpSolution {
  Vector x;
  Vector multipliers;  // lambda >= 0, one per constraint row
  QpStatus status = QpStatus::max_iterations;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
  bool polished = false;
};

struct IterationRecord {
  int iteration = 0;
  double rho = 0.0;
  KktResiduals residuals;
};

struct QpSettings {
  double tol = 1e-6;
  int max_iter = 20000;
  double rho = 1.0;
  double sigma = 1e-6;
  double alpha = 1.6;  // over-relaxation
  bool adaptive_rho = true;
  int adapt_interval = 25;
  int scaling_iterations = 10;
  bool polish = true;
  int polish_interval = 50;
  double polish_trigger = 1e-3;  // try polishing once residuals fall below this
  double infeasibility_tol = 1e-6;
  std::function<void(const IterationRecord&)> on_iteration;  // diagnostics hook
};

inline double objective(const QuadraticProgram& qp, const Vector& x) {
  return 0.5 * x.dot(qp.P * x) + qp.c.dot(x);
}

inline KktResiduals kkt_residuals(const QuadraticProgram& qp, const Vector& x, const Vector& lambda) {
  KktResiduals r;
  const double h_norm = qp.h.size() ? qp.h.lpNorm<Eigen::Infinity>() : 0.0;
  const double c_norm = qp.c.size() ? qp.c.lpNorm<Eigen::Infinity>() : 0.0;
  Vector gx = qp.G * x;
  double viol = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < gx.size(); ++i) {
    viol = std::max(viol, qp.h[i] - gx[i]);
    comp = std::max(comp, std::abs(lambda[i] * (gx[i] - qp.h[i])));
  }
  Vector stat = qp.P * x + qp.c;
  if (qp.G.rows() > 0) stat -= qp.G.transpose() * lambda;
  r.primal = std::max(viol, 0.0) / (1.0 + h_norm);
  r.dual = (stat.size() ? stat.lpNorm<Eigen::Infinity>() : 0.0) / (1.0 + c_norm);
  r.complementarity = comp;
  return r;
}

inline void validate(const QuadraticProgram& qp) {
  const auto n = qp.c.size();
  if (qp.P.rows() != n || qp.P.cols() != n)
    throw ConfigError("solve_qp: P must be " + std::to_string(n) + "x" + std::to_string(n));
  if (qp.G.cols() != n && qp.G.rows() > 0)
    throw ConfigError("solve_qp: G must have " + std::to_string(n) + " columns");
  if (qp.G.rows() != qp.h.size())
    throw ConfigError("solve_qp: G rows and h length differ");
  auto finite = [](const auto& values, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i)
      if (!std::isfinite(values[i])) return false;
    return true;
  };
  if (!finite(qp.c.data(), qp.c.size()) || !finite(qp.h.data(), qp.h.size()) ||
      !finite(qp.P.valuePtr(), qp.P.nonZeros()) || !finite(qp.G.valuePtr(), qp.G.nonZeros()))
    throw DataError("solve_qp: non-finite entry in problem data");
  SparseMatrix asym = SparseMatrix(qp.P.transpose()) - qp.P;
  double pmax = 0.0, amax = 0.0;
  for (Eigen::Index k = 0; k < qp.P.nonZeros(); ++k) pmax = std::max(pmax, std::abs(qp.P.valuePtr()[k]));
  for (Eigen::Index k = 0; k < asym.nonZeros(); ++k) amax = std::max(amax, std::abs(asym.valuePtr()[k]));
  if (amax > 1e-12 * std::max(1.0, pmax)) throw ConfigError("solve_qp: P is not symmetric");
}

namespace detail {

inline Vector column_inf_norms(const SparseMatrix& m) {
  Vector out = Vector::Zero(m.cols());
  for (int j = 0; j < m.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) out[j] = std::max(out[j], std::abs(it.value()));
  return out;
}

inline Vector row_inf_norms(const SparseMatrix& m) {
  Vector out = Vector::Zero(m.rows());
  for (int j = 0; j < m.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(m, j); it; ++it)
      out[it.row()] = std::max(out[it.row()], std::abs(it.value()));
  return out;
}

inline double safe_inverse_sqrt(double v) {
  if (v < 1e-4) return 1.0;
  return 1.0 / std::sqrt(std::min(v, 1e4));
}

/// Scaled copy of the problem: Pbar = s D P D, cbar = s D c, Gbar = E G D, hbar = E h.
struct ScaledProblem {
  SparseMatrix P, G;
  Vector c, h;
  Vector D, E;
  double cost_scale = 1.0;
};

inline ScaledProblem equilibrate(const QuadraticProgram& qp, int iterations) {
  ScaledProblem s{qp.P, qp.G, qp.c, qp.h, Vector::Ones(qp.c.size()), Vector::Ones(qp.h.size()), 1.0};
  for (int it = 0; it < iterations; ++it) {
    Vector dcol = column_inf_norms(s.P);
    if (s.G.rows() > 0) dcol = dcol.cwiseMax(column_inf_norms(s.G));
    Vector erow = row_inf_norms(s.G);
    Vector d = dcol.unaryExpr(&safe_inverse_sqrt);
    Vector e = erow.unaryExpr(&safe_inverse_sqrt);
    s.P = d.asDiagonal() * s.P * d.asDiagonal();
    s.G = e.asDiagonal() * s.G * d.asDiagonal();
    s.c = d.cwiseProduct(s.c);
    s.D = s.D.cwiseProduct(d);
    s.E = s.E.cwiseProduct(e);

    double mean_col = s.P.cols() ? column_inf_norms(s.P).mean() : 0.0;
    double c_norm = s.c.size() ? s.c.lpNorm<Eigen::Infinity>() : 0.0;
    double denom = std::max(mean_col, c_norm);
    double gamma = denom < 1e-4 ? 1.0 : 1.0 / std::min(denom, 1e4);
    s.P *= gamma;
    s.c *= gamma;
    s.cost_scale *= gamma;
  }
  s.P.makeCompressed();
  s.G.makeCompressed();
  s.h = s.E.cwiseProduct(qp.h);
  return s;
}

inline SparseMatrix identity(Eigen::Index n) {
  SparseMatrix I(n, n);
  I.setIdentity();
  return I;
}

/// Unscaled iterate from a scaled one.
struct Unscaled {
  Vector x, lambda;
};

inline Unscaled unscale(const ScaledProblem& s, const Vector& xbar, const Vector& ybar) {
  Unscaled u;
  u.x = s.D.cwiseProduct(xbar);
  // ADMM dual is <= 0 for lower-bounded rows; lambda is its negation.
  u.lambda = (-(s.E.cwiseProduct(ybar)) / s.cost_scale).cwiseMax(0.0);
  return u;
}

inline bool within(const KktResiduals& r, double tol) {
  return r.primal <= tol && r.dual <= tol && r.complementarity <= tol;
}

inline double worst(const KktResiduals& r) { return std::max({r.primal, r.dual, r.complementarity}); }

/// Solve the equality-constrained QP with the rows flagged in `active` held at
/// equality (scaled space). Returns false when the reduced system is singular.
inline bool solve_reduced_kkt(const ScaledProblem& s, const std::vector<char>& active, Vector& xbar_out,
                              Vector& ybar_out) {
  const Eigen::Index n = s.c.size();
  const Eigen::Index m = s.h.size();
  std::vector<int> rows;
  std::vector<int> row_to_active(static_cast<std::size_t>(m), -1);
  for (Eigen::Index i = 0; i < m; ++i)
    if (active[static_cast<std::size_t>(i)]) {
      row_to_active[static_cast<std::size_t>(i)] = static_cast<int>(rows.size());
      rows.push_back(static_cast<int>(i));
    }
  const Eigen::Index na = static_cast<Eigen::Index>(rows.size());
  const double delta = 1e-9;

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(s.P.nonZeros() + 2 * s.G.nonZeros()));
  for (int j = 0; j < s.P.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(s.P, j); it; ++it) trips.emplace_back(int(it.row()), j, it.value());
  for (int j = 0; j < s.G.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(s.G, j); it; ++it) {
      int k = row_to_active[static_cast<std::size_t>(it.row())];
      if (k < 0) continue;
      trips.emplace_back(int(n) + k, j, it.value());
      trips.emplace_back(j, int(n) + k, it.value());
    }
  SparseMatrix K(n + na, n + na);
  K.setFromTriplets(trips.begin(), trips.end());
  for (Eigen::Index i = 0; i < n + na; ++i) trips.emplace_back(int(i), int(i), i < n ? delta : -delta);
  SparseMatrix Kreg(n + na, n + na);
  Kreg.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(Kreg);
  if (ldlt.info() != Eigen::Success) return false;

  Vector rhs(n + na);
  rhs.head(n) = -s.c;
  for (Eigen::Index k = 0; k < na; ++k) rhs[n + k] = s.h[rows[static_cast<std::size_t>(k)]];
  Vector sol = ldlt.solve(rhs);
  // Iterative refinement against the unregularized matrix.
  for (int refine = 0; refine < 5; ++refine) sol += ldlt.solve(Vector(rhs - K * sol));
  if (!sol.allFinite()) return false;

  xbar_out = sol.head(n);
  ybar_out = Vector::Zero(m);
  // Reduced KKT reads P x + c + G_A' y_A = 0 (ADMM sign convention, y_A <= 0 when correct).
  for (Eigen::Index k = 0; k < na; ++k) ybar_out[rows[static_cast<std::size_t>(k)]] = sol[n + k];
  return true;
}

/// Guess the active set from the ADMM iterate, then repair it a few times by
/// adding violated rows and releasing rows with wrong-signed multipliers.
inline bool polish(const ScaledProblem& s, const Vector& zbar, const Vector& ybar, Vector& xbar_out,
                   Vector& ybar_out, int max_rounds = 8) {
  const Eigen::Index m = s.h.size();
  std::vector<char> active(static_cast<std::size_t>(m), 0);
  for (Eigen::Index i = 0; i < m; ++i) active[static_cast<std::size_t>(i)] = zbar[i] - s.h[i] < -ybar[i];
  for (int round = 0; round < max_rounds; ++round) {
    if (!solve_reduced_kkt(s, active, xbar_out, ybar_out)) return false;
    if (m == 0) return true;
    const Vector gx = s.G * xbar_out;
    const double y_tol = 1e-12 * (1.0 + ybar_out.cwiseAbs().maxCoeff());
    bool changed = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      auto& a = active[static_cast<std::size_t>(i)];
      if (!a && gx[i] < s.h[i] - 1e-12 * (1.0 + std::abs(s.h[i]))) {
        a = 1;
        changed = true;
      } else if (a && ybar_out[i] > y_tol) {
        a = 0;
        changed = true;
      }
    }
    if (!changed) return true;
  }
  return true;
}

}  // namespace detail

/// Solve a convex QP with constraints Gx >= h. Never throws on non-convergence;
/// the status field reports it.
inline QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& settings = {}) {
  if (!(settings.tol > 0.0)) throw ConfigError("solve_qp: tol must be positive");
  if (settings.max_iter < 1) throw ConfigError("solve_qp: max_iter must be at least 1");
  validate(qp);

  const Eigen::Index n = qp.c.size();
  const Eigen::Index m = qp.h.size();
  const detail::ScaledProblem s = detail::equilibrate(qp, settings.scaling_iterations);
  const SparseMatrix Gt = s.G.transpose();
  const SparseMatrix GtG = Gt * s.G;
  const SparseMatrix sigmaI = settings.sigma * detail::identity(n);

  double rho = settings.rho;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  auto factorize = [&](bool first) {
    SparseMatrix K = s.P + sigmaI + rho * GtG;
    if (first) ldlt.analyzePattern(K);
    ldlt.factorize(K);
    if (ldlt.info() != Eigen::Success) throw DataError("solve_qp: KKT factorization failed");
  };
  factorize(true);

  Vector x = Vector::Zero(n), z = Vector::Zero(m), y = Vector::Zero(m);
  Vector y_prev = y;
  QpSolution out;
  out.x = Vector::Zero(n);
  out.multipliers = Vector::Zero(m);
  double best = std::numeric_limits<double>::infinity();
  int last_polish = -settings.polish_interval;

  auto accept = [&](const detail::Unscaled& u, const KktResiduals& r, int iter, bool polished) {
    out.x = u.x;
    out.multipliers = u.lambda;
    out.iterations = iter;
    out.primal_residual = r.primal;
    out.dual_residual = r.dual;
    out.complementarity = r.complementarity;
    out.polished = polished;
  };

  auto try_polish = [&](int iter) {
    Vector xp, yp;
    if (!detail::polish(s, z, y, xp, yp)) return false;
    detail::Unscaled u = detail::unscale(s, xp, yp);
    // A negative active multiplier means the active-set guess was wrong.
    if (m > 0 && (yp.array() > 1e-12 * (1.0 + yp.cwiseAbs().maxCoeff())).any()) return false;
    KktResiduals r = kkt_residuals(qp, u.x, u.lambda);
    if (detail::worst(r) < best) {
      best = detail::worst(r);
      accept(u, r, iter, true);
    }
    return detail::within(r, settings.tol);
  };

  for (int iter = 1; iter <= settings.max_iter; ++iter) {
    y_prev = y;
    Vector rhs = settings.sigma * x - s.c;
    if (m > 0) rhs += Gt * (rho * z - y);
    Vector x_tilde = ldlt.solve(rhs);
    Vector z_tilde = s.G * x_tilde;

    x = settings.alpha * x_tilde + (1.0 - settings.alpha) * x;
    Vector z_relaxed = settings.alpha * z_tilde + (1.0 - settings.alpha) * z;
    Vector z_new = (z_relaxed + y / rho).cwiseMax(s.h);
    y += rho * (z_relaxed - z_new);
    z = std::move(z_new);

    detail::Unscaled u = detail::unscale(s, x, y);
    KktResiduals r = kkt_residuals(qp, u.x, u.lambda);
    if (settings.on_iteration) settings.on_iteration({iter, rho, r});
    if (detail::worst(r) < best) {
      best = detail::worst(r);
      accept(u, r, iter, false);
    }
    if (detail::within(r, settings.tol)) {
      accept(u, r, iter, false);
      out.status = QpStatus::converged;
      return out;
    }

    if (settings.polish && detail::worst(r) <= settings.polish_trigger &&
        iter - last_polish >= settings.polish_interval) {
      last_polish = iter;
      if (try_polish(iter)) {
        out.iterations = iter;
        out.status = QpStatus::converged;
        return out;
      }
    }

    // Primal infeasibility certificate: G' dy ~ 0 with h' dy > 0 for the lambda step.
    if (m > 0) {
      Vector dy = y - y_prev;
      double dy_norm = dy.lpNorm<Eigen::Infinity>();
      if (dy_norm > 1e-12 && (dy.array() <= 0.0).all()) {
        Vector dlambda = -s.E.cwiseProduct(dy);
        double dl_norm = dlambda.lpNorm<Eigen::Infinity>();
        Vector Gtdl = qp.G.transpose() * dlambda;
        if (Gtdl.lpNorm<Eigen::Infinity>() <= settings.infeasibility_tol * dl_norm &&
            qp.h.dot(dlambda) > settings.infeasibility_tol * dl_norm) {
          out.iterations = iter;
          out.status = QpStatus::infeasible_suspected;
          return out;
        }
      }
    }

    if (settings.adaptive_rho && m > 0 && iter % settings.adapt_interval == 0) {
      Vector gx = s.G * x;
      Vector px = s.P * x;
      Vector gty = Gt * y;
      double prim = (gx - z).lpNorm<Eigen::Infinity>() /
                    std::max({gx.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>(), 1e-12});
      double dual = (px + s.c + gty).lpNorm<Eigen::Infinity>() /
                    std::max({px.lpNorm<Eigen::Infinity>(), gty.lpNorm<Eigen::Infinity>(),
                              s.c.lpNorm<Eigen::Infinity>(), 1e-12});
      double ratio = std::sqrt(prim / std::max(dual, 1e-12));
      double rho_new = std::clamp(rho * ratio, 1e-6, 1e6);
      if (rho_new > 5.0 * rho || rho_new < 0.2 * rho) {
        rho = rho_new;
        factorize(false);
      }
    }
  }

  if (settings.polish && try_polish(settings.max_iter)) {
    out.status = QpStatus::converged;
  } else {
    out.status = QpStatus::max_iterations;
  }
  out.iterations = settings.max_iter;
  return out;
}

inline QpSolution solve_qp(const QuadraticProgram& qp, double tol, int max_iter) {
  QpSettings settings;
  settings.tol = tol;
  settings.max_iter = max_iter;
  return solve_qp(qp, settings);
}

}  // namespace gsr::qp
