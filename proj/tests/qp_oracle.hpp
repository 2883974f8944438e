#pragma once

// Dense active-set enumeration for small strictly convex QPs (test-only oracle).
// Subsets are visited in order of increasing cardinality; the first subset whose
// equality-constrained solution is primal feasible with nonnegative multipliers
// is the unique KKT point.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gsr/qp.hpp"

namespace oracle {

struct DenseQp {
  Eigen::MatrixXd P, G;
  Eigen::VectorXd c, h;
};

inline gsr::qp::QuadraticProgram to_sparse(const DenseQp& d) {
  gsr::qp::QuadraticProgram qp;
  qp.P = d.P.sparseView();
  qp.G = d.G.sparseView();
  qp.c = d.c;
  qp.h = d.h;
  return qp;
}

inline void next_combination_all(int m, int k, const std::function<bool(const std::vector<int>&)>& visit) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    if (visit(idx)) return;
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline std::optional<Eigen::VectorXd> active_set_solve(const DenseQp& d, double feas_tol = 1e-9) {
  const int m = static_cast<int>(d.h.size());
  Eigen::LDLT<Eigen::MatrixXd> pchol(d.P);
  Eigen::MatrixXd PinvGt = pchol.solve(d.G.transpose());
  Eigen::VectorXd Pinvc = pchol.solve(d.c);
  Eigen::MatrixXd W = d.G * PinvGt;
  Eigen::VectorXd u = d.G * Pinvc;

  std::optional<Eigen::VectorXd> found;
  for (int k = 0; k <= m && !found; ++k) {
    next_combination_all(m, k, [&](const std::vector<int>& act) {
      Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
      if (k > 0) {
        Eigen::MatrixXd Waa(k, k);
        Eigen::VectorXd rhs(k);
        for (int a = 0; a < k; ++a) {
          rhs[a] = d.h[act[a]] + u[act[a]];
          for (int b = 0; b < k; ++b) Waa(a, b) = W(act[a], act[b]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Waa);
        if (!lu.isInvertible()) return false;
        Eigen::VectorXd la = lu.solve(rhs);
        for (int a = 0; a < k; ++a) {
          if (la[a] < -feas_tol) return false;
          lambda[act[a]] = la[a];
        }
      }
      Eigen::VectorXd x = PinvGt * lambda - Pinvc;
      Eigen::VectorXd gx = d.G * x;
      for (int i = 0; i < m; ++i)
        if (gx[i] < d.h[i] - feas_tol * (1.0 + std::abs(d.h[i]))) return false;
      found = x;
      return true;
    });
  }
  return found;
}

/// Random strictly convex QP with a known feasible point.
inline DenseQp random_qp(std::mt19937_64& rng, int n, int m) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DenseQp d;
  Eigen::MatrixXd Q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Q(i, j) = normal(rng);
  d.P = Q.transpose() * Q / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
  d.P = 0.5 * (d.P + d.P.transpose());
  d.c.resize(n);
  for (int i = 0; i < n; ++i) d.c[i] = 3.0 * normal(rng);
  d.G.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) d.G(i, j) = normal(rng);
  Eigen::VectorXd x0(n);
  for (int i = 0; i < n; ++i) x0[i] = normal(rng);
  d.h = d.G * x0;
  for (int i = 0; i < m; ++i) d.h[i] -= unit(rng);
  return d;
}

}  // namespace oracle
