#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>

#include "grk/errors.hpp"
#include "grk/linalg.hpp"
#include "grk/objective.hpp"
#include "grk/softmax.hpp"
#include "grk/types.hpp"

namespace grk {

// Quadratic objective (p - c)^T Q (p - c) over the probability simplex,
// with Q symmetric positive definite.
struct QpSpec {
  std::size_t n = 0;
  Mat q;
  Vec c;

  QpSpec(Mat q_in, Vec c_in) : n(c_in.size()), q(std::move(q_in)), c(std::move(c_in)) {
    if (q.rows != n || q.cols != n) throw dimension_error("QpSpec: Q shape mismatch");
    if (n < 2) throw dimension_error("QpSpec: need n >= 2");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (std::abs(q(i, j) - q(j, i)) > 1e-12)
          throw domain_error("QpSpec: Q must be symmetric");
    if (!cholesky(q)) throw domain_error("QpSpec: Q must be positive definite");
  }
};

// Default testbed: Q_ij = exp(-2|i-j|), c_i = 1/3.
inline QpSpec make_default_qp(std::size_t n = 3) {
  Mat q(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      q(i, j) = std::exp(-2.0 * std::abs(static_cast<double>(i) - static_cast<double>(j)));
  return QpSpec(std::move(q), Vec(n, 1.0 / 3.0));
}

inline double qp_deterministic_value(const Vec& p, const QpSpec& spec) {
  Vec d(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) d[i] = p[i] - spec.c[i];
  return dot(d, mat_vec(spec.q, d));
}

// Full gradient of qp_deterministic_value(softmax(theta)) with respect to the
// logits: 2 Q (p - c) pulled back through the softmax Jacobian. Closed form,
// no sampling; this is the oracle descent direction for training.
inline Vec qp_value_gradient(const Vec& theta, const QpSpec& spec) {
  if (theta.size() != spec.n) throw dimension_error("qp_value_gradient: dimension mismatch");
  const Vec p = softmax1(theta);
  Vec g(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) g[i] = p[i] - spec.c[i];
  g = mat_vec(spec.q, g);
  for (double& gi : g) gi *= 2.0;
  Vec out(spec.n);
  row_times_jacobian_from_probs(g, p, 1.0, out);
  return out;
}

// The per-point matrix A(p) that turns the deterministic quadratic into an
// expectation over one-hot outcomes: E_D[(D-c)^T A(p) (D-c)] = (p-c)^T Q (p-c).
// The denominators are the exact second moments E[(D_i-c_i)(D_j-c_j)], which
// vanish on a measure-zero surface; such points are reported, not patched.
inline Mat build_a_matrix(const Vec& p, const QpSpec& spec) {
  if (p.size() != spec.n) throw dimension_error("build_a_matrix: dimension mismatch");
  for (double pi : p)
    if (!(pi > 0.0) || !(pi < 1.0))
      throw domain_error("build_a_matrix: p must be strictly interior");
  Mat a(spec.n, spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < spec.n; ++j) {
      const double num = (p[i] - spec.c[i]) * (p[j] - spec.c[j]);
      double den;
      if (i == j)
        den = p[i] - 2.0 * p[i] * spec.c[i] + spec.c[i] * spec.c[i];
      else
        den = spec.c[i] * spec.c[j] - p[i] * spec.c[j] - spec.c[i] * p[j];
      if (std::abs(den) <= 1e-12)
        throw degenerate_point_error("build_a_matrix: degenerate denominator at (" +
                                     std::to_string(i) + "," + std::to_string(j) + ")");
      a(i, j) = num / den * spec.q(i, j);
    }
  }
  return a;
}

// Stochastic objective at the current logits: f(D) = (D-c)^T A(p) (D-c) with
// p = softmax(theta) and A(p) frozen inside the estimate, so parameter
// gradients flow only through the sampling distribution.
inline ObjectiveSpec qp_objective_spec(const Logits& theta, const QpSpec& spec) {
  if (theta.size() != spec.n) throw dimension_error("qp_objective_spec: arity mismatch");
  const Vec p = softmax1(theta.values());
  auto a = std::make_shared<Mat>(build_a_matrix(p, spec));
  auto c = std::make_shared<Vec>(spec.c);
  auto eval = [a, c](const Vec& x) {
    Vec d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - (*c)[i];
    return dot(d, mat_vec(*a, d));
  };
  auto grad = [a, c](const Vec& x) {
    Vec d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - (*c)[i];
    Vec g = mat_vec(*a, d);
    for (double& gi : g) gi *= 2.0;
    return g;
  };
  return ObjectiveSpec(spec.n, std::move(eval), std::move(grad));
}

struct QpSolution {
  Vec p_star;
  double v_star = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Deterministic reference solve by projected gradient descent on the simplex
// with fixed step 1/lambda_max(Q) applied to the half-gradient Q(p-c)
// (i.e. an effective step of 1/(2 lambda_max) on the full gradient, safely
// inside the convergent range; the full-gradient step would sit exactly on
// the stability boundary).
inline QpSolution solve_qp(const QpSpec& spec, std::size_t max_iters = 100000,
                           double tol = 1e-12) {
  const double step = 1.0 / max_eigenvalue_spd(spec.q);
  QpSolution sol;
  Vec p(spec.n, 1.0 / static_cast<double>(spec.n));
  for (std::size_t it = 0; it < max_iters; ++it) {
    Vec d(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) d[i] = p[i] - spec.c[i];
    const Vec g = mat_vec(spec.q, d);
    Vec y(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) y[i] = p[i] - step * g[i];
    Vec next = project_to_simplex(y);
    double delta = 0.0;
    for (std::size_t i = 0; i < spec.n; ++i)
      delta = std::max(delta, std::abs(next[i] - p[i]));
    p = std::move(next);
    sol.iterations = it + 1;
    if (delta <= tol) {
      sol.converged = true;
      break;
    }
  }
  sol.p_star = p;
  sol.v_star = qp_deterministic_value(p, spec);
  return sol;
}

}  // namespace grk
