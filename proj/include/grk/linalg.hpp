#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "grk/errors.hpp"

namespace grk {

using Vec = std::vector<double>;

// Dense row-major matrix; this artifact only ever needs tiny n (<= a few
// hundred for enumeration tables), so no blocking or views.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

// y = x^T M (row vector times matrix).
inline Vec vec_mat(const Vec& x, const Mat& m) {
  if (x.size() != m.rows) throw dimension_error("vec_mat: size mismatch");
  Vec y(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double xi = x[i];
    for (std::size_t j = 0; j < m.cols; ++j) y[j] += xi * m(i, j);
  }
  return y;
}

inline Vec mat_vec(const Mat& m, const Vec& x) {
  if (x.size() != m.cols) throw dimension_error("mat_vec: size mismatch");
  Vec y(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline Mat mat_mul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) throw dimension_error("mat_mul: size mismatch");
  Mat c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

// Cholesky factorization; returns false if the matrix is not positive
// definite (used as the SPD test for QP matrices).
inline bool cholesky(const Mat& a, Mat* lower = nullptr) {
  if (a.rows != a.cols) throw dimension_error("cholesky: matrix not square");
  const std::size_t n = a.rows;
  Mat l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return false;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  if (lower) *lower = std::move(l);
  return true;
}

// Largest eigenvalue of a symmetric positive-definite matrix by power
// iteration with a fixed deterministic start; tiny n makes this exact enough
// for step-size selection (rel tol 1e-14, hard iteration cap).
inline double max_eigenvalue_spd(const Mat& q) {
  if (q.rows != q.cols || q.rows == 0)
    throw dimension_error("max_eigenvalue_spd: matrix not square");
  const std::size_t n = q.rows;
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 1e-3 * static_cast<double>(i);
  double lambda = 0.0;
  for (int iter = 0; iter < 500; ++iter) {
    Vec w = mat_vec(q, v);
    const double nw = norm2(w);
    if (nw == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) w[i] /= nw;
    const double next = dot(w, mat_vec(q, w));
    v = std::move(w);
    if (iter > 0 && std::abs(next - lambda) <= 1e-14 * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

// Euclidean projection onto the probability simplex (sort-based algorithm).
inline Vec project_to_simplex(const Vec& y) {
  const std::size_t n = y.size();
  if (n == 0) throw empty_input_error("project_to_simplex: empty vector");
  Vec u = y;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double theta = 0.0;
  std::size_t rho = 0;
  for (std::size_t i = 0; i < n; ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      rho = i + 1;
      theta = t;
    }
  }
  (void)rho;
  Vec p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = std::max(0.0, y[i] - theta);
  return p;
}

}  // namespace grk
