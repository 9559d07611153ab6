#pragma once

#include <cmath>

#include "grk/linalg.hpp"
#include "grk/types.hpp"

namespace grk {

// softmax(x/tau), computed with max-subtraction so huge logits cannot
// overflow; output is a probability vector.
inline Vec tempered_softmax(const Vec& x, const Temperature& tau) {
  if (x.empty()) throw empty_input_error("tempered_softmax: empty input");
  if (!all_finite(x)) throw domain_error("tempered_softmax: non-finite input");
  const double t = tau.tau();
  double hi = x[0];
  for (double xi : x) hi = std::max(hi, xi);
  Vec s(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s[i] = std::exp((x[i] - hi) / t);
    z += s[i];
  }
  for (double& si : s) si /= z;
  return s;
}

inline Vec tempered_softmax(const Vec& x, double tau) {
  return tempered_softmax(x, Temperature(tau));
}

inline Vec softmax1(const Vec& x) { return tempered_softmax(x, Temperature(1.0)); }

// log(sum_i exp(theta_i)) via max-subtraction.
inline double log_partition(const Vec& x) {
  if (x.empty()) throw empty_input_error("log_partition: empty input");
  double hi = x[0];
  for (double xi : x) hi = std::max(hi, xi);
  double z = 0.0;
  for (double xi : x) z += std::exp(xi - hi);
  return hi + std::log(z);
}

inline double log_partition(const Logits& theta) { return log_partition(theta.values()); }

// Jacobian of s = tempered_softmax(x, tau) with respect to x:
// J_ij = (s_i [i=j] - s_i s_j) / tau.  Symmetric; rows sum to zero.
inline Mat jacobian_from_probs(const Vec& s, const Temperature& tau) {
  const std::size_t n = s.size();
  const double inv_tau = 1.0 / tau.tau();
  Mat j(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    // Mirror each product so the symmetry is exact, not one rounding apart.
    for (std::size_t b = a; b < n; ++b) {
      const double v = -inv_tau * (s[a] * s[b]);
      j(a, b) = v;
      j(b, a) = v;
    }
    j(a, a) += inv_tau * s[a];
  }
  return j;
}

inline Mat tempered_softmax_jacobian(const Vec& x, const Temperature& tau) {
  return jacobian_from_probs(tempered_softmax(x, tau), tau);
}

inline Mat tempered_softmax_jacobian(const Vec& x, double tau) {
  return tempered_softmax_jacobian(x, Temperature(tau));
}

// Row-vector contraction g^T J without materializing J:
// (g^T J)_b = (g_b s_b - (g . s) s_b) / tau.  Writes into out (size n).
inline void row_times_jacobian_from_probs(const Vec& g, const Vec& s,
                                          double tau, Vec& out) {
  const std::size_t n = s.size();
  const double gs = dot(g, s);
  const double inv_tau = 1.0 / tau;
  out.resize(n);
  for (std::size_t b = 0; b < n; ++b) out[b] = inv_tau * (g[b] - gs) * s[b];
}

}  // namespace grk
