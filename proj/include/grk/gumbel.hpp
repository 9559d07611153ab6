#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

#include "grk/linalg.hpp"
#include "grk/rng.hpp"
#include "grk/softmax.hpp"
#include "grk/types.hpp"

namespace grk {

// Standard Gumbel draw: -log(-log U), U uniform on the open (0,1).
inline double sample_gumbel(RngStream& rng) {
  return -std::log(-std::log(rng.next_unit()));
}

inline Vec sample_gumbel(RngStream& rng, std::size_t n) {
  if (n == 0) throw empty_input_error("sample_gumbel: n must be >= 1");
  Vec g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = sample_gumbel(rng);
  return g;
}

// Draws a categorical outcome as argmax(theta + G) together with the realized
// perturbation; the marginal law of the outcome is softmax(theta).
// Ties (probability zero) break to the lowest index.
inline std::pair<OneHotSample, PerturbedLogits> sample_categorical_gumbel_max(
    RngStream& rng, const Logits& theta) {
  const std::size_t n = theta.size();
  PerturbedLogits pert;
  pert.values.resize(n);
  std::size_t best = 0;
  for (std::size_t i = 0; i < n; ++i) {
    pert.values[i] = theta[i] - std::log(-std::log(rng.next_unit()));
    if (pert.values[i] > pert.values[best]) best = i;
  }
  OneHotSample d(best, n);
  pert.conditioned_on = d;
  return {d, pert};
}

inline std::pair<OneHotSample, PerturbedLogits> sample_categorical_gumbel_max(
    RngStream& rng, const Vec& theta) {
  return sample_categorical_gumbel_max(rng, Logits(theta));
}

namespace detail {

// log(exp(a) + exp(b)) without overflow.
inline double logsumexp2(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace detail

// One draw of the perturbation conditioned on the realized outcome: the
// active coordinate is logZ - log(E_i) and every other coordinate is
// -log(exp(log E_j - theta_j) + exp(log E_i - logZ)), with E ~ i.i.d. unit
// exponentials (-log U) and the sum evaluated in log-space. The active
// coordinate is the argmax by construction, always.
inline PerturbedLogits sample_posterior_gumbels(RngStream& rng, const Logits& theta,
                                                const OneHotSample& d) {
  const std::size_t n = theta.size();
  if (d.arity != n)
    throw dimension_error("sample_posterior_gumbels: outcome arity != logits size");
  const double log_z = log_partition(theta);
  Vec e(n);
  for (std::size_t j = 0; j < n; ++j) e[j] = -std::log(rng.next_unit());
  const double log_e_active = std::log(e[d.index]);
  PerturbedLogits pert;
  pert.values.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == d.index) {
      pert.values[j] = log_z - log_e_active;
    } else {
      pert.values[j] =
          -detail::logsumexp2(std::log(e[j]) - theta[j], log_e_active - log_z);
    }
  }
  pert.conditioned_on = d;
  return pert;
}

inline PerturbedLogits sample_posterior_gumbels(RngStream& rng, const Vec& theta,
                                                std::size_t d) {
  return sample_posterior_gumbels(rng, Logits(theta), OneHotSample(d, theta.size()));
}

// Fused sampler for the tempered softmax of a posterior perturbation.
//
// Shifting all coordinates by the active one gives softmax weights
//   s~_i = 1,   s~_j = (1 + t_j)^(-1/tau),   t_j = (E_j / E_i) * exp(logZ - theta_j),
// identical in exact arithmetic to tempered_softmax(sample_posterior_gumbels(..)).
// When 1/tau is a small integer the power is evaluated by repeated squaring,
// which removes every transcendental from the per-sample softmax and makes
// million-fold Rao-Blackwell averaging affordable on one core.
class PosteriorSoftmaxKernel {
 public:
  PosteriorSoftmaxKernel(const Logits& theta, const OneHotSample& d,
                         const Temperature& tau)
      : n_(theta.size()), active_(d.index), inv_tau_(1.0 / tau.tau()), w_(theta.size()) {
    if (d.arity != n_)
      throw dimension_error("PosteriorSoftmaxKernel: outcome arity != logits size");
    const double log_z = log_partition(theta);
    for (std::size_t j = 0; j < n_; ++j) w_[j] = std::exp(log_z - theta[j]);
    const double rounded = std::round(inv_tau_);
    if (rounded >= 1.0 && rounded <= 64.0 &&
        std::abs(inv_tau_ - rounded) <= 1e-12 * inv_tau_) {
      int_power_ = static_cast<int>(rounded);
    }
  }

  std::size_t size() const { return n_; }
  std::size_t active() const { return active_; }

  // e: n unit-exponential draws; s: n output probabilities (sums to 1).
  void probs(const double* e, double* s) const {
    const double inv_active = 1.0 / e[active_];
    double total = 1.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (j == active_) continue;
      const double t = e[j] * inv_active * w_[j];
      const double base = 1.0 + t;
      double weight;
      if (!std::isfinite(base)) {
        weight = 0.0;
      } else if (int_power_ > 0) {
        weight = 1.0 / powi(base, int_power_);
      } else {
        weight = std::pow(base, -inv_tau_);
      }
      s[j] = weight;
      total += weight;
    }
    const double inv_total = 1.0 / total;
    for (std::size_t j = 0; j < n_; ++j) s[j] *= inv_total;
    s[active_] = inv_total;
  }

 private:
  static double powi(double x, int m) {
    double acc = 1.0;
    while (m > 0) {
      if (m & 1) acc *= x;
      x *= x;
      m >>= 1;
    }
    return acc;
  }

  std::size_t n_;
  std::size_t active_;
  double inv_tau_;
  Vec w_;
  int int_power_ = 0;
};

// Reusable buffers for blocked posterior sampling.
struct PosteriorScratch {
  Vec e;
  Vec s;
  Vec acc;
};

// Mean over k posterior draws of the row contraction g^T J(perturbation),
// with J the tempered-softmax Jacobian at temperature tau. Exponential draws
// are generated in blocks so the log transform vectorizes. Writes the mean
// into out (size n).
inline void posterior_mean_row_contraction(RngStream& rng,
                                           const PosteriorSoftmaxKernel& kernel,
                                           const Vec& g, double tau, std::size_t k,
                                           Vec& out, PosteriorScratch& scratch) {
  const std::size_t n = kernel.size();
  const std::size_t block = std::max<std::size_t>(1, 4096 / n);
  scratch.e.resize(block * n);
  scratch.s.resize(n);
  scratch.acc.assign(n, 0.0);
  double* e = scratch.e.data();
  double* s = scratch.s.data();
  double* acc = scratch.acc.data();
  std::size_t remaining = k;
  while (remaining > 0) {
    const std::size_t m = std::min(block, remaining);
    for (std::size_t i = 0; i < m * n; ++i) e[i] = -std::log(rng.next_unit());
    for (std::size_t i = 0; i < m; ++i) {
      kernel.probs(e + i * n, s);
      double gs = 0.0;
      for (std::size_t b = 0; b < n; ++b) gs += g[b] * s[b];
      for (std::size_t b = 0; b < n; ++b) acc[b] += (g[b] - gs) * s[b];
    }
    remaining -= m;
  }
  const double scale = 1.0 / (tau * static_cast<double>(k));
  out.resize(n);
  for (std::size_t b = 0; b < n; ++b) out[b] = acc[b] * scale;
}

}  // namespace grk
