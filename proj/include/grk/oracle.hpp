#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "grk/errors.hpp"
#include "grk/estimators.hpp"
#include "grk/gumbel.hpp"
#include "grk/linalg.hpp"
#include "grk/objective.hpp"
#include "grk/parallel.hpp"
#include "grk/softmax.hpp"
#include "grk/stats.hpp"
#include "grk/types.hpp"

namespace grk {

inline constexpr std::size_t kEnumerationGuard = std::size_t(1) << 20;

// True gradient of E[f(D)] with respect to the logits, by enumerating the n
// one-hot outcomes: sum_d f(d) p(d) (onehot(d) - softmax(theta)).
inline Vec exact_gradient(const Logits& theta, const ObjectiveSpec& obj) {
  const std::size_t n = theta.size();
  if (obj.arity() != n) throw dimension_error("exact_gradient: arity mismatch");
  if (n > kEnumerationGuard) throw capacity_error("exact_gradient: outcome space too large");
  const Vec p = softmax1(theta.values());
  Vec grad(n, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    Vec vertex(n, 0.0);
    vertex[d] = 1.0;
    const double fd = obj.value(vertex);
    for (std::size_t c = 0; c < n; ++c) {
      const double dc = (c == d) ? 1.0 : 0.0;
      grad[c] += fd * p[d] * (dc - p[c]);
    }
  }
  return grad;
}

// Enumerated expectation of f under softmax(theta).
inline double exact_expectation(const Logits& theta, const ObjectiveSpec& obj) {
  const std::size_t n = theta.size();
  if (obj.arity() != n) throw dimension_error("exact_expectation: arity mismatch");
  const Vec p = softmax1(theta.values());
  double v = 0.0;
  for (std::size_t d = 0; d < n; ++d) {
    Vec vertex(n, 0.0);
    vertex[d] = 1.0;
    v += p[d] * obj.value(vertex);
  }
  return v;
}

// High-k Monte Carlo reference for the conditional expectation of the
// tempered-softmax Jacobian given an outcome, with a per-entry standard-error
// matrix. For a plain mean the delete-one jackknife standard error equals
// sqrt(sample variance / k), which is what the streaming accumulators give.
struct GrReference {
  Mat mean;
  Mat standard_error;
  std::size_t k_ref = 0;
};

inline GrReference gr_reference(RngStream rng, const Logits& theta,
                                const Temperature& tau, const OneHotSample& d,
                                std::size_t k_ref) {
  if (k_ref < 2) throw domain_error("gr_reference: k_ref must be >= 2");
  const std::size_t n = theta.size();
  const PosteriorSoftmaxKernel kernel(theta, d, tau);
  std::vector<MomentAccumulator> acc(n * n);
  Vec e(n), s(n);
  const double inv_tau = 1.0 / tau.tau();
  for (std::size_t slot = 0; slot < k_ref; ++slot) {
    for (std::size_t j = 0; j < n; ++j) e[j] = -std::log(rng.next_unit());
    kernel.probs(e.data(), s.data());
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        const double jab = inv_tau * (((a == b) ? s[a] : 0.0) - s[a] * s[b]);
        acc[a * n + b].push(jab);
      }
  }
  GrReference ref;
  ref.k_ref = k_ref;
  ref.mean = Mat(n, n);
  ref.standard_error = Mat(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      ref.mean(a, b) = acc[a * n + b].mean();
      ref.standard_error(a, b) =
          std::sqrt(acc[a * n + b].sample_variance() / static_cast<double>(k_ref));
    }
  return ref;
}

using EstimatorClosure = std::function<GradientEstimate(RngStream)>;

struct MeasureOptions {
  std::size_t chunk_size = 1024;
  unsigned n_threads = 0;  // 0 = hardware default; result is identical either way
};

namespace detail {

struct StatsChunk {
  VectorStatsAccumulator acc;
};

inline void check_finite_estimate(const Vec& v, const RngStream& stream,
                                  std::size_t replicate) {
  if (!all_finite(v))
    throw poisoned_run_error("non-finite estimate at replicate " +
                             std::to_string(replicate) + " (seed " +
                             std::to_string(stream.seed()) + ", stream " +
                             std::to_string(stream.stream()) + ")");
}

}  // namespace detail

// Replicated measurement of an estimator against a reference vector.
// Replicate i draws from base.substream(i); accumulation is chunked and
// merged in chunk order, so the result is independent of the worker count.
inline EstimatorStats measure_stats(const EstimatorClosure& estimator,
                                    const Vec& reference, std::size_t n_replicates,
                                    RngStream base, MeasureOptions opt = {}) {
  if (n_replicates < 100)
    throw domain_error("measure_stats: need at least 100 replicates");
  auto chunk_fn = [&](detail::StatsChunk& out, std::size_t b, std::size_t e,
                      std::size_t) {
    out.acc = VectorStatsAccumulator(reference);
    for (std::size_t i = b; i < e; ++i) {
      RngStream stream = base.substream(i);
      const GradientEstimate est = estimator(stream);
      detail::check_finite_estimate(est.values, stream, i);
      out.acc.push(est.values);
    }
  };
  auto merge_fn = [](detail::StatsChunk& into, const detail::StatsChunk& from) {
    if (!from.acc.initialized()) return;
    if (!into.acc.initialized())
      into.acc = from.acc;
    else
      into.acc.merge(from.acc);
  };
  detail::StatsChunk total = chunked_map_reduce<detail::StatsChunk>(
      n_replicates, opt.chunk_size, chunk_fn, merge_fn, opt.n_threads);
  return finalize_stats(total.acc);
}

// Paired MSE comparison: both closures are handed the *same* replicate
// stream, so Gumbel-coupled estimators share the discrete outcome draw and
// the difference of squared errors is measured with a matched-pairs CI.
struct PairedMseComparison {
  double mse_a = 0.0;
  double mse_b = 0.0;
  double delta_mean = 0.0;  // mean of (||a-ref||^2 - ||b-ref||^2)
  double delta_se = 0.0;    // standard error of that mean
  std::size_t n_replicates = 0;
};

inline PairedMseComparison compare_mse(const EstimatorClosure& a,
                                       const EstimatorClosure& b, const Vec& reference,
                                       std::size_t n_replicates, RngStream base,
                                       MeasureOptions opt = {}) {
  if (n_replicates < 100) throw domain_error("compare_mse: need at least 100 replicates");
  struct Chunk {
    MomentAccumulator qa, qb, delta;
  };
  auto sq_err = [&](const Vec& v) {
    double q = 0.0;
    for (std::size_t c = 0; c < reference.size(); ++c) {
      const double d = v[c] - reference[c];
      q += d * d;
    }
    return q;
  };
  auto chunk_fn = [&](Chunk& out, std::size_t lo, std::size_t hi, std::size_t) {
    for (std::size_t i = lo; i < hi; ++i) {
      RngStream stream = base.substream(i);
      const GradientEstimate ea = a(stream);
      const GradientEstimate eb = b(stream);
      detail::check_finite_estimate(ea.values, stream, i);
      detail::check_finite_estimate(eb.values, stream, i);
      const double q_a = sq_err(ea.values);
      const double q_b = sq_err(eb.values);
      out.qa.push(q_a);
      out.qb.push(q_b);
      out.delta.push(q_a - q_b);
    }
  };
  auto merge_fn = [](Chunk& into, const Chunk& from) {
    into.qa.merge(from.qa);
    into.qb.merge(from.qb);
    into.delta.merge(from.delta);
  };
  Chunk total = chunked_map_reduce<Chunk>(n_replicates, opt.chunk_size, chunk_fn,
                                          merge_fn, opt.n_threads);
  PairedMseComparison cmp;
  cmp.n_replicates = n_replicates;
  cmp.mse_a = total.qa.mean();
  cmp.mse_b = total.qb.mean();
  cmp.delta_mean = total.delta.mean();
  cmp.delta_se =
      std::sqrt(total.delta.sample_variance() / static_cast<double>(n_replicates));
  return cmp;
}

// Law-of-total-variance decomposition of the minibatched Rao-Blackwellized
// estimator: within-outcome term a (divided by B*K) plus between-outcome term
// c (divided by B), validated against directly measured covariance traces.
struct DecompositionEntry {
  std::size_t b = 0;
  std::size_t k = 0;
  double predicted = 0.0;
  double measured = 0.0;
  double rel_error = 0.0;
};

struct DecompositionReport {
  double a = 0.0;  // E[ Var[stgs | outcome] ] (covariance trace)
  double c = 0.0;  // Var over outcomes of the conditional-expectation estimator
  std::vector<DecompositionEntry> entries;
  double max_rel_error = 0.0;
};

struct DecomposeOptions {
  std::size_t conditional_draws = 100000;  // posterior draws per outcome for a
  std::size_t k_ref = 1000000;             // reference draws per outcome for c
  MeasureOptions measure;
};

inline DecompositionReport decompose_variance(RngStream rng, const Logits& theta,
                                              const Temperature& tau,
                                              const ObjectiveSpec& obj,
                                              const std::vector<std::size_t>& k_grid,
                                              const std::vector<std::size_t>& b_grid,
                                              std::size_t n_replicates,
                                              DecomposeOptions opt = {}) {
  if (k_grid.empty() || b_grid.empty())
    throw domain_error("decompose_variance: grids must be nonempty");
  const std::size_t n = theta.size();
  if (n > kEnumerationGuard) throw capacity_error("decompose_variance: arity too large");
  const Vec p = softmax1(theta.values());
  const double tau_val = tau.tau();

  // a: for each outcome, the covariance trace of grad_f(d)^T J over posterior
  // draws, weighted by the outcome probability.
  double a = 0.0;
  for (std::size_t d_idx = 0; d_idx < n; ++d_idx) {
    const OneHotSample d(d_idx, n);
    const Vec g = obj.gradient(d.as_vector());
    const PosteriorSoftmaxKernel kernel(theta, d, tau);
    RngStream cond = rng.substream(1000 + d_idx);
    std::vector<MomentAccumulator> acc(n);
    Vec e(n), s(n), v(n);
    for (std::size_t i = 0; i < opt.conditional_draws; ++i) {
      for (std::size_t j = 0; j < n; ++j) e[j] = -std::log(cond.next_unit());
      kernel.probs(e.data(), s.data());
      row_times_jacobian_from_probs(g, s, tau_val, v);
      for (std::size_t c = 0; c < n; ++c) acc[c].push(v[c]);
    }
    double trace_d = 0.0;
    for (std::size_t c = 0; c < n; ++c) trace_d += acc[c].sample_variance();
    a += p[d_idx] * trace_d;
  }

  // c: exact enumeration over outcomes of the variance of g(d)^T E[J | d],
  // with the conditional expectation taken from the high-k reference.
  std::vector<Vec> v_d(n);
  for (std::size_t d_idx = 0; d_idx < n; ++d_idx) {
    const OneHotSample d(d_idx, n);
    const Vec g = obj.gradient(d.as_vector());
    const GrReference ref =
        gr_reference(rng.substream(2000 + d_idx), theta, tau, d, opt.k_ref);
    v_d[d_idx] = vec_mat(g, ref.mean);
  }
  double c = 0.0;
  for (std::size_t coord = 0; coord < n; ++coord) {
    double first = 0.0, second = 0.0;
    for (std::size_t d_idx = 0; d_idx < n; ++d_idx) {
      first += p[d_idx] * v_d[d_idx][coord];
      second += p[d_idx] * v_d[d_idx][coord] * v_d[d_idx][coord];
    }
    c += second - first * first;
  }
  c = std::max(0.0, c);

  const Vec reference = exact_gradient(theta, obj);
  DecompositionReport report;
  report.a = a;
  report.c = c;
  std::size_t cell = 0;
  for (std::size_t b : b_grid) {
    for (std::size_t k : k_grid) {
      auto closure = [&, b, k](RngStream stream) {
        return estimate_grmc_minibatched(stream, theta, tau, obj, k, b);
      };
      const EstimatorStats st = measure_stats(
          closure, reference, n_replicates, rng.substream(3000 + cell), opt.measure);
      DecompositionEntry entry;
      entry.b = b;
      entry.k = k;
      entry.predicted = a / (static_cast<double>(b) * static_cast<double>(k)) +
                        c / static_cast<double>(b);
      entry.measured = st.cov_trace;
      const double denom = std::max(std::abs(entry.measured), 1e-300);
      entry.rel_error = std::abs(entry.predicted - entry.measured) / denom;
      report.max_rel_error = std::max(report.max_rel_error, entry.rel_error);
      report.entries.push_back(entry);
      ++cell;
    }
  }
  return report;
}

}  // namespace grk
