#pragma once

#include <cstddef>
#include <string>

#include "grk/gumbel.hpp"
#include "grk/objective.hpp"
#include "grk/rng.hpp"
#include "grk/softmax.hpp"
#include "grk/types.hpp"

namespace grk {

// Stream discipline shared by every estimator: substream 0 carries the
// outcome/perturbation coupling, substream 1 carries post-outcome randomness.
// Two estimators invoked with the same parent stream therefore see the same
// discrete outcome, which is exactly the paired-replicate protocol the
// variance comparisons rely on.
namespace stream_id {
inline constexpr std::uint64_t kCoupling = 0;
inline constexpr std::uint64_t kPosterior = 1;
}  // namespace stream_id

// Score-function estimator: (f(D) - b) * (D - softmax(theta)), with b an
// optional running-mean baseline (updated after use). One f evaluation, no
// gradient evaluations.
inline GradientEstimate estimate_reinforce(RngStream rng, const Logits& theta,
                                           const ObjectiveSpec& obj,
                                           BaselineState* baseline = nullptr) {
  if (obj.arity() != theta.size())
    throw dimension_error("estimate_reinforce: arity mismatch");
  RngStream coupling = rng.substream(stream_id::kCoupling);
  const auto [d, pert] = sample_categorical_gumbel_max(coupling, theta);
  const double f = obj.value(d.as_vector());
  const double b = baseline ? baseline->value() : 0.0;
  const Vec p = softmax1(theta.values());
  GradientEstimate est;
  est.values.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double di = (i == d.index) ? 1.0 : 0.0;
    est.values[i] = (f - b) * (di - p[i]);
  }
  if (baseline) baseline->update(f);
  est.f_value = f;
  est.estimator_id = "reinforce";
  est.seed = rng.seed();
  est.stream = rng.stream();
  return est;
}

// Fully relaxed estimator: f is evaluated and differentiated at the relaxed
// point S = tempered_softmax(theta + G), and the gradient is pushed through
// the softmax Jacobian at the realized perturbation.
inline GradientEstimate estimate_gs(RngStream rng, const Logits& theta,
                                    const Temperature& tau, const ObjectiveSpec& obj) {
  if (obj.arity() != theta.size()) throw dimension_error("estimate_gs: arity mismatch");
  RngStream coupling = rng.substream(stream_id::kCoupling);
  const auto [d, pert] = sample_categorical_gumbel_max(coupling, theta);
  (void)d;
  const Vec s = tempered_softmax(pert.values, tau);
  GradientEstimate est;
  est.f_value = obj.value(s);
  const Vec g = obj.gradient(s);
  row_times_jacobian_from_probs(g, s, tau.tau(), est.values);
  est.estimator_id = "gs";
  est.seed = rng.seed();
  est.stream = rng.stream();
  return est;
}

// Straight-through with the surrogate Jacobian taken at the *unperturbed*
// logits: forward uses the discrete sample, backward uses d f/d D times the
// softmax Jacobian at theta (identical across replicates at fixed theta).
inline GradientEstimate estimate_st(RngStream rng, const Logits& theta,
                                    const Temperature& tau, const ObjectiveSpec& obj) {
  if (obj.arity() != theta.size()) throw dimension_error("estimate_st: arity mismatch");
  RngStream coupling = rng.substream(stream_id::kCoupling);
  const auto [d, pert] = sample_categorical_gumbel_max(coupling, theta);
  (void)pert;
  GradientEstimate est;
  est.f_value = obj.value(d.as_vector());
  const Vec g = obj.gradient(d.as_vector());
  const Vec s = tempered_softmax(theta.values(), tau);
  row_times_jacobian_from_probs(g, s, tau.tau(), est.values);
  est.estimator_id = "st";
  est.seed = rng.seed();
  est.stream = rng.stream();
  return est;
}

// Straight-through Gumbel-softmax: same as estimate_st but the surrogate
// Jacobian is taken at the realized perturbation theta + G, the one whose
// argmax produced the discrete sample.
inline GradientEstimate estimate_stgs(RngStream rng, const Logits& theta,
                                      const Temperature& tau, const ObjectiveSpec& obj) {
  if (obj.arity() != theta.size()) throw dimension_error("estimate_stgs: arity mismatch");
  RngStream coupling = rng.substream(stream_id::kCoupling);
  const auto [d, pert] = sample_categorical_gumbel_max(coupling, theta);
  GradientEstimate est;
  est.f_value = obj.value(d.as_vector());
  const Vec g = obj.gradient(d.as_vector());
  const Vec s = tempered_softmax(pert.values, tau);
  row_times_jacobian_from_probs(g, s, tau.tau(), est.values);
  est.estimator_id = "stgs";
  est.seed = rng.seed();
  est.stream = rng.stream();
  return est;
}

// Rao-Blackwellized straight-through: the surrogate Jacobian is replaced by
// its Monte Carlo conditional expectation given the realized outcome, using
// k posterior perturbation draws in a streaming mean (O(n) memory, f and its
// gradient evaluated exactly once regardless of k).
inline GradientEstimate estimate_grmc(RngStream rng, const Logits& theta,
                                      const Temperature& tau, const ObjectiveSpec& obj,
                                      std::size_t k) {
  if (k == 0) throw domain_error("estimate_grmc: k must be >= 1");
  if (obj.arity() != theta.size()) throw dimension_error("estimate_grmc: arity mismatch");
  RngStream coupling = rng.substream(stream_id::kCoupling);
  const auto [d, pert] = sample_categorical_gumbel_max(coupling, theta);
  (void)pert;
  GradientEstimate est;
  est.f_value = obj.value(d.as_vector());
  const Vec g = obj.gradient(d.as_vector());
  const PosteriorSoftmaxKernel kernel(theta, d, tau);
  RngStream posterior = rng.substream(stream_id::kPosterior);
  PosteriorScratch scratch;
  posterior_mean_row_contraction(posterior, kernel, g, tau.tau(), k, est.values,
                                 scratch);
  est.estimator_id = "grmc" + std::to_string(k);
  est.seed = rng.seed();
  est.stream = rng.stream();
  return est;
}

// Average of b independent Rao-Blackwellized estimates, each with its own
// outcome draw.
inline GradientEstimate estimate_grmc_minibatched(RngStream rng, const Logits& theta,
                                                  const Temperature& tau,
                                                  const ObjectiveSpec& obj,
                                                  std::size_t k, std::size_t b) {
  if (k == 0 || b == 0)
    throw domain_error("estimate_grmc_minibatched: k and b must be >= 1");
  GradientEstimate est;
  est.values.assign(theta.size(), 0.0);
  double f_sum = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    GradientEstimate one = estimate_grmc(rng.substream(i), theta, tau, obj, k);
    for (std::size_t c = 0; c < est.values.size(); ++c) est.values[c] += one.values[c];
    f_sum += one.f_value;
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  for (double& v : est.values) v *= inv_b;
  est.f_value = f_sum * inv_b;
  est.estimator_id = "grmc" + std::to_string(k) + "x" + std::to_string(b);
  est.seed = rng.seed();
  est.stream = rng.stream();
  return est;
}

}  // namespace grk
