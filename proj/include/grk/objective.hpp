#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "grk/errors.hpp"
#include "grk/linalg.hpp"
#include "grk/rng.hpp"

namespace grk {

// Objective f over one-hot vertices and interior simplex points, with a
// user-supplied analytic gradient. The gradient is validated against central
// finite differences at registration: a wrong gradient silently corrupts
// every downstream variance measurement, so registration refuses it.
class ObjectiveSpec {
 public:
  using EvalFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;

  struct CallCounts {
    std::atomic<std::uint64_t> evals{0};
    std::atomic<std::uint64_t> grads{0};
  };

  ObjectiveSpec(std::size_t arity, EvalFn eval, GradFn grad, bool validate = true)
      : arity_(arity),
        eval_(std::move(eval)),
        grad_(std::move(grad)),
        counts_(std::make_shared<CallCounts>()) {
    if (arity_ < 2) throw dimension_error("ObjectiveSpec: arity must be >= 2");
    if (!eval_ || !grad_) throw domain_error("ObjectiveSpec: eval and grad required");
    if (validate) validate_gradient();
  }

  std::size_t arity() const { return arity_; }

  double value(const Vec& x) const {
    counts_->evals.fetch_add(1, std::memory_order_relaxed);
    return eval_(x);
  }

  Vec gradient(const Vec& x) const {
    counts_->grads.fetch_add(1, std::memory_order_relaxed);
    return grad_(x);
  }

  std::uint64_t eval_count() const {
    return counts_->evals.load(std::memory_order_relaxed);
  }
  std::uint64_t grad_count() const {
    return counts_->grads.load(std::memory_order_relaxed);
  }
  void reset_counts() const {
    counts_->evals.store(0, std::memory_order_relaxed);
    counts_->grads.store(0, std::memory_order_relaxed);
  }

 private:
  // Central finite differences at random interior points, relative error
  // gate 1e-5. Uses a fixed internal stream: registration is deterministic.
  void validate_gradient() const {
    RngStream rng(kValidationSeed, 0);
    const double step = 1e-6;
    for (int trial = 0; trial < 8; ++trial) {
      Vec x = random_interior_point(rng);
      const Vec g = grad_(x);
      if (g.size() != arity_)
        throw dimension_error("ObjectiveSpec: gradient has wrong dimension");
      double scale = 1.0;
      for (double gi : g) scale = std::max(scale, std::abs(gi));
      for (std::size_t c = 0; c < arity_; ++c) {
        Vec hi = x, lo = x;
        hi[c] += step;
        lo[c] -= step;
        const double fd = (eval_(hi) - eval_(lo)) / (2.0 * step);
        if (std::abs(fd - g[c]) > 1e-5 * scale)
          throw domain_error("ObjectiveSpec: gradient fails finite-difference check");
      }
    }
  }

  Vec random_interior_point(RngStream& rng) const {
    // Dirichlet-ish interior point via normalized exponentials, kept away
    // from the boundary so one-sided curvature cannot skew the check.
    Vec x(arity_);
    double total = 0.0;
    for (auto& xi : x) {
      xi = 0.1 - std::log(rng.next_unit());
      total += xi;
    }
    for (auto& xi : x) xi /= total;
    return x;
  }

  static constexpr std::uint64_t kValidationSeed = 0x9db4ef21c3a7ull;

  std::size_t arity_;
  EvalFn eval_;
  GradFn grad_;
  std::shared_ptr<CallCounts> counts_;
};

// Linear table objective: f(x) = sum_i table[i] * x_i. This is the
// multilinear extension of an arbitrary per-vertex value table, so it is
// defined on the whole simplex with constant gradient.
inline ObjectiveSpec make_table_objective(Vec table) {
  if (table.size() < 2) throw dimension_error("make_table_objective: need >= 2 entries");
  auto tbl = std::make_shared<Vec>(std::move(table));
  return ObjectiveSpec(
      tbl->size(), [tbl](const Vec& x) { return dot(*tbl, x); },
      [tbl](const Vec&) { return *tbl; });
}

inline ObjectiveSpec make_constant_objective(std::size_t arity, double value) {
  return ObjectiveSpec(
      arity, [value](const Vec&) { return value; },
      [arity](const Vec&) { return Vec(arity, 0.0); });
}

// Exponentially-decayed running mean of observed objective values, used as a
// control-variate baseline. Reads as 0 until the first update; the first
// update initializes the mean at the observed value.
class BaselineState {
 public:
  explicit BaselineState(double decay = 0.99) : decay_(decay) {
    if (!(decay > 0.0) || decay > 1.0)
      throw domain_error("BaselineState: decay must be in (0, 1]");
  }

  double value() const { return count_ ? mean_ : 0.0; }
  std::size_t count() const { return count_; }

  void update(double f) {
    if (count_ == 0)
      mean_ = f;
    else
      mean_ = decay_ * mean_ + (1.0 - decay_) * f;
    ++count_;
  }

 private:
  double decay_;
  double mean_ = 0.0;
  std::size_t count_ = 0;
};

// One estimator invocation's output: the parameter-space gradient estimate,
// which estimator produced it, and the stream that reproduces it.
struct GradientEstimate {
  Vec values;
  double f_value = 0.0;
  std::string estimator_id;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

}  // namespace grk
