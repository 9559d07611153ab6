#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include "grk/errors.hpp"
#include "grk/linalg.hpp"

namespace grk {

// Unnormalized log-probabilities of a categorical variable; the parameter
// every gradient in this library is taken with respect to.
class Logits {
 public:
  explicit Logits(Vec values) : v_(std::move(values)) {
    if (v_.size() < 2) throw dimension_error("Logits: need at least 2 categories");
    if (!all_finite(v_)) throw domain_error("Logits: entries must be finite");
  }

  std::size_t size() const { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  const Vec& values() const { return v_; }

 private:
  Vec v_;
};

// Realized discrete outcome in one-hot encoding, stored as (index, arity).
struct OneHotSample {
  std::size_t index = 0;
  std::size_t arity = 0;

  OneHotSample() = default;
  OneHotSample(std::size_t idx, std::size_t n) : index(idx), arity(n) {
    if (n < 1 || idx >= n) throw dimension_error("OneHotSample: index out of range");
  }

  Vec as_vector() const {
    Vec d(arity, 0.0);
    d[index] = 1.0;
    return d;
  }
};

// A realization of logits-plus-Gumbel-noise, either unconditional or drawn
// from the conditional law given an observed outcome.
struct PerturbedLogits {
  Vec values;
  std::optional<OneHotSample> conditioned_on;
};

// Strictly positive softmax temperature.
class Temperature {
 public:
  explicit Temperature(double tau) : tau_(tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
      throw domain_error("Temperature: tau must be a positive finite real");
  }
  double tau() const { return tau_; }

 private:
  double tau_;
};

}  // namespace grk
