#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "grk/errors.hpp"
#include "grk/linalg.hpp"

namespace grk {

// Compensated accumulator (Kahan-Babuska/Neumaier variant) for long sums of
// near-cancelling terms; unlike plain Kahan it keeps the correction when a
// large addend cancels the running sum.
class KahanSum {
 public:
  void add(double x) {
    const double t = s_ + x;
    if (std::abs(s_) >= std::abs(x))
      c_ += (s_ - t) + x;
    else
      c_ += (x - t) + s_;
    s_ = t;
  }
  double value() const { return s_ + c_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Streaming central moments M1..M4 of a scalar sequence with an associative
// merge, so chunked (parallel) accumulation reproduces the serial result up
// to the merge order, which callers keep fixed.
class MomentAccumulator {
 public:
  void push(double x) {
    const double n1 = static_cast<double>(n_);
    ++n_;
    const double n = static_cast<double>(n_);
    const double delta = x - m1_;
    const double delta_n = delta / n;
    const double delta_n2 = delta_n * delta_n;
    const double term1 = delta * delta_n * n1;
    m1_ += delta_n;
    m4_ += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2_ -
           4.0 * delta_n * m3_;
    m3_ += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2_;
    m2_ += term1;
  }

  void merge(const MomentAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double delta = o.m1_ - m1_;
    const double d2 = delta * delta;
    const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
    const double m3 = m3_ + o.m3_ + d2 * delta * na * nb * (na - nb) / (n * n) +
                      3.0 * delta * (na * o.m2_ - nb * m2_) / n;
    const double m4 = m4_ + o.m4_ +
                      d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                      6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) +
                      4.0 * delta * (na * o.m3_ - nb * m3_) / n;
    m1_ += delta * nb / n;
    m2_ = m2;
    m3_ = m3;
    m4_ = m4;
    n_ += o.n_;
  }

  std::size_t count() const { return n_; }
  double mean() const { return m1_; }
  // Population (divide-by-N) variance, so downstream identities are exact.
  double variance() const { return n_ ? m2_ / static_cast<double>(n_) : 0.0; }
  double sample_variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  double m2() const { return m2_; }
  // Population fourth central moment.
  double fourth_central() const { return n_ ? m4_ / static_cast<double>(n_) : 0.0; }

 private:
  std::size_t n_ = 0;
  double m1_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

// Per-coordinate moment accumulators for a vector sequence, plus a scalar
// accumulator of the squared distance to a fixed reference (whose mean is the
// MSE against that reference).
class VectorStatsAccumulator {
 public:
  VectorStatsAccumulator() = default;
  explicit VectorStatsAccumulator(Vec reference)
      : ref_(std::move(reference)), coord_(ref_.size()) {}

  void push(const Vec& x) {
    if (x.size() != ref_.size())
      throw dimension_error("VectorStatsAccumulator: dimension mismatch");
    double q = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
      coord_[c].push(x[c]);
      const double d = x[c] - ref_[c];
      q += d * d;
    }
    sqdist_.push(q);
  }

  void merge(const VectorStatsAccumulator& o) {
    if (coord_.size() != o.coord_.size())
      throw dimension_error("VectorStatsAccumulator: merge dimension mismatch");
    for (std::size_t c = 0; c < coord_.size(); ++c) coord_[c].merge(o.coord_[c]);
    sqdist_.merge(o.sqdist_);
  }

  std::size_t count() const { return sqdist_.count(); }
  bool initialized() const { return !ref_.empty(); }
  const Vec& reference() const { return ref_; }
  const MomentAccumulator& coord(std::size_t c) const { return coord_[c]; }
  const MomentAccumulator& squared_distance() const { return sqdist_; }

 private:
  Vec ref_;
  std::vector<MomentAccumulator> coord_;
  MomentAccumulator sqdist_;
};

// Aggregated estimator statistics against a reference vector, with 4-sigma
// confidence radii on every reported quantity.
struct EstimatorStats {
  Vec mean;
  Vec bias;            // mean - reference
  double cov_trace = 0.0;
  double bias_norm = 0.0;
  double mse = 0.0;    // E ||estimate - reference||^2, accumulated directly
  std::size_t n_replicates = 0;
  Vec ci_mean;         // per-coordinate 4-sigma radius on the mean
  double ci_cov_trace = 0.0;
  double ci_bias_norm = 0.0;
  double ci_mse = 0.0;
};

// Folds the accumulated moments into EstimatorStats. Uses population
// (divide-by-N) covariance so that mse = cov_trace + ||bias||^2 is an exact
// algebraic identity of the accumulators; the residual is pure rounding and
// is checked against a 1e-10 relative gate.
inline EstimatorStats finalize_stats(const VectorStatsAccumulator& acc) {
  const std::size_t n_rep = acc.count();
  if (n_rep < 2) throw domain_error("finalize_stats: need at least 2 replicates");
  const std::size_t dim = acc.reference().size();
  EstimatorStats st;
  st.n_replicates = n_rep;
  st.mean.resize(dim);
  st.bias.resize(dim);
  st.ci_mean.resize(dim);
  const double n = static_cast<double>(n_rep);
  double trace = 0.0;
  double trace_ci = 0.0;
  double bias_sq = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    const MomentAccumulator& m = acc.coord(c);
    st.mean[c] = m.mean();
    st.bias[c] = m.mean() - acc.reference()[c];
    bias_sq += st.bias[c] * st.bias[c];
    const double var = m.variance();
    trace += var;
    st.ci_mean[c] = 4.0 * std::sqrt(var / n);
    // Var of a sample variance ~ (m4 - m2^2)/N; summed conservatively.
    const double v_of_var = std::max(0.0, m.fourth_central() - var * var) / n;
    trace_ci += std::sqrt(v_of_var);
  }
  st.cov_trace = trace;
  st.ci_cov_trace = 4.0 * trace_ci;
  st.bias_norm = std::sqrt(bias_sq);
  st.ci_bias_norm = 4.0 * std::sqrt(trace / n);
  st.mse = acc.squared_distance().mean();
  st.ci_mse = 4.0 * std::sqrt(acc.squared_distance().variance() / n);
  const double identity_gap = std::abs(st.mse - (st.cov_trace + bias_sq));
  if (identity_gap > 1e-10 * std::max(1e-300, st.mse))
    throw domain_error("finalize_stats: mse identity violated beyond tolerance");
  return st;
}

}  // namespace grk
