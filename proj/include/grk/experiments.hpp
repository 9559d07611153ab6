#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "grk/errors.hpp"
#include "grk/estimators.hpp"
#include "grk/oracle.hpp"
#include "grk/qp.hpp"
#include "grk/types.hpp"

namespace grk {

// Which single-variable estimator to run, with its sample-count parameters.
enum class EstimatorKind { kReinforce, kGS, kST, kSTGS, kGRMC };

struct EstimatorChoice {
  EstimatorKind kind = EstimatorKind::kSTGS;
  std::size_t k = 1;  // posterior draws (kGRMC)
  std::size_t b = 1;  // minibatch of independent outcome draws (kGRMC)
};

inline std::string estimator_label(const EstimatorChoice& c) {
  switch (c.kind) {
    case EstimatorKind::kReinforce: return "reinforce";
    case EstimatorKind::kGS: return "gs";
    case EstimatorKind::kST: return "st";
    case EstimatorKind::kSTGS: return "stgs";
    case EstimatorKind::kGRMC: return "grmc" + std::to_string(c.k);
  }
  return "?";
}

// Accepts "reinforce", "gs", "st", "stgs", "grmc", "grmc<K>".
inline EstimatorChoice parse_estimator_label(const std::string& label) {
  EstimatorChoice c;
  if (label == "reinforce") {
    c.kind = EstimatorKind::kReinforce;
  } else if (label == "gs") {
    c.kind = EstimatorKind::kGS;
  } else if (label == "st") {
    c.kind = EstimatorKind::kST;
  } else if (label == "stgs") {
    c.kind = EstimatorKind::kSTGS;
  } else if (label.rfind("grmc", 0) == 0) {
    c.kind = EstimatorKind::kGRMC;
    const std::string suffix = label.substr(4);
    if (!suffix.empty()) {
      if (suffix.find_first_not_of("0123456789") != std::string::npos)
        throw usage_error("estimator label: bad draw count in " + label);
      try {
        c.k = static_cast<std::size_t>(std::stoull(suffix));
      } catch (const std::exception&) {
        throw usage_error("estimator label: bad draw count in " + label);
      }
    }
    if (c.k == 0) throw usage_error("estimator label: K must be >= 1");
  } else {
    throw usage_error("unknown estimator label: " + label);
  }
  return c;
}

inline GradientEstimate run_estimator(const EstimatorChoice& choice, RngStream rng,
                                      const Logits& theta, const Temperature& tau,
                                      const ObjectiveSpec& obj) {
  switch (choice.kind) {
    case EstimatorKind::kReinforce: return estimate_reinforce(rng, theta, obj);
    case EstimatorKind::kGS: return estimate_gs(rng, theta, tau, obj);
    case EstimatorKind::kST: return estimate_st(rng, theta, tau, obj);
    case EstimatorKind::kSTGS: return estimate_stgs(rng, theta, tau, obj);
    case EstimatorKind::kGRMC:
      if (choice.b > 1)
        return estimate_grmc_minibatched(rng, theta, tau, obj, choice.k, choice.b);
      return estimate_grmc(rng, theta, tau, obj, choice.k);
  }
  throw usage_error("run_estimator: unknown kind");
}

// Barycentric lattice on the simplex: points k/resolution with every
// coordinate at least margin.
struct SimplexGrid {
  std::size_t resolution = 0;
  double margin = 0.0;
  std::vector<Vec> points;
};

inline SimplexGrid make_simplex_grid(std::size_t n, std::size_t resolution,
                                     double margin) {
  if (n < 2) throw dimension_error("make_simplex_grid: need n >= 2");
  if (resolution < 1) throw domain_error("make_simplex_grid: resolution must be >= 1");
  SimplexGrid grid;
  grid.resolution = resolution;
  grid.margin = margin;
  std::vector<std::size_t> k(n, 0);
  // Walk all compositions of `resolution` into n parts.
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos,
                                                          std::size_t left) {
    if (pos + 1 == n) {
      k[pos] = left;
      Vec p(n);
      for (std::size_t i = 0; i < n; ++i)
        p[i] = static_cast<double>(k[i]) / static_cast<double>(resolution);
      for (double pi : p)
        if (pi < margin) return;
      grid.points.push_back(std::move(p));
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      k[pos] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, resolution);
  return grid;
}

// One row of the variance map: covariance trace of an estimator at one grid
// point and temperature, in log10, with a 4-sigma radius propagated into
// log10 units.
struct VarianceMapRow {
  std::size_t point_index = 0;
  Vec p;
  double tau = 0.0;
  std::string estimator;
  double log10_trace = 0.0;
  double ci_radius = 0.0;
};

struct VarianceMapResult {
  std::vector<VarianceMapRow> rows;
  std::vector<std::size_t> skipped_points;  // degenerate A(p) denominators
};

inline VarianceMapResult variance_map(const QpSpec& spec, const std::vector<double>& taus,
                                      const std::vector<EstimatorChoice>& estimators,
                                      const SimplexGrid& grid, std::size_t n_replicates,
                                      RngStream base, MeasureOptions opt = {}) {
  VarianceMapResult result;
  for (std::size_t pi = 0; pi < grid.points.size(); ++pi) {
    const Vec& p = grid.points[pi];
    Vec log_p(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) log_p[i] = std::log(p[i]);
    const Logits theta(log_p);
    std::size_t cell = pi * taus.size() * estimators.size();
    try {
      const ObjectiveSpec obj = qp_objective_spec(theta, spec);
      const Vec reference = exact_gradient(theta, obj);
      for (std::size_t ti = 0; ti < taus.size(); ++ti) {
        const Temperature tau(taus[ti]);
        for (std::size_t ei = 0; ei < estimators.size(); ++ei, ++cell) {
          const EstimatorChoice& choice = estimators[ei];
          auto closure = [&](RngStream stream) {
            return run_estimator(choice, stream, theta, tau, obj);
          };
          const EstimatorStats st = measure_stats(closure, reference, n_replicates,
                                                  base.substream(cell), opt);
          VarianceMapRow row;
          row.point_index = pi;
          row.p = p;
          row.tau = taus[ti];
          row.estimator = estimator_label(choice);
          const double trace = std::max(st.cov_trace, 1e-300);
          row.log10_trace = std::log10(trace);
          row.ci_radius = st.ci_cov_trace / (trace * std::log(10.0));
          result.rows.push_back(std::move(row));
        }
      }
    } catch (const degenerate_point_error&) {
      result.skipped_points.push_back(pi);
    }
  }
  return result;
}

// One SGD trajectory on the simplex QP, logging the exact enumerated
// objective (never a Monte Carlo value) at every iterate.
struct TrainPoint {
  std::size_t iteration = 0;
  double value = 0.0;
  Vec theta;
};

struct TrainRun {
  std::string estimator;
  double tau = 0.0;
  double lr = 0.0;
  std::size_t iters = 0;
  std::uint64_t seed = 0;
  std::vector<TrainPoint> trajectory;  // iters+1 entries, including theta_0
};

// Initial logits for a training run: a fixed displaced ramp, permuted and
// jittered per seed. Every run starts well away from the optimum (for the
// default problem the optimum is the uniform distribution, so a plain uniform
// cube draw would often start already below the loss thresholds the
// convergence protocol measures) while staying inside the region where the
// stochastic reformulation is well conditioned (all p_i < 2/3 keeps clear of
// the reformulation's denominator zeros) and where the softmax is responsive
// rather than saturated.
inline Vec train_initial_logits(std::size_t n, RngStream& init) {
  Vec theta(n);
  const double half = 0.5 * static_cast<double>(n - 1);
  const double scale = (half > 0.0) ? 0.8 / half : 0.0;
  for (std::size_t i = 0; i < n; ++i)
    theta[i] = scale * (half - static_cast<double>(i));
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j =
        static_cast<std::size_t>(init.next_unit() * static_cast<double>(i + 1));
    std::swap(theta[i], theta[j > i ? i : j]);
  }
  for (double& t : theta) t += 0.1 * (2.0 * init.next_unit() - 1.0);
  return theta;
}

// Plain SGD theta <- theta - lr * estimate. Fills `out` incrementally so a
// divergence error still leaves the partial trajectory with the caller.
inline void train_qp(const QpSpec& spec, const EstimatorChoice& choice,
                     const Temperature& tau, double lr, std::size_t iters,
                     std::uint64_t seed, TrainRun& out) {
  if (!(lr >= 0.0) || !std::isfinite(lr))
    throw domain_error("train_qp: lr must be a finite nonnegative real");
  out.estimator = estimator_label(choice);
  out.tau = tau.tau();
  out.lr = lr;
  out.iters = iters;
  out.seed = seed;
  out.trajectory.clear();
  out.trajectory.reserve(iters + 1);
  RngStream rng(seed, 0);
  RngStream init = rng.substream(~std::uint64_t(0));
  Vec theta_v = train_initial_logits(spec.n, init);
  for (std::size_t it = 0;; ++it) {
    if (!all_finite(theta_v))
      throw divergence_error("train_qp: non-finite parameters at iteration " +
                             std::to_string(it));
    const Vec p = softmax1(theta_v);
    for (double pi : p)
      if (!(pi > 0.0))
        throw divergence_error(
            "train_qp: parameters left the representable simplex interior at "
            "iteration " +
            std::to_string(it));
    const Logits theta(theta_v);
    out.trajectory.push_back({it, qp_deterministic_value(p, spec), theta_v});
    if (it == iters) break;
    const ObjectiveSpec obj = qp_objective_spec(theta, spec);
    const GradientEstimate g = run_estimator(choice, rng.substream(it), theta, tau, obj);
    // The estimator supplies the sampling-path component (the objective's
    // matrix is frozen inside each estimate). The matrix's own dependence on
    // the parameters is deterministic, so its exact contribution — the full
    // value gradient minus the enumerated sampling-path gradient — is added in
    // closed form. An unbiased estimator then makes the update an unbiased
    // step along the gradient of the logged objective; without this term the
    // update follows a non-gradient field with spurious attractors.
    const Vec path_fix = qp_value_gradient(theta_v, spec);
    const Vec score_exact = exact_gradient(theta, obj);
    for (std::size_t c = 0; c < spec.n; ++c)
      theta_v[c] -= lr * (g.values[c] + path_fix[c] - score_exact[c]);
  }
}

inline TrainRun train_qp(const QpSpec& spec, const EstimatorChoice& choice,
                         const Temperature& tau, double lr, std::size_t iters,
                         std::uint64_t seed) {
  TrainRun run;
  train_qp(spec, choice, tau, lr, iters, seed, run);
  return run;
}

// First logged iteration whose exact objective is at or below the threshold;
// iters+1 when the run never reaches it (non-reachers sort last in medians).
inline std::size_t iterations_to_threshold(const TrainRun& run, double threshold) {
  for (const TrainPoint& pt : run.trajectory)
    if (pt.value <= threshold) return pt.iteration;
  return run.iters + 1;
}

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) throw empty_input_error("median_of: empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return (n % 2 == 1) ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Per-estimator learning-rate tuning on a logarithmic grid: pick the rate
// with the best (lowest) median iterations-to-threshold over a few seeds,
// breaking ties toward the smaller rate.
struct LrTuneResult {
  double lr = 0.0;
  double median_iters = 0.0;
};

inline LrTuneResult tune_lr(const QpSpec& spec, const EstimatorChoice& choice,
                            const Temperature& tau, const std::vector<double>& lr_grid,
                            std::size_t iters, double threshold, std::size_t n_seeds,
                            std::uint64_t base_seed) {
  if (lr_grid.empty()) throw empty_input_error("tune_lr: empty grid");
  LrTuneResult best;
  bool first = true;
  for (double lr : lr_grid) {
    std::vector<double> its;
    its.reserve(n_seeds);
    for (std::size_t s = 0; s < n_seeds; ++s) {
      TrainRun run;
      try {
        train_qp(spec, choice, tau, lr, iters, base_seed + s, run);
        its.push_back(static_cast<double>(iterations_to_threshold(run, threshold)));
      } catch (const divergence_error&) {
        its.push_back(static_cast<double>(iters + 1));
      }
    }
    const double med = median_of(std::move(its));
    if (first || med < best.median_iters) {
      best.lr = lr;
      best.median_iters = med;
      first = false;
    }
  }
  return best;
}

}  // namespace grk
