#pragma once

#include <cmath>
#include <cstddef>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "grk/config.hpp"
#include "grk/estimators.hpp"
#include "grk/experiments.hpp"
#include "grk/gumbel.hpp"
#include "grk/io.hpp"
#include "grk/oracle.hpp"
#include "grk/qp.hpp"
#include "grk/scg.hpp"

namespace grk {

// ---------------------------------------------------------------- cmd_check

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

namespace checks {

inline CheckResult gumbel_moments(RngStream rng) {
  constexpr std::size_t n = 200000;
  const Vec g = sample_gumbel(rng, n);
  MomentAccumulator acc;
  for (double x : g) acc.push(x);
  const double euler = 0.57721566490153286;
  const double var = 1.6449340668482264;  // pi^2 / 6
  const double se_mean = std::sqrt(var / n);
  const double mean_err = std::abs(acc.mean() - euler);
  // 4-sigma radius for the sample variance from the fourth moment.
  const double v_of_var =
      std::max(0.0, acc.fourth_central() - acc.variance() * acc.variance()) / n;
  const double var_err = std::abs(acc.sample_variance() - var);
  CheckResult r{"gumbel_moments", true, 0.0, 0.0, ""};
  r.measured = std::max(mean_err / se_mean, var_err / std::sqrt(v_of_var));
  r.tolerance = 4.0;
  r.pass = r.measured <= r.tolerance;
  r.detail = "max z-score over mean and variance";
  return r;
}

inline CheckResult gumbel_max_marginal(RngStream rng) {
  constexpr std::size_t n = 200000;
  const Logits theta(Vec{0.0, std::log(3.0)});
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto [d, pert] = sample_categorical_gumbel_max(rng, theta);
    hits += (d.index == 1);
  }
  const double p = 0.75;
  const double z = std::abs(static_cast<double>(hits) / n - p) /
                   std::sqrt(p * (1.0 - p) / n);
  return {"gumbel_max_marginal", z <= 4.0, z, 4.0, "binomial z-score at p=0.75"};
}

inline CheckResult posterior_argmax(RngStream rng) {
  const Logits theta(Vec{0.5, -0.3, 1.1});
  std::size_t violations = 0;
  constexpr std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) {
    const OneHotSample d(i % 3, 3);
    const PerturbedLogits pert = sample_posterior_gumbels(rng, theta, d);
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c)
      if (pert.values[c] > pert.values[best]) best = c;
    violations += (best != d.index);
  }
  return {"posterior_argmax", violations == 0, static_cast<double>(violations), 0.0,
          "argmax violations over 1e5 conditioned draws"};
}

inline CheckResult posterior_moments(RngStream rng) {
  // Conditioned draws must match unconditional draws filtered by argmax,
  // coordinate-wise in mean and variance (two-sample 4-sigma).
  const Logits theta(Vec{0.5, -0.3, 1.1});
  const std::size_t target = 2; // condition on the most likely outcome
  constexpr std::size_t n_cond = 100000;
  RngStream rej = rng.substream(1);
  std::vector<MomentAccumulator> cond(3), filt(3);
  for (std::size_t i = 0; i < n_cond; ++i) {
    const PerturbedLogits pert =
        sample_posterior_gumbels(rng, theta, OneHotSample(target, 3));
    for (std::size_t c = 0; c < 3; ++c) cond[c].push(pert.values[c]);
  }
  std::size_t kept = 0;
  while (kept < n_cond) {
    auto [d, pert] = sample_categorical_gumbel_max(rej, theta);
    if (d.index != target) continue;
    for (std::size_t c = 0; c < 3; ++c) filt[c].push(pert.values[c]);
    ++kept;
  }
  double worst = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    const double se_mean = std::sqrt(cond[c].sample_variance() / n_cond +
                                     filt[c].sample_variance() / n_cond);
    worst = std::max(worst, std::abs(cond[c].mean() - filt[c].mean()) / se_mean);
    const double v1 = std::max(0.0, cond[c].fourth_central() -
                                        cond[c].variance() * cond[c].variance());
    const double v2 = std::max(0.0, filt[c].fourth_central() -
                                        filt[c].variance() * filt[c].variance());
    const double se_var = std::sqrt(v1 / n_cond + v2 / n_cond);
    worst = std::max(
        worst, std::abs(cond[c].sample_variance() - filt[c].sample_variance()) / se_var);
  }
  return {"posterior_moments", worst <= 4.0, worst, 4.0,
          "max two-sample z over coordinate means and variances"};
}

inline CheckResult jacobian_fd(RngStream rng, double tol) {
  double worst = 0.0;
  const std::size_t arities[] = {2, 3, 8};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = arities[trial % 3];
    Vec x(n);
    for (auto& xi : x) xi = 4.0 * rng.next_unit() - 2.0;
    const Temperature tau(0.1 + 1.9 * rng.next_unit());
    const Mat j = tempered_softmax_jacobian(x, tau);
    double scale = 1.0;
    for (double v : j.data) scale = std::max(scale, std::abs(v));
    const double step = 1e-6;
    for (std::size_t b = 0; b < n; ++b) {
      Vec hi = x, lo = x;
      hi[b] += step;
      lo[b] -= step;
      const Vec sh = tempered_softmax(hi, tau);
      const Vec sl = tempered_softmax(lo, tau);
      for (std::size_t a = 0; a < n; ++a) {
        const double fd = (sh[a] - sl[a]) / (2.0 * step);
        worst = std::max(worst, std::abs(fd - j(a, b)) / scale);
      }
    }
  }
  return {"jacobian_fd", worst < tol, worst, tol,
          "max relative error vs central differences, n in {2,3,8}"};
}

inline CheckResult jacobian_structure(RngStream rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 7;
    Vec x(n);
    for (auto& xi : x) xi = 4.0 * rng.next_unit() - 2.0;
    const Temperature tau(0.1 + 1.9 * rng.next_unit());
    const Mat j = tempered_softmax_jacobian(x, tau);
    for (std::size_t a = 0; a < n; ++a) {
      double row = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        row += j(a, b);
        worst = std::max(worst, std::abs(j(a, b) - j(b, a)));
      }
      worst = std::max(worst, std::abs(row));
    }
  }
  return {"jacobian_structure", worst <= 1e-14, worst, 1e-14,
          "max |row sum| and |J - J^T| entry"};
}

inline CheckResult softmax_simplex(RngStream rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 7;
    Vec x(n);
    for (auto& xi : x) xi = 2000.0 * rng.next_unit() - 1000.0;
    const Vec s = tempered_softmax(x, Temperature(0.1 + 1.9 * rng.next_unit()));
    double total = 0.0;
    for (double si : s) {
      if (si < 0.0 || si > 1.0 || !std::isfinite(si)) worst = 1.0;
      total += si;
    }
    worst = std::max(worst, std::abs(total - 1.0));
  }
  const Vec hard = tempered_softmax(Vec{1000.0, 0.0}, Temperature(1.0));
  worst = std::max(worst, std::abs(hard[0] - 1.0));
  return {"softmax_simplex", worst <= 1e-14, worst, 1e-14,
          "sum-to-one and range over extreme inputs"};
}

inline CheckResult log_partition_stability() {
  const double a = log_partition(Logits(Vec{1000.0, 1000.0}));
  const double b = log_partition(Logits(Vec{0.0, std::log(3.0)}));
  const double err = std::max(std::abs(a - (1000.0 + std::log(2.0))),
                              std::abs(b - std::log(4.0)));
  return {"log_partition_stability", err <= 1e-12, err, 1e-12,
          "huge-logit and exact-value cases"};
}

inline CheckResult reformulation_identity(RngStream rng) {
  const QpSpec spec = make_default_qp(3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Vec p(3);
    double total = 0.0;
    for (auto& pi : p) {
      pi = 0.05 - std::log(rng.next_unit());
      total += pi;
    }
    for (auto& pi : p) pi /= total;
    const Mat a = build_a_matrix(p, spec);
    double lhs = 0.0;
    for (std::size_t d = 0; d < 3; ++d) {
      Vec diff(3);
      for (std::size_t i = 0; i < 3; ++i) diff[i] = ((i == d) ? 1.0 : 0.0) - spec.c[i];
      lhs += p[d] * dot(diff, mat_vec(a, diff));
    }
    worst = std::max(worst, std::abs(lhs - qp_deterministic_value(p, spec)));
  }
  return {"reformulation_identity", worst <= 1e-12, worst, 1e-12,
          "enumerated stochastic objective vs deterministic quadratic"};
}

inline CheckResult exact_gradient_fd(RngStream rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 3;
    Vec table(n), theta_v(n);
    for (auto& t : table) t = 2.0 * rng.next_unit() - 1.0;
    for (auto& t : theta_v) t = 2.0 * rng.next_unit() - 1.0;
    const ObjectiveSpec obj = make_table_objective(table);
    const Logits theta(theta_v);
    const Vec g = exact_gradient(theta, obj);
    double scale = 1.0;
    for (double gi : g) scale = std::max(scale, std::abs(gi));
    const double step = 1e-6;
    for (std::size_t c = 0; c < n; ++c) {
      Vec hi = theta_v, lo = theta_v;
      hi[c] += step;
      lo[c] -= step;
      const double fh = exact_expectation(Logits(hi), obj);
      const double fl = exact_expectation(Logits(lo), obj);
      const double fd = (fh - fl) / (2.0 * step);
      worst = std::max(worst, std::abs(fd - g[c]) / scale);
    }
  }
  return {"exact_gradient_fd", worst < 1e-6, worst, 1e-6,
          "enumeration gradient vs finite differences of the expectation"};
}

inline CheckResult mse_identity(RngStream rng) {
  const Logits theta(Vec{0.3, -0.7, 1.2});
  const ObjectiveSpec obj = make_table_objective(Vec{0.9, -0.4, 0.2});
  const Vec ref = exact_gradient(theta, obj);
  const Temperature tau(0.5);
  auto closure = [&](RngStream stream) { return estimate_stgs(stream, theta, tau, obj); };
  const EstimatorStats st = measure_stats(closure, ref, 2000, rng);
  const double gap =
      std::abs(st.mse - (st.cov_trace + st.bias_norm * st.bias_norm));
  const double rel = gap / std::max(1e-300, st.mse);
  return {"mse_identity", rel <= 1e-10, rel, 1e-10,
          "relative gap of mse vs trace + bias^2"};
}

inline CheckResult reinforce_unbiased(RngStream rng) {
  const Logits theta(Vec{0.3, -0.7, 1.2});
  const ObjectiveSpec obj = make_table_objective(Vec{0.9, -0.4, 0.2});
  const Vec ref = exact_gradient(theta, obj);
  auto closure = [&](RngStream stream) { return estimate_reinforce(stream, theta, obj); };
  const EstimatorStats st = measure_stats(closure, ref, 200000, rng);
  double worst = 0.0;
  for (std::size_t c = 0; c < ref.size(); ++c)
    worst = std::max(worst, std::abs(st.bias[c]) / (st.ci_mean[c] / 4.0));
  return {"reinforce_unbiased", worst <= 4.0, worst, 4.0,
          "max per-coordinate z-score of the mean vs enumeration"};
}

inline CheckResult determinism_streams() {
  RngStream a(123, 7), b(123, 7);
  bool same = true;
  for (int i = 0; i < 1000; ++i) same = same && (a.next_u64() == b.next_u64());
  const Logits theta(Vec{0.2, -0.1, 0.4});
  RngStream s1(9, 1), s2(9, 1);
  const Vec g1 = sample_gumbel(s1, 16), g2 = sample_gumbel(s2, 16);
  same = same && (g1 == g2);
  const ObjectiveSpec obj = make_table_objective(Vec{1.0, 2.0, -0.5});
  const GradientEstimate e1 = estimate_grmc(RngStream(5, 3), theta, Temperature(0.3), obj, 64);
  const GradientEstimate e2 = estimate_grmc(RngStream(5, 3), theta, Temperature(0.3), obj, 64);
  same = same && (e1.values == e2.values);
  RngStream parent(11, 0);
  same = same && (parent.substream(4).next_u64() == parent.substream(4).next_u64());
  return {"determinism_streams", same, same ? 0.0 : 1.0, 0.0,
          "bit-identical replay across raw draws and estimators"};
}

inline CheckResult single_evaluation() {
  const Logits theta(Vec{0.2, -0.1, 0.4});
  const ObjectiveSpec obj = make_table_objective(Vec{1.0, 2.0, -0.5});
  const Temperature tau(0.4);
  bool ok = true;
  auto expect = [&](std::uint64_t evals, std::uint64_t grads) {
    ok = ok && obj.eval_count() == evals && obj.grad_count() == grads;
    obj.reset_counts();
  };
  obj.reset_counts();
  estimate_st(RngStream(1, 0), theta, tau, obj);
  expect(1, 1);
  estimate_stgs(RngStream(1, 1), theta, tau, obj);
  expect(1, 1);
  for (std::size_t k : {std::size_t(1), std::size_t(10), std::size_t(1000)}) {
    estimate_grmc(RngStream(1, 2), theta, tau, obj, k);
    expect(1, 1);
  }
  estimate_reinforce(RngStream(1, 3), theta, obj);
  expect(1, 0);
  return {"single_evaluation", ok, ok ? 0.0 : 1.0, 0.0,
          "objective call counts per estimate"};
}

}  // namespace checks

inline int cmd_check(const RunConfig& cfg) {
  RngStream rng(cfg.seed, 0);
  std::vector<CheckResult> results;
  results.push_back(checks::gumbel_moments(rng.substream(0)));
  results.push_back(checks::gumbel_max_marginal(rng.substream(1)));
  results.push_back(checks::posterior_argmax(rng.substream(2)));
  results.push_back(checks::posterior_moments(rng.substream(3)));
  results.push_back(checks::jacobian_fd(rng.substream(4), cfg.jacobian_tol));
  results.push_back(checks::jacobian_structure(rng.substream(5)));
  results.push_back(checks::softmax_simplex(rng.substream(6)));
  results.push_back(checks::log_partition_stability());
  results.push_back(checks::reformulation_identity(rng.substream(7)));
  results.push_back(checks::exact_gradient_fd(rng.substream(8)));
  results.push_back(checks::mse_identity(rng.substream(9)));
  results.push_back(checks::reinforce_unbiased(rng.substream(10)));
  results.push_back(checks::determinism_streams());
  results.push_back(checks::single_evaluation());

  nlohmann::json report;
  report["version"] = 1;
  bool all_pass = true;
  nlohmann::json checks_json = nlohmann::json::array();
  for (const CheckResult& r : results) {
    all_pass = all_pass && r.pass;
    checks_json.push_back({{"name", r.name},
                           {"pass", r.pass},
                           {"measured", r.measured},
                           {"tolerance", r.tolerance},
                           {"detail", r.detail}});
    if (!r.pass) std::cerr << "check failed: " << r.name << "\n";
  }
  report["checks"] = checks_json;
  report["all_pass"] = all_pass;
  OutputSink sink(cfg.out);
  sink.stream() << report.dump(2) << "\n";
  sink.finish();
  return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------- cmd_bench

inline int cmd_bench(const RunConfig& cfg) {
  const Vec theta_v = cfg.theta.empty() ? default_theta(cfg.n) : cfg.theta;
  const Logits theta(theta_v);
  const QpSpec qp = make_default_qp(cfg.n);
  const ObjectiveSpec obj = qp_objective_spec(theta, qp);
  const Vec reference = exact_gradient(theta, obj);
  const std::size_t replicates = cfg.replicates_or(100000);
  std::vector<std::string> estimators = cfg.estimators;
  if (estimators.empty()) estimators = {"reinforce", "gs", "st", "stgs", "grmc"};

  OutputSink sink(cfg.out);
  std::ostream& os = sink.stream();
  os << "estimator,tau,K,B,n,replicates";
  for (std::size_t c = 0; c < cfg.n; ++c) os << ",mean_" << c;
  os << ",cov_trace,bias_norm,mse,ci_radius\n";

  RngStream base(cfg.seed, 0);
  std::size_t row = 0;
  for (const std::string& label : estimators) {
    const EstimatorChoice parsed = parse_estimator_label(label);
    for (double tau_v : cfg.taus) {
      const Temperature tau(tau_v);
      // Non-averaged estimators get a single (K=1, B=1) row per temperature.
      std::vector<std::pair<std::size_t, std::size_t>> kb;
      if (parsed.kind == EstimatorKind::kGRMC) {
        for (std::size_t b : cfg.bs)
          for (std::size_t k : cfg.ks) kb.emplace_back(k, b);
      } else {
        kb.emplace_back(1, 1);
      }
      for (auto [k, b] : kb) {
        EstimatorChoice choice = parsed;
        choice.k = k;
        choice.b = b;
        auto closure = [&](RngStream stream) {
          return run_estimator(choice, stream, theta, tau, obj);
        };
        const EstimatorStats st =
            measure_stats(closure, reference, replicates, base.substream(row));
        os << label << "," << format_g17(tau_v) << "," << k << "," << b << ","
           << cfg.n << "," << replicates;
        for (std::size_t c = 0; c < cfg.n; ++c) os << "," << format_g17(st.mean[c]);
        const double ci_radius =
            4.0 * std::sqrt(st.cov_trace / static_cast<double>(replicates));
        os << "," << format_g17(st.cov_trace) << "," << format_g17(st.bias_norm) << ","
           << format_g17(st.mse) << "," << format_g17(ci_radius) << "\n";
        ++row;
      }
    }
  }
  sink.finish();
  return 0;
}

// --------------------------------------------------------------- cmd_varmap

inline int cmd_varmap(const RunConfig& cfg) {
  const QpSpec qp = make_default_qp(cfg.n);
  const SimplexGrid grid = make_simplex_grid(cfg.n, cfg.grid_resolution, cfg.grid_margin);
  std::vector<std::string> labels = cfg.estimators;
  if (labels.empty()) labels = {"stgs", "grmc1000"};
  std::vector<EstimatorChoice> estimators;
  estimators.reserve(labels.size());
  for (const std::string& l : labels) estimators.push_back(parse_estimator_label(l));
  const std::size_t replicates = cfg.replicates_or(10000);

  const VarianceMapResult map = variance_map(qp, cfg.taus, estimators, grid, replicates,
                                             RngStream(cfg.seed, 0));
  for (std::size_t pi : map.skipped_points)
    std::cerr << "varmap: skipped degenerate grid point " << pi << "\n";

  OutputSink sink(cfg.out);
  std::ostream& os = sink.stream();
  if (cfg.n == 3)
    os << "p0,p1,p2,tau,estimator,log10_trace,ci_radius\n";
  else
    os << "point_index,tau,estimator,log10_trace,ci_radius\n";
  for (const VarianceMapRow& row : map.rows) {
    if (cfg.n == 3)
      os << format_g17(row.p[0]) << "," << format_g17(row.p[1]) << ","
         << format_g17(row.p[2]);
    else
      os << row.point_index;
    os << "," << format_g17(row.tau) << "," << row.estimator << ","
       << format_g17(row.log10_trace) << "," << format_g17(row.ci_radius) << "\n";
  }
  sink.finish();
  return 0;
}

// ------------------------------------------------------------ cmd_decompose

inline int cmd_decompose(const RunConfig& cfg) {
  const Vec theta_v = cfg.theta.empty() ? default_theta(cfg.n) : cfg.theta;
  const Logits theta(theta_v);
  const QpSpec qp = make_default_qp(cfg.n);
  const ObjectiveSpec obj = qp_objective_spec(theta, qp);
  const Temperature tau(cfg.taus.front());
  DecomposeOptions opt;
  opt.conditional_draws = cfg.conditional_draws;
  opt.k_ref = cfg.k_ref;
  const std::size_t replicates = cfg.replicates_or(100000);
  const DecompositionReport report = decompose_variance(
      RngStream(cfg.seed, 0), theta, tau, obj, cfg.ks, cfg.bs, replicates, opt);

  nlohmann::json j;
  j["version"] = 1;
  j["tau"] = tau.tau();
  j["a_within_outcome"] = report.a;
  j["c_between_outcome"] = report.c;
  j["max_rel_error"] = report.max_rel_error;
  nlohmann::json entries = nlohmann::json::array();
  for (const DecompositionEntry& e : report.entries)
    entries.push_back({{"b", e.b},
                       {"k", e.k},
                       {"predicted", e.predicted},
                       {"measured", e.measured},
                       {"rel_error", e.rel_error}});
  j["entries"] = entries;
  OutputSink sink(cfg.out);
  sink.stream() << j.dump(2) << "\n";
  sink.finish();
  return 0;
}

// ---------------------------------------------------------------- cmd_train

inline int cmd_train(const RunConfig& cfg) {
  const QpSpec qp = make_default_qp(cfg.n);
  const QpSolution sol = solve_qp(qp);
  const double threshold = sol.v_star + cfg.threshold_offset;
  std::vector<std::string> labels = cfg.estimators;
  if (labels.empty()) labels = {"stgs", "grmc1000"};
  const Temperature tau(cfg.taus.front());

  nlohmann::json summary;
  summary["version"] = 1;
  summary["v_star"] = sol.v_star;
  summary["threshold"] = threshold;
  summary["tau"] = tau.tau();
  summary["lr"] = cfg.lr;
  nlohmann::json runs = nlohmann::json::array();
  std::map<std::string, std::vector<double>> per_estimator;

  const bool single_run = labels.size() == 1 && cfg.train_seeds == 1;
  int exit_code = 0;
  for (const std::string& label : labels) {
    const EstimatorChoice choice = parse_estimator_label(label);
    for (std::size_t s = 0; s < cfg.train_seeds; ++s) {
      const std::uint64_t seed = cfg.seed + s;
      TrainRun run;
      bool diverged = false;
      std::string divergence_message;
      try {
        train_qp(qp, choice, tau, cfg.lr, cfg.iters, seed, run);
      } catch (const divergence_error& e) {
        diverged = true;
        divergence_message = e.what();
        exit_code = 1;
      }
      std::string path = cfg.out;
      if (!path.empty() && !single_run)
        path += "." + label + ".seed" + std::to_string(seed) + ".csv";
      OutputSink sink(path);
      std::ostream& os = sink.stream();
      os << "iteration,exact_objective";
      for (std::size_t c = 0; c < cfg.n; ++c) os << ",theta_" << c;
      os << "\n";
      for (const TrainPoint& pt : run.trajectory) {
        os << pt.iteration << "," << format_g17(pt.value);
        for (std::size_t c = 0; c < cfg.n; ++c) os << "," << format_g17(pt.theta[c]);
        os << "\n";
      }
      sink.finish();
      const std::size_t its =
          diverged ? cfg.iters + 1 : iterations_to_threshold(run, threshold);
      per_estimator[label].push_back(static_cast<double>(its));
      nlohmann::json run_json = {{"estimator", label},
                                 {"seed", seed},
                                 {"iterations_to_threshold", its},
                                 {"reached", !diverged && its <= cfg.iters}};
      if (!run.trajectory.empty())
        run_json["final_value"] = run.trajectory.back().value;
      if (diverged) run_json["divergence"] = divergence_message;
      runs.push_back(run_json);
      if (diverged) std::cerr << "train: " << divergence_message << "\n";
    }
  }
  summary["runs"] = runs;
  nlohmann::json medians;
  for (const auto& [label, its] : per_estimator) medians[label] = median_of(its);
  summary["median_iterations_to_threshold"] = medians;

  const std::string summary_path = cfg.out.empty() ? "" : cfg.out + ".summary.json";
  OutputSink sink(summary_path);
  sink.stream() << summary.dump(2) << "\n";
  sink.finish();
  return exit_code;
}

inline int run_command(const RunConfig& cfg) {
  validate_config(cfg);
  // Reject bad estimator labels before any command opens its output sink, so a
  // usage error never leaves a partial file (or a lone CSV header) behind.
  for (const std::string& label : cfg.estimators) parse_estimator_label(label);
  if (cfg.command == "check") return cmd_check(cfg);
  if (cfg.command == "bench") return cmd_bench(cfg);
  if (cfg.command == "varmap") return cmd_varmap(cfg);
  if (cfg.command == "decompose") return cmd_decompose(cfg);
  if (cfg.command == "train") return cmd_train(cfg);
  throw usage_error("unknown command: " + cfg.command);
}

}  // namespace grk
