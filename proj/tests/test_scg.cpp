#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "grk/errors.hpp"
#include "grk/estimators.hpp"
#include "grk/oracle.hpp"
#include "grk/rng.hpp"
#include "grk/scg.hpp"
#include "grk/stats.hpp"

using grk::Mat;
using grk::Vec;

namespace {

grk::LinkFunction linear_link(Mat m, Vec offset) {
  const std::size_t n_in = m.cols;
  const std::size_t n_out = m.rows;
  return grk::LinkFunction(
      n_in, n_out,
      [m, offset](const Vec& d) {
        Vec out = grk::mat_vec(m, d);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += offset[i];
        return out;
      },
      [m](const Vec&) { return m; });
}

// f(x^1..x^m) = sum_j tables[j] . x^j  (separable, interior-friendly).
grk::ChainObjective additive_chain(std::vector<Vec> tables) {
  std::vector<std::size_t> arities;
  for (const Vec& t : tables) arities.push_back(t.size());
  auto tbl = std::make_shared<std::vector<Vec>>(std::move(tables));
  return grk::ChainObjective(
      arities,
      [tbl](const std::vector<Vec>& xs) {
        double v = 0.0;
        for (std::size_t j = 0; j < xs.size(); ++j) v += grk::dot((*tbl)[j], xs[j]);
        return v;
      },
      [tbl](const std::vector<Vec>&) { return *tbl; });
}

// f(x^1, x^2) = (t1 . x^1) * (t2 . x^2)  (couples the nodes).
grk::ChainObjective product_chain(Vec t1, Vec t2) {
  auto a = std::make_shared<Vec>(std::move(t1));
  auto b = std::make_shared<Vec>(std::move(t2));
  return grk::ChainObjective(
      {a->size(), b->size()},
      [a, b](const std::vector<Vec>& xs) {
        return grk::dot(*a, xs[0]) * grk::dot(*b, xs[1]);
      },
      [a, b](const std::vector<Vec>& xs) {
        std::vector<Vec> g(2);
        const double va = grk::dot(*a, xs[0]);
        const double vb = grk::dot(*b, xs[1]);
        g[0] = *a;
        for (double& v : g[0]) v *= vb;
        g[1] = *b;
        for (double& v : g[1]) v *= va;
        return g;
      });
}

}  // namespace

TEST_CASE("link functions validate their jacobian", "[scg]") {
  Mat m(2, 2);
  m(0, 0) = 1.0;
  m(0, 1) = -0.5;
  m(1, 0) = 0.25;
  m(1, 1) = 2.0;
  CHECK_NOTHROW(linear_link(m, {0.1, -0.2}));
  auto bad = [&]() {
    grk::LinkFunction(
        2, 2, [](const Vec& d) { return Vec{d[0] * d[0], d[1]}; },
        [](const Vec&) {
          Mat j(2, 2);
          j(0, 0) = 1.0;  // wrong: should be 2 d0
          j(1, 1) = 1.0;
          return j;
        });
  };
  CHECK_THROWS_AS(bad(), grk::domain_error);
}

TEST_CASE("chain objectives validate their partials", "[scg]") {
  CHECK_NOTHROW(additive_chain({{1.0, 0.0}, {0.5, -0.5}}));
  CHECK_NOTHROW(product_chain({1.0, -1.0}, {2.0, 0.5}));
  auto bad = [&]() {
    grk::ChainObjective(
        {2, 2},
        [](const std::vector<Vec>& xs) { return xs[0][0] * xs[1][0]; },
        [](const std::vector<Vec>&) {
          return std::vector<Vec>{{1.0, 0.0}, {1.0, 0.0}};  // wrong partials
        });
  };
  CHECK_THROWS_AS(bad(), grk::domain_error);
}

TEST_CASE("single-node graphs reduce to the single-variable estimators", "[scg]") {
  // Arranged so both paths draw from the same substream layout; the chain
  // machinery must then reproduce each flat estimator bit for bit.
  const Vec theta_v = {0.3, -0.7, 1.2};
  const grk::Logits theta(theta_v);
  const Vec table = {0.8, -0.1, 0.4};
  const grk::ObjectiveSpec flat = grk::make_table_objective(table);
  const grk::ChainObjective chain = additive_chain({table});
  const grk::RngStream stream(81, 5);

  auto chain_grad = [&](grk::SurrogateMode mode, std::size_t k) {
    grk::SurrogateSpec spec;
    spec.mode = mode;
    spec.tau = 0.5;
    spec.k = k;
    const grk::RealizedGraph g = grk::forward_parallel(stream, {theta}, chain, spec);
    return grk::backward_parallel(g)[0];
  };

  CHECK(chain_grad(grk::SurrogateMode::kReinforce, 1) ==
        grk::estimate_reinforce(stream, theta, flat).values);
  CHECK(chain_grad(grk::SurrogateMode::kGS, 1) ==
        grk::estimate_gs(stream, theta, grk::Temperature(0.5), flat).values);
  CHECK(chain_grad(grk::SurrogateMode::kST, 1) ==
        grk::estimate_st(stream, theta, grk::Temperature(0.5), flat).values);
  CHECK(chain_grad(grk::SurrogateMode::kSTGS, 1) ==
        grk::estimate_stgs(stream, theta, grk::Temperature(0.5), flat).values);
  CHECK(chain_grad(grk::SurrogateMode::kGRMC, 17) ==
        grk::estimate_grmc(stream, theta, grk::Temperature(0.5), flat, 17).values);
}

TEST_CASE("forward pass is mode-independent given the stream", "[scg]") {
  const std::vector<grk::Logits> thetas = {grk::Logits(Vec{0.2, -0.4}),
                                           grk::Logits(Vec{0.9, 0.1})};
  const grk::ChainObjective chain = additive_chain({{1.0, 0.0}, {0.0, 1.0}});
  const grk::RngStream stream(82, 0);
  grk::SurrogateSpec st{grk::SurrogateMode::kST, 0.7, 1};
  grk::SurrogateSpec grmc{grk::SurrogateMode::kGRMC, 0.7, 9};
  const grk::RealizedGraph a = grk::forward_parallel(stream, thetas, chain, st);
  const grk::RealizedGraph b = grk::forward_parallel(stream, thetas, chain, grmc);
  for (std::size_t j = 0; j < 2; ++j) {
    REQUIRE(a.nodes[j].sample.index == b.nodes[j].sample.index);
    REQUIRE(a.nodes[j].perturbation.values == b.nodes[j].perturbation.values);
  }
  CHECK(a.f.value == b.f.value);
}

TEST_CASE("f is evaluated exactly once per forward pass", "[scg]") {
  const std::vector<grk::Logits> thetas = {grk::Logits(Vec{0.2, -0.4}),
                                           grk::Logits(Vec{0.9, 0.1})};
  const grk::ChainObjective chain = product_chain({1.0, -1.0}, {2.0, 0.5});
  for (const auto mode : {grk::SurrogateMode::kReinforce, grk::SurrogateMode::kGS,
                          grk::SurrogateMode::kST, grk::SurrogateMode::kSTGS,
                          grk::SurrogateMode::kGRMC}) {
    chain.reset_counts();
    grk::SurrogateSpec spec{mode, 0.5, 50};
    const grk::RealizedGraph g =
        grk::forward_parallel(grk::RngStream(83, 0), thetas, chain, spec);
    REQUIRE(chain.eval_count() == 1);
    grk::backward_parallel(g);
    REQUIRE(chain.eval_count() == 1);  // backward never re-evaluates f
  }
}

TEST_CASE("hard-threshold credit ignores the other node's randomness", "[scg]") {
  // With a separable f and the surrogate Jacobian pinned at theta, node 1's
  // gradient is a deterministic function of theta alone.
  const std::vector<grk::Logits> thetas = {grk::Logits(Vec{0.2, -0.4}),
                                           grk::Logits(Vec{0.9, 0.1})};
  const grk::ChainObjective chain = additive_chain({{1.0, 0.0}, {0.3, -0.6}});
  grk::SurrogateSpec spec{grk::SurrogateMode::kST, 1.0, 1};
  Vec first;
  for (int i = 0; i < 100; ++i) {
    const grk::RealizedGraph g =
        grk::forward_parallel(grk::RngStream(84, i), thetas, chain, spec);
    const Vec grad = grk::backward_parallel(g)[0];
    if (i == 0)
      first = grad;
    else
      REQUIRE(grad == first);
  }
}

TEST_CASE("starred fields really are stop-gradients", "[scg]") {
  const std::vector<grk::Logits> thetas = {grk::Logits(Vec{0.2, -0.4}),
                                           grk::Logits(Vec{0.9, 0.1})};
  const grk::ChainObjective chain = product_chain({1.0, -1.0}, {2.0, 0.5});

  // Non-score modes never read the frozen f value.
  for (const auto mode : {grk::SurrogateMode::kGS, grk::SurrogateMode::kST,
                          grk::SurrogateMode::kSTGS, grk::SurrogateMode::kGRMC}) {
    grk::SurrogateSpec spec{mode, 0.5, 11};
    grk::RealizedGraph g =
        grk::forward_parallel(grk::RngStream(85, 1), thetas, chain, spec);
    const std::vector<Vec> before = grk::backward_parallel(g);
    g.f.value = g.f.value * 100.0 + 7.0;
    REQUIRE(grk::backward_parallel(g) == before);
  }

  // Score mode never reads the frozen partials.
  {
    grk::SurrogateSpec spec{grk::SurrogateMode::kReinforce, 1.0, 1};
    grk::RealizedGraph g =
        grk::forward_parallel(grk::RngStream(85, 2), thetas, chain, spec);
    const std::vector<Vec> before = grk::backward_parallel(g);
    for (Vec& pj : g.partials.value)
      for (double& v : pj) v = -v * 3.0 + 1.0;
    REQUIRE(grk::backward_parallel(g) == before);
  }

  // Posterior-averaging backward resamples its own noise: it must not read
  // the realized perturbation (only theta and the outcome).
  {
    grk::SurrogateSpec spec{grk::SurrogateMode::kGRMC, 0.5, 11};
    grk::RealizedGraph g =
        grk::forward_parallel(grk::RngStream(85, 3), thetas, chain, spec);
    const std::vector<Vec> before = grk::backward_parallel(g);
    for (auto& node : g.nodes)
      for (double& v : node.perturbation.values) v += 0.37;
    REQUIRE(grk::backward_parallel(g) == before);
    // And backward is pure: a second call gives identical output.
    REQUIRE(grk::backward_parallel(g) == before);
  }
}

TEST_CASE("parallel score gradients match joint enumeration", "[scg]") {
  const std::vector<grk::Logits> thetas = {grk::Logits(Vec{0.2, -0.4}),
                                           grk::Logits(Vec{0.9, 0.1}),
                                           grk::Logits(Vec{-0.3, 0.5})};
  const grk::ChainObjective chain = grk::ChainObjective(
      {2, 2, 2},
      [](const std::vector<Vec>& xs) {
        return xs[0][0] * (1.0 + xs[1][1]) + 0.5 * xs[2][0] * xs[1][0];
      },
      [](const std::vector<Vec>& xs) {
        return std::vector<Vec>{{1.0 + xs[1][1], 0.0},
                                {0.5 * xs[2][0], xs[0][0]},
                                {0.5 * xs[1][0], 0.0}};
      });
  grk::SurrogateSpec spec{grk::SurrogateMode::kReinforce, 1.0, 1};
  const int reps = 200000;
  std::vector<grk::VectorStatsAccumulator> acc;
  for (std::size_t j = 0; j < 3; ++j)
    acc.emplace_back(grk::exact_chain_gradient_parallel(thetas, chain, j));
  grk::RngStream base(86, 0);
  for (int i = 0; i < reps; ++i) {
    const grk::RealizedGraph g =
        grk::forward_parallel(base.substream(i), thetas, chain, spec);
    const std::vector<Vec> grads = grk::backward_parallel(g);
    for (std::size_t j = 0; j < 3; ++j) acc[j].push(grads[j]);
  }
  for (std::size_t j = 0; j < 3; ++j) {
    const grk::EstimatorStats st = grk::finalize_stats(acc[j]);
    for (std::size_t c = 0; c < 2; ++c) {
      INFO("node " << j << " coord " << c);
      REQUIRE(std::abs(st.bias[c]) < st.ci_mean[c]);
    }
  }
}

TEST_CASE("separable chains reduce to per-node enumerated gradients", "[scg]") {
  const std::vector<grk::Logits> thetas = {grk::Logits(Vec{0.2, -0.4, 0.1}),
                                           grk::Logits(Vec{0.9, 0.1})};
  const std::vector<Vec> tables = {{1.0, 0.0, -0.5}, {0.3, -0.6}};
  const grk::ChainObjective chain = additive_chain(tables);
  for (std::size_t j = 0; j < 2; ++j) {
    const Vec joint = grk::exact_chain_gradient_parallel(thetas, chain, j);
    const Vec solo =
        grk::exact_gradient(thetas[j], grk::make_table_objective(tables[j]));
    for (std::size_t c = 0; c < joint.size(); ++c) {
      REQUIRE(std::abs(joint[c] - solo[c]) < 1e-12);
    }
  }
}

TEST_CASE("posterior averaging beats the perturbed threshold on chains", "[scg]") {
  const std::vector<grk::Logits> thetas = {grk::Logits(Vec{0.2, -0.4}),
                                           grk::Logits(Vec{0.9, 0.1})};
  const grk::ChainObjective chain = product_chain({1.0, -1.0}, {2.0, 0.5});
  std::vector<Vec> exact(2);
  for (std::size_t j = 0; j < 2; ++j)
    exact[j] = grk::exact_chain_gradient_parallel(thetas, chain, j);
  grk::SurrogateSpec stgs{grk::SurrogateMode::kSTGS, 0.3, 1};
  grk::SurrogateSpec grmc{grk::SurrogateMode::kGRMC, 0.3, 100};
  grk::MomentAccumulator delta;   // ||stgs err||^2 - ||grmc err||^2, paired
  grk::RngStream base(87, 0);
  const int reps = 30000;
  for (int i = 0; i < reps; ++i) {
    grk::RngStream stream = base.substream(i);
    const grk::RealizedGraph ga = grk::forward_parallel(stream, thetas, chain, stgs);
    const grk::RealizedGraph gb = grk::forward_parallel(stream, thetas, chain, grmc);
    const std::vector<Vec> a = grk::backward_parallel(ga);
    const std::vector<Vec> b = grk::backward_parallel(gb);
    double qa = 0.0, qb = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t c = 0; c < 2; ++c) {
        qa += (a[j][c] - exact[j][c]) * (a[j][c] - exact[j][c]);
        qb += (b[j][c] - exact[j][c]) * (b[j][c] - exact[j][c]);
      }
    }
    delta.push(qa - qb);
  }
  const double se = std::sqrt(delta.sample_variance() / reps);
  CHECK(delta.mean() > 4.0 * se);
}

TEST_CASE("sequential forward threads samples through the links", "[scg]") {
  Mat m(2, 2);
  m(0, 0) = 0.8;
  m(0, 1) = -0.3;
  m(1, 0) = -0.1;
  m(1, 1) = 0.6;
  const grk::LinkFunction link = linear_link(m, {0.05, -0.2});
  const grk::ChainObjective chain = product_chain({1.0, -1.0}, {2.0, 0.5});
  const grk::Logits theta1(Vec{0.4, -0.4});
  grk::SurrogateSpec spec{grk::SurrogateMode::kSTGS, 0.5, 1};
  const grk::RealizedGraph g =
      grk::forward_sequential(grk::RngStream(88, 0), theta1, {link}, chain, spec);
  REQUIRE(g.sequential);
  REQUIRE(g.nodes.size() == 2);
  const Vec expect_theta2 = link.eval(g.nodes[0].sample.as_vector());
  CHECK(g.nodes[1].theta == expect_theta2);
}

TEST_CASE("a zero link makes the chain behave like a parallel graph", "[scg]") {
  const Vec frozen = {0.25, -0.75};
  const grk::LinkFunction link = linear_link(Mat(2, 2), frozen);  // h(d) = frozen
  const grk::ChainObjective chain = product_chain({1.0, -1.0}, {2.0, 0.5});
  const grk::Logits theta1(Vec{0.4, -0.4});
  const std::vector<grk::Logits> both = {theta1, grk::Logits(frozen)};
  for (const auto mode : {grk::SurrogateMode::kSTGS, grk::SurrogateMode::kGRMC}) {
    grk::SurrogateSpec spec{mode, 0.5, 7};
    for (int i = 0; i < 50; ++i) {
      const grk::RngStream stream(89, i);
      const grk::RealizedGraph seq =
          grk::forward_sequential(stream, theta1, {link}, chain, spec);
      const grk::RealizedGraph par = grk::forward_parallel(stream, both, chain, spec);
      // Same stream layout and the link is constant, so the whole realization
      // coincides and the downstream credit is annihilated by the zero
      // Jacobian: node 1's gradient must match the parallel one bitwise.
      REQUIRE(grk::backward_sequential(seq).theta1_grad ==
              grk::backward_parallel(par)[0]);
    }
  }
}

TEST_CASE("sequential score gradients match joint enumeration", "[scg]") {
  Mat m(2, 2);
  m(0, 0) = 1.1;
  m(0, 1) = -0.4;
  m(1, 0) = 0.2;
  m(1, 1) = 0.9;
  const grk::LinkFunction link = linear_link(m, {-0.1, 0.3});
  const grk::ChainObjective chain = product_chain({1.0, -1.0}, {2.0, 0.5});
  const grk::Logits theta1(Vec{0.4, -0.4});
  const Vec exact = grk::exact_chain_gradient_sequential(theta1, {link}, chain);
  grk::SurrogateSpec spec{grk::SurrogateMode::kReinforce, 1.0, 1};
  grk::VectorStatsAccumulator acc(exact);
  grk::RngStream base(90, 0);
  for (int i = 0; i < 200000; ++i) {
    const grk::RealizedGraph g =
        grk::forward_sequential(base.substream(i), theta1, {link}, chain, spec);
    acc.push(grk::backward_sequential(g).theta1_grad);
  }
  const grk::EstimatorStats st = grk::finalize_stats(acc);
  for (std::size_t c = 0; c < 2; ++c) {
    REQUIRE(std::abs(st.bias[c]) < st.ci_mean[c]);
  }
}

TEST_CASE("sequential credits chain partials through the link jacobian", "[scg]") {
  Mat m(2, 2);
  m(0, 0) = 1.1;
  m(0, 1) = -0.4;
  m(1, 0) = 0.2;
  m(1, 1) = 0.9;
  const grk::LinkFunction link = linear_link(m, {-0.1, 0.3});
  const grk::ChainObjective chain = product_chain({1.0, -1.0}, {2.0, 0.5});
  const grk::Logits theta1(Vec{0.4, -0.4});
  grk::SurrogateSpec spec{grk::SurrogateMode::kST, 0.6, 1};
  const grk::RealizedGraph g =
      grk::forward_sequential(grk::RngStream(91, 0), theta1, {link}, chain, spec);
  const grk::SequentialBackward back = grk::backward_sequential(g);
  // Recompute the recursion by hand for the two-node case.
  const Vec s2 = grk::tempered_softmax(g.nodes[1].theta, 0.6);
  Vec through;
  grk::row_times_jacobian_from_probs(g.partials.value[1], s2, 0.6, through);
  const Vec upstream = grk::vec_mat(through, m);
  Vec credit0 = g.partials.value[0];
  for (std::size_t c = 0; c < 2; ++c) credit0[c] += upstream[c];
  REQUIRE(back.credits[0] == credit0);
  const Vec s1 = grk::tempered_softmax(g.nodes[0].theta, 0.6);
  Vec expect;
  grk::row_times_jacobian_from_probs(credit0, s1, 0.6, expect);
  REQUIRE(back.theta1_grad == expect);
}

TEST_CASE("mode and shape misuse is rejected", "[scg]") {
  const grk::ChainObjective no_interior = grk::ChainObjective(
      {2}, [](const std::vector<Vec>& xs) { return xs[0][0]; },
      [](const std::vector<Vec>&) { return std::vector<Vec>{{1.0, 0.0}}; },
      /*supports_interior=*/false);
  grk::SurrogateSpec gs{grk::SurrogateMode::kGS, 0.5, 1};
  CHECK_THROWS_AS(grk::forward_parallel(grk::RngStream(92, 0),
                                        {grk::Logits(Vec{0.0, 0.0})}, no_interior, gs),
                  grk::configuration_error);

  const grk::ChainObjective chain = additive_chain({{1.0, 0.0}});
  grk::SurrogateSpec bad_k{grk::SurrogateMode::kGRMC, 0.5, 0};
  CHECK_THROWS_AS(grk::forward_parallel(grk::RngStream(92, 1),
                                        {grk::Logits(Vec{0.0, 0.0})}, chain, bad_k),
                  grk::domain_error);
  grk::SurrogateSpec bad_tau{grk::SurrogateMode::kSTGS, 0.0, 1};
  CHECK_THROWS_AS(grk::forward_parallel(grk::RngStream(92, 2),
                                        {grk::Logits(Vec{0.0, 0.0})}, chain, bad_tau),
                  grk::domain_error);
  // Score mode ignores tau entirely.
  grk::SurrogateSpec score{grk::SurrogateMode::kReinforce, 0.0, 1};
  CHECK_NOTHROW(grk::forward_parallel(grk::RngStream(92, 3),
                                      {grk::Logits(Vec{0.0, 0.0})}, chain, score));

  const grk::RealizedGraph par = grk::forward_parallel(
      grk::RngStream(92, 4), {grk::Logits(Vec{0.0, 0.0})}, chain, score);
  CHECK_THROWS_AS(grk::backward_sequential(par), grk::configuration_error);
}

TEST_CASE("joint enumeration refuses oversized outcome spaces", "[scg]") {
  const std::size_t nodes = 15;
  std::vector<std::size_t> arities(nodes, 4);  // 4^15 > 2^20
  const grk::ChainObjective chain = grk::ChainObjective(
      arities, [](const std::vector<Vec>&) { return 0.0; },
      [arities](const std::vector<Vec>&) {
        std::vector<Vec> g;
        for (std::size_t n : arities) g.emplace_back(n, 0.0);
        return g;
      },
      true, /*validate=*/false);
  std::vector<grk::Logits> thetas(nodes, grk::Logits(Vec{0.0, 0.0, 0.0, 0.0}));
  CHECK_THROWS_AS(grk::exact_chain_gradient_parallel(thetas, chain, 0),
                  grk::capacity_error);
}
