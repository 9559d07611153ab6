#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "grk/errors.hpp"
#include "grk/gumbel.hpp"
#include "grk/linalg.hpp"
#include "grk/rng.hpp"
#include "grk/softmax.hpp"
#include "grk/types.hpp"

namespace grk {

// Surrogate backward rule for a stochastic node.
enum class SurrogateMode { kReinforce, kGS, kST, kSTGS, kGRMC };

struct SurrogateSpec {
  SurrogateMode mode = SurrogateMode::kSTGS;
  double tau = 1.0;   // unused by kReinforce
  std::size_t k = 1;  // posterior draws per node, kGRMC only
};

inline std::string surrogate_mode_name(SurrogateMode m) {
  switch (m) {
    case SurrogateMode::kReinforce: return "reinforce";
    case SurrogateMode::kGS: return "gs";
    case SurrogateMode::kST: return "st";
    case SurrogateMode::kSTGS: return "stgs";
    case SurrogateMode::kGRMC: return "grmc";
  }
  return "?";
}

// Marks a value as stop-gradient: the surrogate backward pass may read the
// stored value but must contribute no derivative through it. Keeping starred
// values as explicit graph fields makes that testable — mutate the field, the
// backward outputs that must not depend on it cannot change.
template <typename T>
struct StopGradientMark {
  T value{};
};

// Differentiable map from a node's sample to the next node's logits, with an
// analytic Jacobian validated against finite differences at registration
// (the map must be defined in a neighborhood of the vertices; linear maps
// are, and are the typical case).
class LinkFunction {
 public:
  using EvalFn = std::function<Vec(const Vec&)>;
  using JacFn = std::function<Mat(const Vec&)>;

  LinkFunction(std::size_t n_in, std::size_t n_out, EvalFn eval, JacFn jacobian,
               bool validate = true)
      : n_in_(n_in), n_out_(n_out), eval_(std::move(eval)), jac_(std::move(jacobian)) {
    if (n_in_ < 2 || n_out_ < 2) throw dimension_error("LinkFunction: arity must be >= 2");
    if (!eval_ || !jac_) throw domain_error("LinkFunction: eval and jacobian required");
    if (validate) validate_jacobian();
  }

  std::size_t n_in() const { return n_in_; }
  std::size_t n_out() const { return n_out_; }

  Vec eval(const Vec& d) const {
    if (d.size() != n_in_) throw dimension_error("LinkFunction: input size mismatch");
    Vec out = eval_(d);
    if (out.size() != n_out_) throw dimension_error("LinkFunction: output size mismatch");
    return out;
  }

  Mat jacobian(const Vec& d) const {
    Mat j = jac_(d);
    if (j.rows != n_out_ || j.cols != n_in_)
      throw dimension_error("LinkFunction: jacobian shape mismatch");
    return j;
  }

 private:
  void validate_jacobian() const {
    RngStream rng(0x11f1c4a9u, 7);
    const double step = 1e-6;
    for (int trial = 0; trial < 4; ++trial) {
      Vec x(n_in_);
      double total = 0.0;
      for (auto& xi : x) {
        xi = 0.1 - std::log(rng.next_unit());
        total += xi;
      }
      for (auto& xi : x) xi /= total;
      const Mat j = jac_(x);
      double scale = 1.0;
      for (double v : j.data) scale = std::max(scale, std::abs(v));
      for (std::size_t b = 0; b < n_in_; ++b) {
        Vec hi = x, lo = x;
        hi[b] += step;
        lo[b] -= step;
        const Vec fh = eval_(hi), fl = eval_(lo);
        for (std::size_t a = 0; a < n_out_; ++a) {
          const double fd = (fh[a] - fl[a]) / (2.0 * step);
          if (std::abs(fd - j(a, b)) > 1e-5 * scale)
            throw domain_error("LinkFunction: jacobian fails finite-difference check");
        }
      }
    }
  }

  std::size_t n_in_;
  std::size_t n_out_;
  EvalFn eval_;
  JacFn jac_;
};

// Objective over a tuple of per-node vectors (one-hot vertices, or interior
// points when supports_interior is set), with analytic per-node partial
// gradients validated against finite differences at registration.
class ChainObjective {
 public:
  using EvalFn = std::function<double(const std::vector<Vec>&)>;
  using PartialsFn = std::function<std::vector<Vec>(const std::vector<Vec>&)>;

  struct CallCounts {
    std::atomic<std::uint64_t> evals{0};
    std::atomic<std::uint64_t> partials{0};
  };

  ChainObjective(std::vector<std::size_t> arities, EvalFn eval, PartialsFn partials,
                 bool supports_interior = true, bool validate = true)
      : arities_(std::move(arities)),
        eval_(std::move(eval)),
        partials_(std::move(partials)),
        supports_interior_(supports_interior),
        counts_(std::make_shared<CallCounts>()) {
    if (arities_.empty()) throw dimension_error("ChainObjective: need >= 1 node");
    for (std::size_t n : arities_)
      if (n < 2) throw dimension_error("ChainObjective: arity must be >= 2");
    if (!eval_ || !partials_) throw domain_error("ChainObjective: eval and partials required");
    if (validate) validate_partials();
  }

  std::size_t nodes() const { return arities_.size(); }
  std::size_t arity(std::size_t j) const { return arities_[j]; }
  bool supports_interior() const { return supports_interior_; }

  double value(const std::vector<Vec>& xs) const {
    check_shapes(xs);
    counts_->evals.fetch_add(1, std::memory_order_relaxed);
    return eval_(xs);
  }

  std::vector<Vec> partial_gradients(const std::vector<Vec>& xs) const {
    check_shapes(xs);
    counts_->partials.fetch_add(1, std::memory_order_relaxed);
    std::vector<Vec> g = partials_(xs);
    if (g.size() != arities_.size())
      throw dimension_error("ChainObjective: wrong number of partials");
    return g;
  }

  std::uint64_t eval_count() const { return counts_->evals.load(std::memory_order_relaxed); }
  void reset_counts() const {
    counts_->evals.store(0, std::memory_order_relaxed);
    counts_->partials.store(0, std::memory_order_relaxed);
  }

 private:
  void check_shapes(const std::vector<Vec>& xs) const {
    if (xs.size() != arities_.size())
      throw dimension_error("ChainObjective: wrong number of node vectors");
    for (std::size_t j = 0; j < xs.size(); ++j)
      if (xs[j].size() != arities_[j])
        throw dimension_error("ChainObjective: node vector size mismatch");
  }

  void validate_partials() const {
    RngStream rng(0x5c9a3e17u, 3);
    const double step = 1e-6;
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<Vec> xs(arities_.size());
      for (std::size_t j = 0; j < xs.size(); ++j) {
        xs[j].resize(arities_[j]);
        double total = 0.0;
        for (auto& xi : xs[j]) {
          xi = 0.1 - std::log(rng.next_unit());
          total += xi;
        }
        for (auto& xi : xs[j]) xi /= total;
      }
      const std::vector<Vec> g = partials_(xs);
      double scale = 1.0;
      for (const Vec& gj : g)
        for (double v : gj) scale = std::max(scale, std::abs(v));
      for (std::size_t j = 0; j < xs.size(); ++j) {
        for (std::size_t c = 0; c < arities_[j]; ++c) {
          std::vector<Vec> hi = xs, lo = xs;
          hi[j][c] += step;
          lo[j][c] -= step;
          const double fd = (eval_(hi) - eval_(lo)) / (2.0 * step);
          if (std::abs(fd - g[j][c]) > 1e-5 * scale)
            throw domain_error("ChainObjective: partials fail finite-difference check");
        }
      }
    }
  }

  std::vector<std::size_t> arities_;
  EvalFn eval_;
  PartialsFn partials_;
  bool supports_interior_;
  std::shared_ptr<CallCounts> counts_;
};

// One realized stochastic node: the logits it sampled from, the outcome, the
// realized perturbation, the relaxed point (fully relaxed mode only), and the
// stream reserved for posterior draws in the backward pass.
struct GraphNode {
  Vec theta;
  OneHotSample sample;
  PerturbedLogits perturbation;
  Vec relaxed;
  RngStream backward_stream;
};

// A realized computation graph: immutable after forward (the starred fields
// are mutable only so tests can verify stop-gradient exactness).
struct RealizedGraph {
  SurrogateSpec spec;
  std::vector<GraphNode> nodes;
  StopGradientMark<double> f;
  StopGradientMark<std::vector<Vec>> partials;
  std::vector<LinkFunction> links;  // empty for parallel graphs
  bool sequential = false;
};

namespace detail {

inline void realize_node(RngStream& node_rng, RngStream backward, const Logits& theta,
                         const SurrogateSpec& spec, GraphNode& node) {
  auto [d, pert] = sample_categorical_gumbel_max(node_rng, theta);
  node.theta = theta.values();
  node.sample = d;
  node.perturbation = std::move(pert);
  node.backward_stream = backward;
  if (spec.mode == SurrogateMode::kGS)
    node.relaxed = tempered_softmax(node.perturbation.values, Temperature(spec.tau));
}

inline std::vector<Vec> forward_points(const RealizedGraph& g) {
  std::vector<Vec> xs(g.nodes.size());
  for (std::size_t j = 0; j < g.nodes.size(); ++j)
    xs[j] = (g.spec.mode == SurrogateMode::kGS) ? g.nodes[j].relaxed
                                                : g.nodes[j].sample.as_vector();
  return xs;
}

inline void check_mode(const SurrogateSpec& spec, const ChainObjective& obj) {
  if (spec.mode != SurrogateMode::kReinforce) {
    const Temperature checked(spec.tau);
    (void)checked;
  }
  if (spec.mode == SurrogateMode::kGRMC && spec.k == 0)
    throw domain_error("surrogate: k must be >= 1");
  if (spec.mode == SurrogateMode::kGS && !obj.supports_interior())
    throw configuration_error("surrogate: fully relaxed mode needs interior support");
}

}  // namespace detail

// Samples every node independently from its own logits, evaluates f exactly
// once (at the one-hot samples; at the relaxed points in fully relaxed mode)
// and freezes f and the per-node partial gradients into the graph.
inline RealizedGraph forward_parallel(RngStream rng, const std::vector<Logits>& thetas,
                                      const ChainObjective& obj,
                                      const SurrogateSpec& spec) {
  if (thetas.size() != obj.nodes())
    throw dimension_error("forward_parallel: node count mismatch");
  for (std::size_t j = 0; j < thetas.size(); ++j)
    if (thetas[j].size() != obj.arity(j))
      throw dimension_error("forward_parallel: arity mismatch");
  detail::check_mode(spec, obj);
  RealizedGraph g;
  g.spec = spec;
  g.sequential = false;
  g.nodes.resize(thetas.size());
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    RngStream node_rng = rng.substream(2 * j);
    detail::realize_node(node_rng, rng.substream(2 * j + 1), thetas[j], spec, g.nodes[j]);
  }
  const std::vector<Vec> xs = detail::forward_points(g);
  g.f.value = obj.value(xs);
  g.partials.value = obj.partial_gradients(xs);
  return g;
}

// Samples node 1 from theta1, then feeds each realized sample through its
// link to produce the next node's logits. The forward pass is identical in
// every Gumbel-coupled mode given the same stream; modes differ in backward.
inline RealizedGraph forward_sequential(RngStream rng, const Logits& theta1,
                                        const std::vector<LinkFunction>& links,
                                        const ChainObjective& obj,
                                        const SurrogateSpec& spec) {
  if (links.size() + 1 != obj.nodes())
    throw dimension_error("forward_sequential: need len(links)+1 == nodes");
  detail::check_mode(spec, obj);
  RealizedGraph g;
  g.spec = spec;
  g.sequential = true;
  g.links = links;
  g.nodes.resize(obj.nodes());
  Logits theta = theta1;
  for (std::size_t j = 0; j < obj.nodes(); ++j) {
    if (theta.size() != obj.arity(j))
      throw dimension_error("forward_sequential: arity mismatch");
    RngStream node_rng = rng.substream(2 * j);
    detail::realize_node(node_rng, rng.substream(2 * j + 1), theta, spec, g.nodes[j]);
    if (j + 1 < obj.nodes())
      theta = Logits(links[j].eval(g.nodes[j].sample.as_vector()));
  }
  const std::vector<Vec> xs = detail::forward_points(g);
  g.f.value = obj.value(xs);
  g.partials.value = obj.partial_gradients(xs);
  return g;
}

namespace detail {

// credit^T times the node's surrogate Jacobian, reading only frozen values.
inline Vec surrogate_contraction(const GraphNode& node, const Vec& credit,
                                 const SurrogateSpec& spec) {
  const Temperature tau(spec.tau);
  Vec out;
  switch (spec.mode) {
    case SurrogateMode::kST:
      row_times_jacobian_from_probs(credit, tempered_softmax(node.theta, tau),
                                    spec.tau, out);
      break;
    case SurrogateMode::kSTGS:
      row_times_jacobian_from_probs(
          credit, tempered_softmax(node.perturbation.values, tau), spec.tau, out);
      break;
    case SurrogateMode::kGS:
      row_times_jacobian_from_probs(credit, node.relaxed, spec.tau, out);
      break;
    case SurrogateMode::kGRMC: {
      const PosteriorSoftmaxKernel kernel(Logits(node.theta), node.sample, tau);
      RngStream posterior = node.backward_stream;  // copy: backward stays pure
      PosteriorScratch scratch;
      posterior_mean_row_contraction(posterior, kernel, credit, spec.tau, spec.k, out,
                                     scratch);
      break;
    }
    case SurrogateMode::kReinforce:
      throw configuration_error("surrogate_contraction: score mode has no Jacobian");
  }
  return out;
}

inline Vec score_term(const GraphNode& node, double f) {
  const Vec p = softmax1(node.theta);
  Vec out(p.size());
  for (std::size_t c = 0; c < p.size(); ++c)
    out[c] = f * (((c == node.sample.index) ? 1.0 : 0.0) - p[c]);
  return out;
}

}  // namespace detail

// Per-node parameter gradients for an independently-sampled graph: each node
// contracts its own frozen partial through its own surrogate Jacobian (score
// mode: frozen f times the node's score vector).
inline std::vector<Vec> backward_parallel(const RealizedGraph& g) {
  if (g.sequential) throw configuration_error("backward_parallel: sequential graph");
  std::vector<Vec> grads(g.nodes.size());
  for (std::size_t j = 0; j < g.nodes.size(); ++j) {
    if (g.spec.mode == SurrogateMode::kReinforce)
      grads[j] = detail::score_term(g.nodes[j], g.f.value);
    else
      grads[j] = detail::surrogate_contraction(g.nodes[j], g.partials.value[j], g.spec);
  }
  return grads;
}

struct SequentialBackward {
  Vec theta1_grad;
  // The credit arriving at each node: the frozen partial plus the downstream
  // contribution chained through the link Jacobian (score mode: the per-node
  // score terms).
  std::vector<Vec> credits;
};

// Backward recursion for a sampled chain. Working from the last node to the
// first, the node's credit is its frozen partial plus the next node's credit
// pushed through that node's surrogate Jacobian and the connecting link
// Jacobian; all starred quantities stay frozen (no second-order terms). The
// returned gradient is the first node's credit through its surrogate
// Jacobian. Score mode: realized samples are constants, so only node 1's
// score carries a theta1 derivative (verified against joint enumeration).
inline SequentialBackward backward_sequential(const RealizedGraph& g) {
  if (!g.sequential) throw configuration_error("backward_sequential: parallel graph");
  const std::size_t m = g.nodes.size();
  SequentialBackward out;
  out.credits.resize(m);
  if (g.spec.mode == SurrogateMode::kReinforce) {
    for (std::size_t j = 0; j < m; ++j)
      out.credits[j] = detail::score_term(g.nodes[j], g.f.value);
    out.theta1_grad = out.credits[0];
    return out;
  }
  if (g.links.size() + 1 != m)
    throw configuration_error("backward_sequential: missing link jacobians");
  Vec credit = g.partials.value[m - 1];
  out.credits[m - 1] = credit;
  for (std::size_t j = m - 1; j > 0; --j) {
    const Vec through_node = detail::surrogate_contraction(g.nodes[j], credit, g.spec);
    const Mat link_jac = g.links[j - 1].jacobian(g.nodes[j - 1].sample.as_vector());
    const Vec upstream = vec_mat(through_node, link_jac);
    credit = g.partials.value[j - 1];
    for (std::size_t c = 0; c < credit.size(); ++c) credit[c] += upstream[c];
    out.credits[j - 1] = credit;
  }
  out.theta1_grad = detail::surrogate_contraction(g.nodes[0], credit, g.spec);
  return out;
}

// ---- Enumeration oracles for chains (shared by tests and acceptance) ----

namespace detail {

inline std::size_t joint_outcomes_guarded(const std::vector<std::size_t>& arities) {
  std::size_t total = 1;
  for (std::size_t n : arities) {
    if (total > (std::size_t(1) << 20) / n)
      throw capacity_error("chain enumeration: outcome space too large");
    total *= n;
  }
  return total;
}

inline std::vector<std::size_t> unrank(std::size_t rank,
                                       const std::vector<std::size_t>& arities) {
  std::vector<std::size_t> idx(arities.size());
  for (std::size_t j = arities.size(); j-- > 0;) {
    idx[j] = rank % arities[j];
    rank /= arities[j];
  }
  return idx;
}

}  // namespace detail

// True gradient with respect to thetas[node] for independently sampled nodes,
// by full joint enumeration.
inline Vec exact_chain_gradient_parallel(const std::vector<Logits>& thetas,
                                         const ChainObjective& obj, std::size_t node) {
  std::vector<std::size_t> arities(thetas.size());
  for (std::size_t j = 0; j < thetas.size(); ++j) arities[j] = thetas[j].size();
  const std::size_t total = detail::joint_outcomes_guarded(arities);
  std::vector<Vec> probs(thetas.size());
  for (std::size_t j = 0; j < thetas.size(); ++j) probs[j] = softmax1(thetas[j].values());
  Vec grad(thetas[node].size(), 0.0);
  for (std::size_t rank = 0; rank < total; ++rank) {
    const auto idx = detail::unrank(rank, arities);
    double joint = 1.0;
    std::vector<Vec> xs(thetas.size());
    for (std::size_t j = 0; j < thetas.size(); ++j) {
      joint *= probs[j][idx[j]];
      xs[j] = OneHotSample(idx[j], arities[j]).as_vector();
    }
    const double f = obj.value(xs);
    for (std::size_t c = 0; c < grad.size(); ++c) {
      const double dc = (c == idx[node]) ? 1.0 : 0.0;
      grad[c] += f * joint * (dc - probs[node][c]);
    }
  }
  return grad;
}

// True theta1-gradient for a sampled chain: only the first factor of the
// joint law depends on theta1, so the score reduces to the first node's.
inline Vec exact_chain_gradient_sequential(const Logits& theta1,
                                           const std::vector<LinkFunction>& links,
                                           const ChainObjective& obj) {
  std::vector<std::size_t> arities(obj.nodes());
  for (std::size_t j = 0; j < obj.nodes(); ++j) arities[j] = obj.arity(j);
  const std::size_t total = detail::joint_outcomes_guarded(arities);
  const Vec p1 = softmax1(theta1.values());
  Vec grad(theta1.size(), 0.0);
  for (std::size_t rank = 0; rank < total; ++rank) {
    const auto idx = detail::unrank(rank, arities);
    double joint = 1.0;
    std::vector<Vec> xs(obj.nodes());
    Logits theta = theta1;
    for (std::size_t j = 0; j < obj.nodes(); ++j) {
      const Vec pj = softmax1(theta.values());
      joint *= pj[idx[j]];
      xs[j] = OneHotSample(idx[j], arities[j]).as_vector();
      if (j + 1 < obj.nodes()) theta = Logits(links[j].eval(xs[j]));
    }
    const double f = obj.value(xs);
    for (std::size_t c = 0; c < grad.size(); ++c) {
      const double dc = (c == idx[0]) ? 1.0 : 0.0;
      grad[c] += f * joint * (dc - p1[c]);
    }
  }
  return grad;
}

}  // namespace grk
