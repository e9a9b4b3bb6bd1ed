#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lase/graph.hpp"
#include "lase/kernel_network.hpp"
#include "lase/kernels.hpp"
#include "lase/layers.hpp"
#include "lase/sampler.hpp"
#include "lase/synth.hpp"
#include "lase/trainer.hpp"

// Validation experiments shared by the command-line tool and the test suites.

namespace lase::experiments {

struct RandomGraphSpec {
  std::size_t min_nodes = 2;
  std::size_t max_nodes = 8;
  std::size_t d_node = 3;
  std::size_t d_link = 2;
  double link_prob = 0.4;
  std::size_t n_labels = 0;  ///< 0 leaves nodes unlabelled
};

/// Erdos-Renyi style graph with features uniform in [-1, 1].
inline AttributedGraph random_small_graph(std::mt19937_64& rng, const RandomGraphSpec& spec = {}) {
  std::uniform_int_distribution<std::size_t> size(spec.min_nodes, spec.max_nodes);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::bernoulli_distribution coin(spec.link_prob);
  const std::size_t n = size(rng);
  auto vec = [&](std::size_t d) {
    std::vector<double> v(d);
    for (auto& x : v) x = unit(rng);
    return v;
  };
  std::vector<NodeRecord> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].id = static_cast<NodeId>(i);
    nodes[i].features = vec(spec.d_node);
    if (spec.n_labels > 0) nodes[i].label = std::uniform_int_distribution<std::size_t>(0, spec.n_labels - 1)(rng);
  }
  std::vector<LinkRecord> links;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (!coin(rng)) continue;
      LinkRecord l;
      l.src = static_cast<NodeId>(a);
      l.dst = static_cast<NodeId>(b);
      l.features = vec(spec.d_link);
      links.push_back(std::move(l));
    }
  }
  AttributedGraph::Options opts;
  opts.d_node = spec.d_node;
  opts.d_link = spec.d_link;
  if (spec.n_labels > 0) opts.n_labels = spec.n_labels;
  return AttributedGraph::build(std::move(nodes), std::move(links), opts);
}

// ---------------------------------------------------------------------------
// Network / kernel identity

struct Theorem1Row {
  std::size_t trial = 0;
  std::size_t k = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_err = 0.0;
};

/// `trials` random kernel-mode rw stacks (and random graphs unless `fixed` is
/// given), every hidden coordinate checked.
inline std::vector<Theorem1Row> theorem1_trials(const AttributedGraph* fixed, std::size_t hops, double decay,
                                                std::size_t trials, std::size_t hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Theorem1Row> rows;
  for (std::size_t t = 0; t < trials; ++t) {
    const AttributedGraph g = fixed ? *fixed : random_small_graph(rng);
    StackConfig sc;
    sc.arch = Architecture::rw;
    sc.kernel_mode = true;
    sc.depth = hops;
    sc.hidden = hidden;
    sc.constant_decay = decay;
    LayerStack stack(sc, g.d_node(), g.d_link(), rng());
    kernels::KernelConfig kc{decay, hops};
    for (std::size_t k = 0; k < hidden; ++k) {
      const auto c = kernels::check_theorem1(g, stack, kc, k);
      rows.push_back({t, k, c.lhs, c.rhs, c.rel_err()});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Kernel DP vs enumeration

struct KernelPairRow {
  std::size_t pair = 0;
  std::size_t walk_nodes = 0;
  double dp = 0.0;
  double enumerated = 0.0;
  double rel_err = 0.0;
};

inline std::vector<KernelPairRow> kernel_cross_check(std::size_t pairs, std::size_t max_walk_nodes, double decay,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> walk(1, max_walk_nodes);
  std::vector<KernelPairRow> rows;
  for (std::size_t p = 0; p < pairs; ++p) {
    const auto g1 = random_small_graph(rng);
    const auto g2 = random_small_graph(rng);
    const std::size_t nodes = walk(rng);
    kernels::KernelConfig kc{decay, nodes - 1};
    KernelPairRow r;
    r.pair = p;
    r.walk_nodes = nodes;
    r.dp = kernels::rw_kernel_dp(g1, g2, kc);
    r.enumerated = kernels::rw_kernel_enumerate(g1, g2, kc);
    r.rel_err = std::abs(r.dp - r.enumerated) / std::max(1.0, std::abs(r.enumerated));
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Mirrored neighbourhoods with equal feature sums

struct Figure3Row {
  std::size_t trial = 0;
  double concat_diff = 0.0;  ///< L-inf distance between the paired centre outputs
  double rw_diff = 0.0;
  double sage_diff = 0.0;
};

inline double linf(const Tensor2& a, const Tensor2& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Fresh mirrored pair and fresh parameters per trial.
inline std::vector<Figure3Row> figure3_trials(std::size_t trials, std::size_t depth, std::size_t hidden,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Figure3Row> rows;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto sg = synth::concat_blind(6, rng);
    const auto [u, u2] = sg.duos.front();
    const NodeId pair[] = {u, u2};
    auto diff = [&](Architecture arch) {
      StackConfig sc;
      sc.arch = arch;
      sc.depth = depth;
      sc.hidden = hidden;
      LayerStack stack(sc, sg.graph.d_node(), sg.graph.d_link(), rng());
      const auto h = infer_hidden(sg.graph, stack, pair);
      return linf(h[0], h[1]);
    };
    Figure3Row r;
    r.trial = t;
    r.concat_diff = diff(Architecture::concat);
    r.rw_diff = diff(Architecture::rw);
    r.sage_diff = diff(Architecture::sage);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Estimator statistics

/// A centre node of random degree in [1, max_degree] plus a random gated
/// SAGE layer; returns its layer-1 gates and summands.
inline NeighborhoodTerms random_neighborhood(std::mt19937_64& rng, std::size_t max_degree, std::size_t d_node = 3,
                                             std::size_t d_link = 2) {
  std::uniform_int_distribution<std::size_t> deg(1, max_degree);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::size_t d = deg(rng);
  auto vec = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = unit(rng);
    return v;
  };
  std::vector<NodeRecord> nodes(d + 1);
  for (std::size_t i = 0; i <= d; ++i) {
    nodes[i].id = static_cast<NodeId>(i);
    nodes[i].features = vec(d_node);
  }
  std::vector<LinkRecord> links;
  for (std::size_t i = 1; i <= d; ++i) links.push_back({0, 0, static_cast<NodeId>(i), vec(d_link)});
  const auto g = AttributedGraph::build(std::move(nodes), std::move(links), {});
  StackConfig sc;
  sc.arch = Architecture::sage;
  sc.depth = 1;
  sc.hidden = 4;
  LayerStack stack(sc, d_node, d_link, rng());
  // Widen the gate logits so that gates differ visibly across neighbours.
  for (auto& v : stack.layer(1).V->data()) v *= 3.0;
  return neighborhood_terms(g, stack, 1, 0);
}

struct EstimatorRow {
  std::size_t neighborhood = 0;
  std::size_t degree = 0;
  SamplingStrategy strategy = SamplingStrategy::uniform;
  double analytic_var = 0.0;
  double empirical_var = 0.0;
  double max_z = 0.0;  ///< largest |mean - full| / standard error over coordinates
  bool unbiased = true;
};

/// `draws` single-draw estimates per (neighbourhood, strategy).
inline std::vector<EstimatorRow> estimator_study(std::size_t neighborhoods, std::size_t max_degree, std::size_t draws,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<EstimatorRow> rows;
  const SamplingStrategy strategies[] = {SamplingStrategy::uniform, SamplingStrategy::gate, SamplingStrategy::min_var};
  for (std::size_t n = 0; n < neighborhoods; ++n) {
    const auto terms = random_neighborhood(rng, max_degree);
    const auto full = full_sum(terms);
    const std::size_t dim = full.size();
    for (auto s : strategies) {
      const auto probs = probs_for(s, terms);
      std::mt19937_64 draw_rng(rng());
      std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
      for (std::size_t i = 0; i < draws; ++i) {
        const auto est = estimate_neighbor_sum(terms, probs, 1, draw_rng);
        for (std::size_t c = 0; c < dim; ++c) {
          // Centred on the known mean to keep the accumulated squares well conditioned.
          const double x = est[c] - full[c];
          sum[c] += x;
          sq[c] += x * x;
        }
      }
      EstimatorRow r;
      r.neighborhood = n;
      r.degree = terms.size();
      r.strategy = s;
      r.analytic_var = estimator_variance(terms, probs);
      const double N = static_cast<double>(draws);
      for (std::size_t c = 0; c < dim; ++c) {
        const double mean_dev = sum[c] / N;
        const double var = (sq[c] - N * mean_dev * mean_dev) / (N - 1.0);
        r.empirical_var += var;
        const double se = std::sqrt(std::max(var, 0.0) / N);
        const double gap = std::abs(mean_dev);
        const double slack = 1e-12 * (1.0 + std::abs(full[c]));
        if (gap > 3.0 * se + slack) r.unbiased = false;
        if (se > 0.0) r.max_z = std::max(r.max_z, gap / se);
      }
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace lase::experiments
