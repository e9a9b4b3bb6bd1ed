#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lase/graph.hpp"

namespace lase {

enum class SynthKind { interaction, concat_blind, random };

inline SynthKind parse_synth_kind(const std::string& s) {
  if (s == "interaction") return SynthKind::interaction;
  if (s == "concat-blind") return SynthKind::concat_blind;
  if (s == "random") return SynthKind::random;
  throw std::invalid_argument("unknown synthetic graph kind '" + s + "'");
}

struct SynthGraph {
  AttributedGraph graph;
  Split split;
  /// concat-blind only: the two centre nodes of every mirrored neighbourhood pair.
  std::vector<std::pair<NodeId, NodeId>> duos;
};

namespace synth {

inline constexpr std::size_t kFeatureDim = 4;
inline constexpr std::size_t kLinksPerNode = 3;
inline constexpr std::array<double, 3> kSplitFractions{0.65, 0.15, 0.20};

/// Labelling rule of the interaction graph: argmax over coordinates of
/// sum_{v in N(u)} f(v) ⊙ f(e_{u,v}); ties go to the lowest index.
inline std::size_t interaction_rule(const AttributedGraph& g, NodeId u) {
  std::vector<double> acc(g.d_node(), 0.0);
  for (const auto& nb : g.neighbors(u)) {
    const auto fv = g.node_features(nb.node);
    const auto fe = g.link_features(nb.link);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += fv[c] * fe[c];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < acc.size(); ++c) {
    if (acc[c] > acc[best]) best = c;
  }
  return best;
}

inline std::vector<double> gaussian_vector(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(d);
  for (auto& x : v) x = normal(rng);
  return v;
}

/// Each node proposes kLinksPerNode links to distinct random partners.
inline AttributedGraph random_topology(std::size_t n, std::mt19937_64& rng) {
  std::vector<NodeRecord> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].id = static_cast<NodeId>(i);
    nodes[i].features = gaussian_vector(rng, kFeatureDim);
  }
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::set<std::pair<NodeId, NodeId>> seen;
  std::vector<LinkRecord> links;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t k = 0; k < kLinksPerNode; ++k) {
      NodeId v = 0;
      std::pair<NodeId, NodeId> key;
      do {
        v = static_cast<NodeId>(pick(rng));
        key = std::minmax(static_cast<NodeId>(u), v);
      } while (v == u || seen.count(key) != 0);
      seen.insert(key);
      LinkRecord l;
      l.src = static_cast<NodeId>(u);
      l.dst = v;
      l.features = gaussian_vector(rng, kFeatureDim);
      links.push_back(std::move(l));
    }
  }
  AttributedGraph::Options opts;
  opts.n_labels = kFeatureDim;
  return AttributedGraph::build(std::move(nodes), std::move(links), opts);
}

inline AttributedGraph relabel(const AttributedGraph& g, const std::vector<std::optional<std::size_t>>& labels) {
  std::vector<NodeRecord> nodes(g.nodes().begin(), g.nodes().end());
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i].label = labels[i];
  return AttributedGraph::build(std::move(nodes), std::vector<LinkRecord>(g.links().begin(), g.links().end()), g.options());
}

inline SynthGraph concat_blind(std::size_t n, std::mt19937_64& rng) {
  std::vector<NodeRecord> nodes;
  std::vector<LinkRecord> links;
  std::vector<std::pair<NodeId, NodeId>> duos;
  auto add_node = [&](std::vector<double> f, std::optional<std::size_t> label) {
    NodeRecord r;
    r.id = static_cast<NodeId>(nodes.size());
    r.features = std::move(f);
    r.label = label;
    nodes.push_back(std::move(r));
    return nodes.back().id;
  };
  auto add_link = [&](NodeId a, NodeId b, std::vector<double> f) {
    LinkRecord l;
    l.src = a;
    l.dst = b;
    l.features = std::move(f);
    links.push_back(std::move(l));
  };
  for (std::size_t d = 0; d < n / 6; ++d) {
    const auto centre = gaussian_vector(rng, kFeatureDim);
    const auto fa = gaussian_vector(rng, kFeatureDim);
    const auto fb = gaussian_vector(rng, kFeatureDim);
    const auto x = gaussian_vector(rng, kFeatureDim);
    const auto y = gaussian_vector(rng, kFeatureDim);
    // Pairing A is (a,x),(b,y); pairing B swaps the links. Both centres see
    // the same node-feature sum and the same link-feature sum.
    const std::size_t label_a = (fa[0] - fb[0]) * (x[0] - y[0]) > 0.0 ? 1 : 0;
    const NodeId u = add_node(centre, label_a);
    const NodeId a = add_node(fa, std::nullopt);
    const NodeId b = add_node(fb, std::nullopt);
    add_link(u, a, x);
    add_link(u, b, y);
    const NodeId u2 = add_node(centre, 1 - label_a);
    const NodeId a2 = add_node(fa, std::nullopt);
    const NodeId b2 = add_node(fb, std::nullopt);
    add_link(u2, a2, y);
    add_link(u2, b2, x);
    duos.emplace_back(u, u2);
  }
  while (nodes.size() < n) add_node(gaussian_vector(rng, kFeatureDim), std::nullopt);
  AttributedGraph::Options opts;
  opts.n_labels = 2;
  auto g = AttributedGraph::build(std::move(nodes), std::move(links), opts);
  auto split = make_split(g, kSplitFractions, rng());
  return {std::move(g), std::move(split), std::move(duos)};
}

}  // namespace synth

/// Synthetic stand-ins for real link-attributed datasets.
///
/// - interaction: labels follow synth::interaction_rule, so only models that
///   couple neighbour and link features can beat chance by much.
/// - concat-blind: disjoint copies of two mirrored 2-neighbour stars whose
///   feature sums agree but whose (node, link) pairings differ; the centre
///   label encodes the pairing.
/// - random: the interaction topology with labels drawn independently.
inline SynthGraph synth_graph(SynthKind kind, std::size_t n, std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("synth_graph: n must be at least 10");
  std::mt19937_64 rng(seed);
  if (kind == SynthKind::concat_blind) return synth::concat_blind(n, rng);

  auto g = synth::random_topology(n, rng);
  std::vector<std::optional<std::size_t>> labels(n);
  std::uniform_int_distribution<std::size_t> coin(0, synth::kFeatureDim - 1);
  for (std::size_t u = 0; u < n; ++u) {
    labels[u] = kind == SynthKind::interaction ? synth::interaction_rule(g, static_cast<NodeId>(u)) : coin(rng);
  }
  g = synth::relabel(g, labels);
  auto split = make_split(g, synth::kSplitFractions, rng());
  return {std::move(g), std::move(split), {}};
}

}  // namespace lase
