#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lase {

using NodeId = std::uint32_t;
using LinkId = std::uint32_t;

struct NodeRecord {
  NodeId id = 0;
  std::vector<double> features;
  std::optional<std::size_t> label;
};

struct LinkRecord {
  LinkId id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  std::vector<double> features;
};

/// A neighbour of some centre node u: the node v and the link e_{u,v}.
struct NeighborRef {
  NodeId node;
  LinkId link;
  friend bool operator==(const NeighborRef&, const NeighborRef&) = default;
};

class GraphError : public std::runtime_error {
 public:
  enum class Kind {
    io,
    parse,
    dimension_mismatch,
    dangling_endpoint,
    duplicate_link,
    duplicate_node,
    self_loop,
    non_finite_value,
    invalid_label,
  };
  GraphError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Immutable node/link store with feature vectors on both. Safe to share
/// across threads once built.
class AttributedGraph {
 public:
  struct Options {
    bool undirected = true;
    bool allow_self_loops = false;
    /// Overrides label-count inference (max label + 1).
    std::optional<std::size_t> n_labels;
    /// Overrides dimension inference from the first row.
    std::optional<std::size_t> d_node;
    std::optional<std::size_t> d_link;
  };

  AttributedGraph() = default;

  /// Validates and indexes. Node ids must equal list positions; link ids are
  /// reassigned to list positions.
  static AttributedGraph build(std::vector<NodeRecord> nodes, std::vector<LinkRecord> links, Options opts) {
    using K = GraphError::Kind;
    AttributedGraph g;
    g.undirected_ = opts.undirected;
    if (nodes.empty()) throw GraphError(K::parse, "graph has no nodes");

    g.d_node_ = opts.d_node.value_or(nodes.front().features.size());
    if (g.d_node_ == 0) throw GraphError(K::dimension_mismatch, "node features must be non-empty");
    std::size_t max_label = 0;
    bool any_label = false;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (n.id != i) throw GraphError(K::duplicate_node, "node id " + std::to_string(n.id) + " at position " + std::to_string(i));
      if (n.features.size() != g.d_node_) {
        throw GraphError(K::dimension_mismatch, "node " + std::to_string(i) + " has " + std::to_string(n.features.size()) +
                                                    " features, expected " + std::to_string(g.d_node_));
      }
      check_finite(n.features, "node " + std::to_string(i));
      if (n.label) {
        any_label = true;
        max_label = std::max(max_label, *n.label);
      }
    }
    g.n_labels_ = opts.n_labels.value_or(any_label ? max_label + 1 : 0);
    for (const auto& n : nodes) {
      if (n.label && *n.label >= g.n_labels_) {
        throw GraphError(K::invalid_label, "node " + std::to_string(n.id) + " label " + std::to_string(*n.label) +
                                               " >= n_labels " + std::to_string(g.n_labels_));
      }
    }

    g.d_link_ = opts.d_link.value_or(links.empty() ? 1 : links.front().features.size());
    if (g.d_link_ == 0) throw GraphError(K::dimension_mismatch, "link features must be non-empty");
    g.adjacency_.assign(nodes.size(), {});
    for (std::size_t i = 0; i < links.size(); ++i) {
      auto& l = links[i];
      l.id = static_cast<LinkId>(i);
      if (l.src >= nodes.size() || l.dst >= nodes.size()) {
        throw GraphError(K::dangling_endpoint, "link " + std::to_string(i) + " (" + std::to_string(l.src) + "," +
                                                   std::to_string(l.dst) + ") references a missing node");
      }
      if (l.src == l.dst && !opts.allow_self_loops) {
        throw GraphError(K::self_loop, "link " + std::to_string(i) + " is a self-loop on node " + std::to_string(l.src));
      }
      if (l.features.size() != g.d_link_) {
        throw GraphError(K::dimension_mismatch, "link " + std::to_string(i) + " has " + std::to_string(l.features.size()) +
                                                    " features, expected " + std::to_string(g.d_link_));
      }
      check_finite(l.features, "link " + std::to_string(i));
      g.adjacency_[l.src].push_back({l.dst, l.id});
      if (g.undirected_ && l.src != l.dst) g.adjacency_[l.dst].push_back({l.src, l.id});
    }
    for (std::size_t u = 0; u < g.adjacency_.size(); ++u) {
      auto& adj = g.adjacency_[u];
      std::sort(adj.begin(), adj.end(), [](const NeighborRef& a, const NeighborRef& b) { return a.node < b.node; });
      for (std::size_t j = 1; j < adj.size(); ++j) {
        if (adj[j].node == adj[j - 1].node) {
          throw GraphError(K::duplicate_link, "more than one link between " + std::to_string(u) + " and " +
                                                  std::to_string(adj[j].node));
        }
      }
    }
    g.nodes_ = std::move(nodes);
    g.links_ = std::move(links);
    return g;
  }

  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_links() const noexcept { return links_.size(); }
  std::size_t d_node() const noexcept { return d_node_; }
  std::size_t d_link() const noexcept { return d_link_; }
  std::size_t n_labels() const noexcept { return n_labels_; }
  bool undirected() const noexcept { return undirected_; }

  const NodeRecord& node(NodeId u) const { return nodes_.at(u); }
  const LinkRecord& link(LinkId e) const { return links_.at(e); }
  std::span<const NodeRecord> nodes() const noexcept { return nodes_; }
  std::span<const LinkRecord> links() const noexcept { return links_; }
  std::span<const double> node_features(NodeId u) const { return nodes_.at(u).features; }
  std::span<const double> link_features(LinkId e) const { return links_.at(e).features; }
  std::optional<std::size_t> label(NodeId u) const { return nodes_.at(u).label; }

  /// N(u), sorted by neighbour id.
  std::span<const NeighborRef> neighbors(NodeId u) const { return adjacency_.at(u); }
  std::size_t degree(NodeId u) const { return adjacency_.at(u).size(); }

  /// Copy with every link's features replaced (same order, same dimension).
  AttributedGraph with_link_features(const std::vector<std::vector<double>>& features) const {
    if (features.size() != links_.size()) {
      throw GraphError(GraphError::Kind::dimension_mismatch, "with_link_features: wrong link count");
    }
    auto links = links_;
    for (std::size_t i = 0; i < links.size(); ++i) links[i].features = features[i];
    return build(nodes_, std::move(links), options());
  }

  Options options() const {
    Options o;
    o.undirected = undirected_;
    o.allow_self_loops = true;
    o.n_labels = n_labels_;
    o.d_node = d_node_;
    o.d_link = d_link_;
    return o;
  }

  friend bool operator==(const AttributedGraph& a, const AttributedGraph& b) {
    if (a.d_node_ != b.d_node_ || a.d_link_ != b.d_link_ || a.n_labels_ != b.n_labels_ ||
        a.undirected_ != b.undirected_ || a.nodes_.size() != b.nodes_.size() || a.links_.size() != b.links_.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
      if (a.nodes_[i].features != b.nodes_[i].features || a.nodes_[i].label != b.nodes_[i].label) return false;
    }
    for (std::size_t i = 0; i < a.links_.size(); ++i) {
      const auto &x = a.links_[i], &y = b.links_[i];
      if (x.src != y.src || x.dst != y.dst || x.features != y.features) return false;
    }
    return a.adjacency_ == b.adjacency_;
  }

 private:
  static void check_finite(const std::vector<double>& v, const std::string& where) {
    for (double x : v) {
      if (!std::isfinite(x)) throw GraphError(GraphError::Kind::non_finite_value, where + " has a non-finite feature");
    }
  }

  std::vector<NodeRecord> nodes_;
  std::vector<LinkRecord> links_;
  std::vector<std::vector<NeighborRef>> adjacency_;
  std::size_t d_node_ = 0;
  std::size_t d_link_ = 0;
  std::size_t n_labels_ = 0;
  bool undirected_ = true;
};

struct Split {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;
};

class SplitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Random train/val/test partition of the labelled nodes.
///
/// Counts are floor(fraction * n) for train and val; the remainder goes to
/// test. Train nodes with no neighbours are then dropped. All three lists are
/// returned sorted.
inline Split make_split(const AttributedGraph& g, std::array<double, 3> fractions, std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f >= 0.0)) throw std::invalid_argument("make_split: fractions must be non-negative");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("make_split: fractions must sum to 1");
  }
  std::vector<NodeId> labelled;
  for (const auto& n : g.nodes()) {
    if (n.label) labelled.push_back(n.id);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(labelled.begin(), labelled.end(), rng);
  const auto n = labelled.size();
  const auto n_train = static_cast<std::size_t>(std::floor(fractions[0] * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::floor(fractions[1] * static_cast<double>(n))));

  Split s;
  for (std::size_t i = 0; i < n; ++i) {
    const NodeId u = labelled[i];
    if (i < n_train) {
      if (g.degree(u) > 0) s.train.push_back(u);
    } else if (i < n_train + n_val) {
      s.val.push_back(u);
    } else {
      s.test.push_back(u);
    }
  }
  if (s.train.empty()) throw SplitError("make_split: no training node has a neighbour");
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace lase
