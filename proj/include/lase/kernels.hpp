#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lase/graph.hpp"
#include "lase/tensor.hpp"

namespace lase::kernels {

class KernelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Decay lambda in (0,1) and hop count. A walk over `hops` hops visits
/// hops+1 nodes and hops links, and is weighted by decay^hops.
struct KernelConfig {
  double decay = 0.5;
  std::size_t hops = 1;

  void validate() const {
    if (!(decay > 0.0 && decay < 1.0)) throw KernelError("KernelConfig: decay must lie in (0,1)");
  }
};

/// f(v) ⊗ f(e): the d_node x d_link outer product, rank <= 1.
inline Tensor2 neighbor_feature(std::span<const double> fv, std::span<const double> fe) {
  Tensor2 t(fv.size(), fe.size());
  for (std::size_t i = 0; i < fv.size(); ++i) {
    for (std::size_t j = 0; j < fe.size(); ++j) t(i, j) = fv[i] * fe[j];
  }
  return t;
}

inline double frobenius_inner(const Tensor2& a, const Tensor2& b) {
  if (!a.same_shape(b)) throw KernelError("frobenius_inner: shape mismatch");
  return dot(a.data(), b.data());
}

struct NeighborView {
  std::span<const double> node;
  std::span<const double> link;
};

/// <f(v) ⊗ f(e), f(w) ⊗ f(e')> in factorised form <f(v),f(w)> * <f(e),f(e')>.
inline double neighbor_kernel(const NeighborView& a, const NeighborView& b) {
  if (a.node.size() != b.node.size() || a.link.size() != b.link.size()) {
    throw KernelError("neighbor_kernel: feature dimensions differ");
  }
  return dot(a.node, b.node) * dot(a.link, b.link);
}

namespace detail {

inline void check_compatible(const AttributedGraph& g1, const AttributedGraph& g2) {
  if (g1.d_node() != g2.d_node() || g1.d_link() != g2.d_link()) {
    throw KernelError("kernel: graphs have different feature dimensions (" + std::to_string(g1.d_node()) + "," +
                      std::to_string(g1.d_link()) + ") vs (" + std::to_string(g2.d_node()) + "," +
                      std::to_string(g2.d_link()) + ")");
  }
}

/// Strict total order on graphs, used to evaluate K(x,y) and K(y,x) along
/// the identical code path so that symmetry holds bit for bit.
inline bool canonical_less(const AttributedGraph& a, const AttributedGraph& b) {
  if (a.num_nodes() != b.num_nodes()) return a.num_nodes() < b.num_nodes();
  if (a.num_links() != b.num_links()) return a.num_links() < b.num_links();
  for (std::size_t i = 0; i < a.num_nodes(); ++i) {
    const auto& x = a.nodes()[i].features;
    const auto& y = b.nodes()[i].features;
    if (x != y) return x < y;
  }
  for (std::size_t i = 0; i < a.num_links(); ++i) {
    const auto& x = a.links()[i];
    const auto& y = b.links()[i];
    if (x.src != y.src) return x.src < y.src;
    if (x.dst != y.dst) return x.dst < y.dst;
    if (x.features != y.features) return x.features < y.features;
  }
  return false;
}

inline std::vector<double> node_gram(const AttributedGraph& g1, const AttributedGraph& g2) {
  const std::size_t n1 = g1.num_nodes(), n2 = g2.num_nodes();
  std::vector<double> out(n1 * n2);
  for (std::size_t a = 0; a < n1; ++a) {
    for (std::size_t b = 0; b < n2; ++b) {
      out[a * n2 + b] = dot(g1.node_features(static_cast<NodeId>(a)), g2.node_features(static_cast<NodeId>(b)));
    }
  }
  return out;
}

class NeighborhoodMemo {
 public:
  NeighborhoodMemo(const AttributedGraph& g1, const AttributedGraph& g2, double decay, std::size_t hops)
      : g1_(g1), g2_(g2), decay_(decay), n2_(g2.num_nodes()),
        memo_((hops + 1) * g1.num_nodes() * g2.num_nodes(), std::numeric_limits<double>::quiet_NaN()) {}

  double eval(NodeId u, NodeId u2, std::size_t level) {
    const std::size_t key = (level * g1_.num_nodes() + u) * n2_ + u2;
    if (!std::isnan(memo_[key])) return memo_[key];
    const double base = dot(g1_.node_features(u), g2_.node_features(u2));
    double value = base;
    if (level > 0) {
      double acc = 0.0;
      for (const auto& a : g1_.neighbors(u)) {
        for (const auto& b : g2_.neighbors(u2)) {
          acc += eval(a.node, b.node, level - 1) * dot(g1_.link_features(a.link), g2_.link_features(b.link));
        }
      }
      value = base * decay_ * acc;
    }
    memo_[key] = value;
    return value;
  }

 private:
  const AttributedGraph& g1_;
  const AttributedGraph& g2_;
  double decay_;
  std::size_t n2_;
  std::vector<double> memo_;
};

}  // namespace detail

/// K_N^(hops)(u, u'), evaluated by memoised recursion over (u, u', level).
inline double neighborhood_kernel(const AttributedGraph& g1, const AttributedGraph& g2, NodeId u, NodeId u2,
                                  const KernelConfig& cfg) {
  cfg.validate();
  detail::check_compatible(g1, g2);
  if (u >= g1.num_nodes() || u2 >= g2.num_nodes()) throw KernelError("neighborhood_kernel: node out of range");
  const bool swap = detail::canonical_less(g2, g1) || (!detail::canonical_less(g1, g2) && u2 < u);
  if (swap) return neighborhood_kernel(g2, g1, u2, u, cfg);
  detail::NeighborhoodMemo memo(g1, g2, cfg.decay, cfg.hops);
  return memo.eval(u, u2, cfg.hops);
}

/// All walks with a fixed node count, stored flat: walk i occupies
/// nodes[i*length .. (i+1)*length) and links[i*(length-1) .. ).
struct WalkSet {
  std::size_t length = 0;
  std::vector<NodeId> nodes;
  std::vector<LinkId> links;

  std::size_t size() const noexcept { return length == 0 ? 0 : nodes.size() / length; }
  std::span<const NodeId> walk(std::size_t i) const {
    return std::span<const NodeId>(nodes).subspan(i * length, length);
  }
  std::span<const LinkId> walk_links(std::size_t i) const {
    return std::span<const LinkId>(links).subspan(i * (length - 1), length - 1);
  }
};

class EnumerationBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultWalkBudget = 10'000'000;

/// Every walk of `length` nodes following adjacency; nodes and links may repeat.
inline WalkSet enumerate_walks(const AttributedGraph& g, std::size_t length, std::size_t budget = kDefaultWalkBudget) {
  if (length == 0) throw KernelError("enumerate_walks: length must be >= 1");
  WalkSet ws;
  ws.length = length;
  std::vector<NodeId> path;
  std::vector<LinkId> path_links;
  std::size_t count = 0;
  auto extend = [&](auto&& self, NodeId u) -> void {
    path.push_back(u);
    if (path.size() == length) {
      if (++count > budget) {
        throw EnumerationBudgetExceeded("enumerate_walks: more than " + std::to_string(budget) + " walks");
      }
      ws.nodes.insert(ws.nodes.end(), path.begin(), path.end());
      ws.links.insert(ws.links.end(), path_links.begin(), path_links.end());
    } else {
      for (const auto& nb : g.neighbors(u)) {
        path_links.push_back(nb.link);
        self(self, nb.node);
        path_links.pop_back();
      }
    }
    path.pop_back();
  };
  for (std::size_t u = 0; u < g.num_nodes(); ++u) extend(extend, static_cast<NodeId>(u));
  return ws;
}

/// Random-walk kernel by literal double sum over walk pairs:
///   decay^hops * sum_{w in P(G1)} sum_{w' in P(G2)} prod <f(w_i), f(w'_i)> * prod <f(e_i), f(e'_i)>
inline double rw_kernel_enumerate(const AttributedGraph& g1, const AttributedGraph& g2, const KernelConfig& cfg,
                                  std::size_t budget = kDefaultWalkBudget) {
  cfg.validate();
  detail::check_compatible(g1, g2);
  if (detail::canonical_less(g2, g1)) return rw_kernel_enumerate(g2, g1, cfg, budget);
  const auto w1 = enumerate_walks(g1, cfg.hops + 1, budget);
  const auto w2 = enumerate_walks(g2, cfg.hops + 1, budget);
  double total = 0.0;
  for (std::size_t i = 0; i < w1.size(); ++i) {
    const auto a = w1.walk(i);
    const auto ea = w1.walk_links(i);
    for (std::size_t j = 0; j < w2.size(); ++j) {
      const auto b = w2.walk(j);
      const auto eb = w2.walk_links(j);
      double prod = 1.0;
      for (std::size_t k = 0; k < a.size() && prod != 0.0; ++k) prod *= dot(g1.node_features(a[k]), g2.node_features(b[k]));
      for (std::size_t k = 0; k < ea.size() && prod != 0.0; ++k) prod *= dot(g1.link_features(ea[k]), g2.link_features(eb[k]));
      total += prod;
    }
  }
  return std::pow(cfg.decay, static_cast<double>(cfg.hops)) * total;
}

/// Same quantity as rw_kernel_enumerate, by dynamic programming over node
/// pairs: sum_{u,u'} K_N^(hops)(u,u'), built level by level in
/// O(hops * |E1| * |E2|).
inline double rw_kernel_dp(const AttributedGraph& g1, const AttributedGraph& g2, const KernelConfig& cfg) {
  cfg.validate();
  detail::check_compatible(g1, g2);
  if (detail::canonical_less(g2, g1)) return rw_kernel_dp(g2, g1, cfg);
  const std::size_t n1 = g1.num_nodes(), n2 = g2.num_nodes();
  const auto base = detail::node_gram(g1, g2);
  std::vector<double> level = base;
  std::vector<double> next(n1 * n2);
  for (std::size_t h = 1; h <= cfg.hops; ++h) {
    for (std::size_t a = 0; a < n1; ++a) {
      for (std::size_t b = 0; b < n2; ++b) {
        double acc = 0.0;
        for (const auto& x : g1.neighbors(static_cast<NodeId>(a))) {
          for (const auto& y : g2.neighbors(static_cast<NodeId>(b))) {
            acc += level[x.node * n2 + y.node] * dot(g1.link_features(x.link), g2.link_features(y.link));
          }
        }
        next[a * n2 + b] = base[a * n2 + b] * cfg.decay * acc;
      }
    }
    std::swap(level, next);
  }
  double total = 0.0;
  for (double v : level) total += v;
  return total;
}

/// Gram matrix of rw_kernel_dp over a set of graphs (row-major, n x n).
inline std::vector<double> rw_gram(std::span<const AttributedGraph> graphs, const KernelConfig& cfg) {
  const std::size_t n = graphs.size();
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      out[i * n + j] = out[j * n + i] = rw_kernel_dp(graphs[i], graphs[j], cfg);
    }
  }
  return out;
}

}  // namespace lase::kernels
