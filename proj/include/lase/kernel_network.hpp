#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lase/graph.hpp"
#include "lase/kernels.hpp"
#include "lase/layers.hpp"

// Correspondence between kernel-mode LASE-RW and the random-walk kernel: the
// node-sum of the k-th hidden coordinate equals the walk kernel between the
// input graph and a path graph whose features are the k-th parameter rows.

namespace lase::kernels {

/// Directed path v_0 -> ... -> v_L with f(v_i) = row k of W^(i) and
/// f(v_i -> v_{i+1}) = row k of U^(i+1). Directed, so its only walk of L+1
/// nodes is the full path.
inline AttributedGraph param_path_graph(const LayerStack& stack, std::size_t k) {
  if (!stack.input_projection() || stack.config().arch != Architecture::rw) {
    throw KernelError("param_path_graph: needs an rw stack");
  }
  if (k >= stack.config().hidden) throw KernelError("param_path_graph: coordinate out of range");
  const auto row = [k](const Tensor2& t) {
    const auto r = t.row(k);
    return std::vector<double>(r.begin(), r.end());
  };
  std::vector<NodeRecord> nodes;
  std::vector<LinkRecord> links;
  nodes.push_back({0, row(*stack.input_projection()), std::nullopt});
  for (std::size_t i = 1; i <= stack.depth(); ++i) {
    const auto& p = stack.layer(i);
    nodes.push_back({static_cast<NodeId>(i), row(*p.W), std::nullopt});
    links.push_back({static_cast<LinkId>(i - 1), static_cast<NodeId>(i - 1), static_cast<NodeId>(i), row(*p.U)});
  }
  AttributedGraph::Options opts;
  opts.undirected = false;
  return AttributedGraph::build(std::move(nodes), std::move(links), opts);
}

struct Theorem1Check {
  double lhs = 0.0;  ///< sum over nodes of h^(L)(v)[k]
  double rhs = 0.0;  ///< walk kernel against the parameter path graph
  double rel_err() const { return std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)); }
};

/// Evaluates both sides of the network/kernel identity for coordinate k.
/// The stack must be a kernel-mode rw stack whose depth and decay match cfg.
inline Theorem1Check check_theorem1(const AttributedGraph& g, LayerStack& stack, const KernelConfig& cfg,
                                    std::size_t k) {
  cfg.validate();
  const auto& sc = stack.config();
  if (!sc.kernel_mode || sc.arch != Architecture::rw || sc.rw_central_term) {
    throw KernelError("check_theorem1: stack is not a kernel-mode rw stack");
  }
  if (sc.depth != cfg.hops || sc.constant_decay != cfg.decay) {
    throw KernelError("check_theorem1: kernel config does not match the stack (hops/decay)");
  }
  std::vector<NodeId> all(g.num_nodes());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
  Theorem1Check out;
  for (const auto& h : infer_hidden(g, stack, all)) out.lhs += h[k];
  out.rhs = rw_kernel_enumerate(g, param_path_graph(stack, k), cfg);
  return out;
}

}  // namespace lase::kernels
