#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lase/checkpoint.hpp"
#include "lase/graph.hpp"
#include "lase/tape.hpp"
#include "lase/tensor.hpp"

namespace lase {

enum class Architecture { rw, wl, sage, concat };
enum class Activation { identity, relu, sigmoid };
enum class CombineOp { sum, hadamard, concat };

inline Architecture parse_architecture(const std::string& s) {
  if (s == "rw") return Architecture::rw;
  if (s == "wl") return Architecture::wl;
  if (s == "sage") return Architecture::sage;
  if (s == "concat") return Architecture::concat;
  throw std::invalid_argument("unknown architecture '" + s + "'");
}
inline std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::rw: return "rw";
    case Architecture::wl: return "wl";
    case Architecture::sage: return "sage";
    case Architecture::concat: return "concat";
  }
  return "?";
}
inline Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation '" + s + "'");
}
inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}
inline CombineOp parse_combine(const std::string& s) {
  if (s == "sum") return CombineOp::sum;
  if (s == "hadamard") return CombineOp::hadamard;
  if (s == "concat") return CombineOp::concat;
  throw std::invalid_argument("unknown combine op '" + s + "'");
}
inline std::string to_string(CombineOp c) {
  switch (c) {
    case CombineOp::sum: return "sum";
    case CombineOp::hadamard: return "hadamard";
    case CombineOp::concat: return "concat";
  }
  return "?";
}

struct StackConfig {
  Architecture arch = Architecture::sage;
  std::size_t depth = 2;
  std::size_t hidden = 64;
  /// sigma_* applied to every layer output. Forced to identity in kernel mode.
  Activation output_activation = Activation::relu;
  CombineOp combine = CombineOp::concat;
  bool amplifier_sigmoid = false;
  /// Gate-free, activation-free RW/WL pipeline with a constant decay.
  bool kernel_mode = false;
  double constant_decay = 0.5;
  /// RW only: use h^(l-1)(u) ⊙ U f(e) ⊙ W f(v) inside the neighbour sum
  /// instead of the neighbour-chained h^(l-1)(v) ⊙ U f(e) ⊙ W f(u).
  bool rw_central_term = false;
  /// WL only: the hidden pipeline reads r^(wl_depth-1).
  std::size_t wl_depth = 1;
  Activation relabel_activation = Activation::sigmoid;
};

/// Weights of one convolution layer. Which members are present depends on
/// the architecture:
///   rw/wl   W (hidden x d_node), U (hidden x d_link), V, b
///   sage    W1, W2 (hidden x in), U (in x d_link), V, b
///   concat  W = [W1 W2] (hidden x (in + d_link))
/// V is 1 x (2*in + d_link) over [h(u); f(e); h(v)], b is 1 x 1; both are
/// absent in kernel mode.
struct LayerParams {
  std::optional<Tensor2> W;
  std::optional<Tensor2> W1;
  std::optional<Tensor2> W2;
  std::optional<Tensor2> U;
  std::optional<Tensor2> V;
  std::optional<Tensor2> b;
};

/// Shared relabelling weights of LASE-WL, all d_node x d_node.
struct RelabelParams {
  Tensor2 P1;
  Tensor2 P2;
  Tensor2 Q;
};

inline Tensor2 glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor2 t(rows, cols, true);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

class LayerStack {
 public:
  LayerStack() = default;

  LayerStack(StackConfig cfg, std::size_t d_node, std::size_t d_link, std::uint64_t seed)
      : cfg_(cfg), d_node_(d_node), d_link_(d_link) {
    if (cfg_.depth < 1) throw std::invalid_argument("LayerStack: depth must be >= 1");
    if (cfg_.hidden < 1) throw std::invalid_argument("LayerStack: hidden width must be >= 1");
    if (d_node == 0 || d_link == 0) throw std::invalid_argument("LayerStack: feature dims must be positive");
    if (cfg_.kernel_mode) {
      if (cfg_.arch != Architecture::rw && cfg_.arch != Architecture::wl) {
        throw std::invalid_argument("LayerStack: kernel mode needs the rw or wl architecture");
      }
      if (!(cfg_.constant_decay > 0.0 && cfg_.constant_decay < 1.0)) {
        throw std::invalid_argument("LayerStack: constant decay must lie in (0,1)");
      }
      cfg_.output_activation = Activation::identity;
      cfg_.amplifier_sigmoid = false;
    }
    if (cfg_.arch == Architecture::wl && cfg_.wl_depth < 1) {
      throw std::invalid_argument("LayerStack: wl_depth must be >= 1");
    }
    std::mt19937_64 rng(seed);
    const std::size_t H = cfg_.hidden;
    const bool gated = !cfg_.kernel_mode && cfg_.arch != Architecture::concat;
    if (cfg_.arch == Architecture::rw || cfg_.arch == Architecture::wl) {
      input_projection_ = glorot_uniform(H, d_node_, rng);
    }
    if (cfg_.arch == Architecture::wl) {
      relabel_ = RelabelParams{glorot_uniform(d_node_, d_node_, rng), glorot_uniform(d_node_, d_node_, rng),
                               glorot_uniform(d_node_, d_node_, rng)};
    }
    layers_.resize(cfg_.depth);
    for (std::size_t l = 1; l <= cfg_.depth; ++l) {
      auto& p = layers_[l - 1];
      const std::size_t in = hidden_dim(l - 1);
      switch (cfg_.arch) {
        case Architecture::rw:
        case Architecture::wl:
          p.W = glorot_uniform(H, d_node_, rng);
          p.U = glorot_uniform(H, d_link_, rng);
          break;
        case Architecture::sage:
          p.W1 = glorot_uniform(H, in, rng);
          p.W2 = glorot_uniform(H, in, rng);
          p.U = glorot_uniform(in, d_link_, rng);
          break;
        case Architecture::concat:
          p.W = glorot_uniform(H, in + d_link_, rng);
          break;
      }
      if (gated) {
        p.V = glorot_uniform(1, 2 * in + d_link_, rng);
        p.b = Tensor2(1, 1, true);
      }
    }
  }

  const StackConfig& config() const noexcept { return cfg_; }
  std::size_t depth() const noexcept { return cfg_.depth; }
  std::size_t d_node() const noexcept { return d_node_; }
  std::size_t d_link() const noexcept { return d_link_; }
  bool gated() const noexcept { return !cfg_.kernel_mode && cfg_.arch != Architecture::concat; }

  /// Width of h^(level).
  std::size_t hidden_dim(std::size_t level) const {
    switch (cfg_.arch) {
      case Architecture::rw:
      case Architecture::wl:
        return cfg_.hidden;
      case Architecture::sage:
        if (level == 0) return d_node_;
        return cfg_.combine == CombineOp::concat ? 2 * cfg_.hidden : cfg_.hidden;
      case Architecture::concat:
        return level == 0 ? d_node_ : cfg_.hidden;
    }
    return 0;
  }
  std::size_t output_dim() const { return hidden_dim(cfg_.depth); }

  /// W^(0) for rw/wl.
  std::optional<Tensor2>& input_projection() noexcept { return input_projection_; }
  const std::optional<Tensor2>& input_projection() const noexcept { return input_projection_; }
  /// Layer l, 1-based.
  LayerParams& layer(std::size_t l) { return layers_.at(l - 1); }
  const LayerParams& layer(std::size_t l) const { return layers_.at(l - 1); }
  std::optional<RelabelParams>& relabel() noexcept { return relabel_; }
  const std::optional<RelabelParams>& relabel() const noexcept { return relabel_; }

  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> out;
    if (input_projection_) out.push_back({"W0", &*input_projection_});
    if (relabel_) {
      out.push_back({"relabel.P1", &relabel_->P1});
      out.push_back({"relabel.P2", &relabel_->P2});
      out.push_back({"relabel.Q", &relabel_->Q});
    }
    for (std::size_t l = 1; l <= layers_.size(); ++l) {
      auto& p = layers_[l - 1];
      const std::string pre = "layer" + std::to_string(l) + ".";
      if (p.W) out.push_back({pre + "W", &*p.W});
      if (p.W1) out.push_back({pre + "W1", &*p.W1});
      if (p.W2) out.push_back({pre + "W2", &*p.W2});
      if (p.U) out.push_back({pre + "U", &*p.U});
      if (p.V) out.push_back({pre + "V", &*p.V});
      if (p.b) out.push_back({pre + "b", &*p.b});
    }
    return out;
  }

 private:
  StackConfig cfg_;
  std::size_t d_node_ = 0;
  std::size_t d_link_ = 0;
  std::optional<Tensor2> input_projection_;
  std::optional<RelabelParams> relabel_;
  std::vector<LayerParams> layers_;
};

inline Var apply_activation(Tape& tape, Var x, Activation act) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return tape.relu(x);
    case Activation::sigmoid: return tape.sigmoid(x);
  }
  return x;
}

/// lambda = sigmoid(V [h(u); f(e); h(v)] + b), a 1x1 value in (0,1).
inline Var gate(Tape& tape, Var h_u, Var f_e, Var h_v, Var V, Var b) {
  const Var joined = tape.concat({h_u, f_e, h_v});
  return tape.sigmoid(tape.add(tape.matvec(V, joined), b));
}

/// The link-dependent multiplier U f(e), optionally squashed.
inline Var link_transform(Tape& tape, Var f_e, Var U, bool squash) {
  const Var t = tape.matvec(U, f_e);
  return squash ? tape.sigmoid(t) : t;
}

/// h(v) ⊙ U f(e), or h(v) ⊙ sigmoid(U f(e)).
inline Var amplifier(Tape& tape, Var h_v, Var f_e, Var U, bool squash) {
  return tape.hadamard(h_v, link_transform(tape, f_e, U, squash));
}

/// Which neighbours enter a neighbourhood sum and with what weight. The
/// estimate is sum_j coef_j * lambda_j * g_j over the returned choices; slots
/// index N(u) and are returned in ascending order.
struct NeighborChoice {
  std::uint32_t slot;
  double coef;
};

class NeighborSelector {
 public:
  virtual ~NeighborSelector() = default;
  virtual void select(std::size_t layer, NodeId u, std::size_t degree, std::vector<NeighborChoice>& out) = 0;
};

class FullNeighborhood final : public NeighborSelector {
 public:
  void select(std::size_t, NodeId, std::size_t degree, std::vector<NeighborChoice>& out) override {
    out.clear();
    for (std::size_t j = 0; j < degree; ++j) out.push_back({static_cast<std::uint32_t>(j), 1.0});
  }
};

/// One recorded term of a neighbourhood sum.
struct NeighborTerm {
  std::uint32_t slot;
  double gate;  ///< lambda value (1 for ungated architectures)
  Var summand;  ///< g(v|u), lambda not applied
  double coef;
};

class ForwardObserver {
 public:
  virtual ~ForwardObserver() = default;
  virtual void on_neighborhood(std::size_t layer, NodeId u, const Tape& tape, std::span<const NeighborTerm> terms) = 0;
};

/// Records the forward pass of a LayerStack on a tape.
///
/// Layer outputs are only computed where needed: the batch at the top
/// layer, and at each lower level the centres above plus whichever
/// neighbours the selector picked for them.
class StackForward {
 public:
  StackForward(Tape& tape, const AttributedGraph& g, LayerStack& stack)
      : tape_(tape), g_(g), stack_(stack), cfg_(stack.config()) {
    if (g.d_node() != stack.d_node() || g.d_link() != stack.d_link()) {
      throw ShapeError("StackForward: graph dims (" + std::to_string(g.d_node()) + "," + std::to_string(g.d_link()) +
                       ") do not match stack dims (" + std::to_string(stack.d_node()) + "," +
                       std::to_string(stack.d_link()) + ")");
    }
    if (stack.input_projection()) w0_ = tape_.param(*stack.input_projection());
    if (stack.relabel()) {
      p1_ = tape_.param(stack.relabel()->P1);
      p2_ = tape_.param(stack.relabel()->P2);
      q_ = tape_.param(stack.relabel()->Q);
    }
    bound_.resize(cfg_.depth + 1);
    for (std::size_t l = 1; l <= cfg_.depth; ++l) {
      auto& p = stack.layer(l);
      auto& b = bound_[l];
      if (p.W) b.W = tape_.param(*p.W);
      if (p.W1) b.W1 = tape_.param(*p.W1);
      if (p.W2) b.W2 = tape_.param(*p.W2);
      if (p.U) b.U = tape_.param(*p.U);
      if (p.V) b.V = tape_.param(*p.V);
      if (p.b) b.b = tape_.param(*p.b);
    }
    hidden_.assign(cfg_.depth + 1, std::vector<Var>(g.num_nodes()));
    node_const_.assign(g.num_nodes(), Var{});
    link_const_.assign(g.num_links(), Var{});
    link_tf_.assign(cfg_.depth + 1, std::vector<Var>(g.num_links()));
  }

  /// Returns h^(top)(u) for every u in `batch`, in batch order; `top`
  /// defaults to the stack depth.
  std::vector<Var> run(std::span<const NodeId> batch, NeighborSelector& selector, ForwardObserver* observer = nullptr,
                       std::size_t top = 0) {
    if (top > cfg_.depth) throw std::out_of_range("forward: top level exceeds depth");
    const std::size_t L = top == 0 ? cfg_.depth : top;
    for (NodeId u : batch) {
      if (u >= g_.num_nodes()) throw std::out_of_range("forward: node " + std::to_string(u) + " out of range");
    }
    // Top-down: choose neighbours and collect what each level needs.
    std::vector<std::vector<NodeId>> centres(L + 1);
    centres[L].assign(batch.begin(), batch.end());
    sort_unique(centres[L]);
    std::vector<std::vector<std::vector<NeighborChoice>>> choices(L + 1);
    const bool needs_self = cfg_.arch == Architecture::sage || stack_.gated() ||
                            (cfg_.arch == Architecture::rw && cfg_.rw_central_term);
    for (std::size_t l = L; l >= 1; --l) {
      auto& below = centres[l - 1];
      choices[l].resize(centres[l].size());
      for (std::size_t i = 0; i < centres[l].size(); ++i) {
        const NodeId u = centres[l][i];
        selector.select(l, u, g_.degree(u), choices[l][i]);
        const auto nbrs = g_.neighbors(u);
        for (const auto& c : choices[l][i]) below.push_back(nbrs[c.slot].node);
        if (needs_self) below.push_back(u);
      }
      sort_unique(below);
    }
    if (cfg_.arch == Architecture::wl) {
      std::vector<NodeId> want;
      for (const auto& level : centres) want.insert(want.end(), level.begin(), level.end());
      sort_unique(want);
      compute_relabel(want, cfg_.wl_depth - 1);
    }
    for (NodeId u : centres[0]) hidden_[0][u] = base_hidden(u);
    for (std::size_t l = 1; l <= L; ++l) {
      for (std::size_t i = 0; i < centres[l].size(); ++i) {
        hidden_[l][centres[l][i]] = layer_output(l, centres[l][i], choices[l][i], observer);
      }
    }
    std::vector<Var> out;
    out.reserve(batch.size());
    for (NodeId u : batch) out.push_back(hidden_[L][u]);
    return out;
  }

  /// h^(level)(u) if it was computed by the last run.
  Var hidden(std::size_t level, NodeId u) const { return hidden_.at(level).at(u); }

  /// r^(rounds)(u) for every u in `nodes`, relabelling over full neighbourhoods.
  std::vector<Var> relabel(std::span<const NodeId> nodes, std::size_t rounds) {
    std::vector<NodeId> want(nodes.begin(), nodes.end());
    sort_unique(want);
    compute_relabel(want, rounds);
    std::vector<Var> out;
    for (NodeId u : nodes) out.push_back(relabel_[u]);
    return out;
  }

 private:
  struct Bound {
    Var W, W1, W2, U, V, b;
  };

  static void sort_unique(std::vector<NodeId>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  Var node_const(NodeId u) {
    if (!node_const_[u].valid()) node_const_[u] = tape_.constant(g_.node_features(u));
    return node_const_[u];
  }
  Var link_const(LinkId e) {
    if (!link_const_[e].valid()) link_const_[e] = tape_.constant(g_.link_features(e));
    return link_const_[e];
  }
  Var link_tf(std::size_t l, LinkId e) {
    auto& slot = link_tf_[l][e];
    if (!slot.valid()) slot = link_transform(tape_, link_const(e), bound_[l].U, cfg_.amplifier_sigmoid);
    return slot;
  }

  void compute_relabel(const std::vector<NodeId>& want, std::size_t rounds) {
    if (!stack_.relabel()) throw std::logic_error("relabel: stack has no relabelling weights");
    // Level sets: S_rounds = want, S_{j-1} = S_j ∪ N(S_j).
    std::vector<std::vector<NodeId>> sets(rounds + 1);
    sets[rounds] = want;
    for (std::size_t j = rounds; j >= 1; --j) {
      sets[j - 1] = sets[j];
      for (NodeId u : sets[j]) {
        for (const auto& nb : g_.neighbors(u)) sets[j - 1].push_back(nb.node);
      }
      sort_unique(sets[j - 1]);
    }
    std::vector<Var> prev(g_.num_nodes());
    for (NodeId u : sets[0]) prev[u] = node_const(u);
    for (std::size_t j = 1; j <= rounds; ++j) {
      std::vector<Var> squashed(g_.num_nodes());
      std::vector<Var> next(g_.num_nodes());
      for (NodeId u : sets[j]) {
        Var pre = tape_.matvec(p1_, prev[u]);
        const auto nbrs = g_.neighbors(u);
        if (!nbrs.empty()) {
          std::vector<Var> parts;
          parts.reserve(nbrs.size());
          for (const auto& nb : nbrs) {
            auto& s = squashed[nb.node];
            if (!s.valid()) s = apply_activation(tape_, tape_.matvec(q_, prev[nb.node]), cfg_.relabel_activation);
            parts.push_back(s);
          }
          pre = tape_.add(pre, tape_.matvec(p2_, tape_.add_n(parts)));
        }
        next[u] = apply_activation(tape_, pre, cfg_.relabel_activation);
      }
      prev = std::move(next);
    }
    relabel_.assign(g_.num_nodes(), Var{});
    for (NodeId u : want) relabel_[u] = prev[u];
  }

  /// f(u) for rw, r^(d-1)(u) for wl.
  Var node_input(NodeId u) { return cfg_.arch == Architecture::wl ? relabel_[u] : node_const(u); }

  Var base_hidden(NodeId u) {
    switch (cfg_.arch) {
      case Architecture::rw:
      case Architecture::wl:
        return tape_.matvec(w0_, node_input(u));
      case Architecture::sage:
      case Architecture::concat:
        return node_const(u);
    }
    return {};
  }

  Var layer_output(std::size_t l, NodeId u, const std::vector<NeighborChoice>& picks, ForwardObserver* observer) {
    const auto& b = bound_[l];
    const auto nbrs = g_.neighbors(u);
    const auto& below = hidden_[l - 1];
    const Activation act = cfg_.output_activation;

    Var centre_w;  // W^(l) f(u) / W^(l) r(u), shared by all terms of u
    if ((cfg_.arch == Architecture::rw && !cfg_.rw_central_term) || cfg_.arch == Architecture::wl) {
      centre_w = tape_.matvec(b.W, node_input(u));
    }

    std::vector<NeighborTerm> terms;
    terms.reserve(picks.size());
    std::vector<Var> weighted;
    weighted.reserve(picks.size());
    for (const auto& pick : picks) {
      const NeighborRef nb = nbrs[pick.slot];
      Var summand;
      switch (cfg_.arch) {
        case Architecture::rw:
          if (cfg_.rw_central_term) {
            summand = tape_.hadamard(tape_.hadamard(below[u], link_tf(l, nb.link)),
                                     tape_.matvec(b.W, node_const(nb.node)));
          } else {
            summand = tape_.hadamard(tape_.hadamard(below[nb.node], link_tf(l, nb.link)), centre_w);
          }
          break;
        case Architecture::wl:
          summand = tape_.hadamard(tape_.hadamard(below[nb.node], link_tf(l, nb.link)), centre_w);
          break;
        case Architecture::sage:
          summand = tape_.hadamard(below[nb.node], link_tf(l, nb.link));
          break;
        case Architecture::concat:
          summand = tape_.concat({below[nb.node], link_const(nb.link)});
          break;
      }
      Var term;
      double gate_value = 1.0;
      if (stack_.gated()) {
        const Var lambda = gate(tape_, below[u], link_const(nb.link), below[nb.node], b.V, b.b);
        gate_value = tape_.scalar(lambda);
        term = tape_.scale_by(lambda, summand);
        if (pick.coef != 1.0) term = tape_.scale(term, pick.coef);
      } else {
        if (cfg_.kernel_mode) gate_value = cfg_.constant_decay;
        const double c = gate_value * pick.coef;
        term = c == 1.0 ? summand : tape_.scale(summand, c);
      }
      terms.push_back({pick.slot, gate_value, summand, pick.coef});
      weighted.push_back(term);
    }
    if (observer) observer->on_neighborhood(l, u, tape_, terms);

    const std::size_t sum_dim = cfg_.arch == Architecture::concat ? stack_.hidden_dim(l - 1) + g_.d_link()
                                                                  : (cfg_.arch == Architecture::sage ? stack_.hidden_dim(l - 1)
                                                                                                     : cfg_.hidden);
    const Var nsum = weighted.empty() ? tape_.zeros(sum_dim) : tape_.add_n(weighted);

    switch (cfg_.arch) {
      case Architecture::rw:
      case Architecture::wl:
        return apply_activation(tape_, nsum, act);
      case Architecture::sage: {
        const Var self = tape_.matvec(b.W1, below[u]);
        const Var agg = tape_.matvec(b.W2, nsum);
        Var combined;
        switch (cfg_.combine) {
          case CombineOp::sum: combined = tape_.add(self, agg); break;
          case CombineOp::hadamard: combined = tape_.hadamard(self, agg); break;
          case CombineOp::concat: combined = tape_.concat({self, agg}); break;
        }
        return apply_activation(tape_, combined, act);
      }
      case Architecture::concat:
        return apply_activation(tape_, tape_.matvec(b.W, nsum), act);
    }
    return {};
  }

  Tape& tape_;
  const AttributedGraph& g_;
  LayerStack& stack_;
  StackConfig cfg_;
  Var w0_, p1_, p2_, q_;
  std::vector<Bound> bound_;
  std::vector<std::vector<Var>> hidden_;
  std::vector<Var> node_const_;
  std::vector<Var> link_const_;
  std::vector<std::vector<Var>> link_tf_;
  std::vector<Var> relabel_;
};

/// Values of h^(L) for `nodes` under full neighbourhoods, evaluated in chunks.
inline std::vector<Tensor2> infer_hidden(const AttributedGraph& g, LayerStack& stack, std::span<const NodeId> nodes,
                                         std::size_t chunk = 256) {
  std::vector<Tensor2> out;
  out.reserve(nodes.size());
  FullNeighborhood full;
  for (std::size_t start = 0; start < nodes.size(); start += chunk) {
    const auto part = nodes.subspan(start, std::min(chunk, nodes.size() - start));
    Tape tape;
    StackForward fwd(tape, g, stack);
    for (Var v : fwd.run(part, full)) out.push_back(tape.tensor(v));
  }
  return out;
}

/// r^(rounds)(u) for every node of g.
inline std::vector<Tensor2> wl_relabel(const AttributedGraph& g, LayerStack& stack, std::size_t rounds) {
  Tape tape;
  StackForward fwd(tape, g, stack);
  std::vector<NodeId> all(g.num_nodes());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
  std::vector<Tensor2> out;
  for (Var v : fwd.relabel(all, rounds)) out.push_back(tape.tensor(v));
  return out;
}

}  // namespace lase
