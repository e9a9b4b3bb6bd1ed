#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lase/graph.hpp"
#include "lase/layers.hpp"

namespace lase {

enum class SamplingStrategy { full, uniform, gate, min_var };

inline SamplingStrategy parse_strategy(const std::string& s) {
  if (s == "full") return SamplingStrategy::full;
  if (s == "uniform") return SamplingStrategy::uniform;
  if (s == "gate") return SamplingStrategy::gate;
  if (s == "minvar" || s == "min_var") return SamplingStrategy::min_var;
  throw std::invalid_argument("unknown sampling strategy '" + s + "'");
}
inline std::string to_string(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::full: return "full";
    case SamplingStrategy::uniform: return "uniform";
    case SamplingStrategy::gate: return "gate";
    case SamplingStrategy::min_var: return "minvar";
  }
  return "?";
}

struct SamplePlan {
  SamplingStrategy strategy = SamplingStrategy::full;
  std::size_t sample_size = 4;       ///< draws per neighbourhood per layer, with replacement
  std::size_t refresh_interval = 1;  ///< batches between recomputing distributions

  void validate() const {
    if (sample_size < 1) throw std::invalid_argument("SamplePlan: sample size must be >= 1");
    if (refresh_interval < 1) throw std::invalid_argument("SamplePlan: refresh interval must be >= 1");
  }
};

inline constexpr double kProbabilityFloor = 1e-12;

class SamplingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The gates lambda_{u,v} and summands g(v|u) of one neighbourhood, N(u)
/// order. The neighbourhood sum is sum_v lambda_v g_v.
struct NeighborhoodTerms {
  std::vector<double> gates;
  std::vector<std::vector<double>> summands;

  std::size_t size() const noexcept { return gates.size(); }
  std::size_t dim() const noexcept { return summands.empty() ? 0 : summands.front().size(); }
};

inline std::vector<double> full_sum(const NeighborhoodTerms& t) {
  std::vector<double> out(t.dim(), 0.0);
  for (std::size_t v = 0; v < t.size(); ++v) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += t.gates[v] * t.summands[v][c];
  }
  return out;
}

namespace detail {

inline std::vector<double> normalise_with_floor(std::vector<double> w) {
  if (w.empty()) throw SamplingError("sampling distribution over an empty neighbourhood");
  double total = 0.0;
  for (double x : w) total += x;
  if (total > 0.0) {
    for (auto& x : w) x /= total;
  }
  total = 0.0;
  for (auto& x : w) {
    x = std::max(x, kProbabilityFloor);
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

/// Index drawn from `probs` by inverse CDF.
inline std::size_t draw(std::span<const double> probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double r = u01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (r < acc) return i;
  }
  return probs.size() - 1;
}

}  // namespace detail

inline std::vector<double> probs_uniform(std::size_t degree) {
  if (degree == 0) throw SamplingError("probs_uniform: empty neighbourhood");
  return std::vector<double>(degree, 1.0 / static_cast<double>(degree));
}

/// p(v|u) proportional to lambda_{u,v}.
inline std::vector<double> probs_gate(const NeighborhoodTerms& t) { return detail::normalise_with_floor(t.gates); }

/// p(v|u) proportional to lambda_{u,v} * ||g(v|u)||_2, the single-draw
/// variance minimiser.
inline std::vector<double> probs_minvar(const NeighborhoodTerms& t) {
  std::vector<double> w(t.size());
  for (std::size_t v = 0; v < t.size(); ++v) w[v] = t.gates[v] * norm2(t.summands[v]);
  return detail::normalise_with_floor(std::move(w));
}

inline std::vector<double> probs_for(SamplingStrategy s, const NeighborhoodTerms& t) {
  switch (s) {
    case SamplingStrategy::gate: return probs_gate(t);
    case SamplingStrategy::min_var: return probs_minvar(t);
    default: return probs_uniform(t.size());
  }
}

/// (1/s) sum_j lambda_{v_j} g(v_j) / p(v_j) over s i.i.d. draws with replacement.
inline std::vector<double> estimate_neighbor_sum(const NeighborhoodTerms& t, std::span<const double> probs,
                                                 std::size_t s, std::mt19937_64& rng) {
  if (s < 1) throw SamplingError("estimate_neighbor_sum: sample size must be >= 1");
  if (probs.size() != t.size() || t.size() == 0) throw SamplingError("estimate_neighbor_sum: bad distribution");
  std::vector<double> out(t.dim(), 0.0);
  for (std::size_t j = 0; j < s; ++j) {
    const std::size_t v = detail::draw(probs, rng);
    if (probs[v] <= 0.0) throw SamplingError("estimate_neighbor_sum: drew a zero-probability neighbour");
    const double w = t.gates[v] / (probs[v] * static_cast<double>(s));
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += w * t.summands[v][c];
  }
  return out;
}

/// Single-draw estimator variance summed over coordinates:
///   sum_c [ sum_v (lambda_v g_v[c])^2 / p_v - (sum_v lambda_v g_v[c])^2 ].
inline double estimator_variance(const NeighborhoodTerms& t, std::span<const double> probs) {
  if (t.size() == 0) throw SamplingError("estimator_variance: empty neighbourhood");
  if (probs.size() != t.size()) throw SamplingError("estimator_variance: distribution size mismatch");
  const auto mean = full_sum(t);
  double total = 0.0;
  for (std::size_t c = 0; c < mean.size(); ++c) {
    double second = 0.0;
    for (std::size_t v = 0; v < t.size(); ++v) {
      const double x = t.gates[v] * t.summands[v][c];
      second += x * x / probs[v];
    }
    total += second - mean[c] * mean[c];
  }
  return total;
}

namespace detail {

class TermCollector final : public ForwardObserver {
 public:
  TermCollector(std::size_t layer, NodeId u) : layer_(layer), u_(u) {}
  void on_neighborhood(std::size_t layer, NodeId u, const Tape& tape, std::span<const NeighborTerm> terms) override {
    if (layer != layer_ || u != u_) return;
    for (const auto& t : terms) {
      result.gates.push_back(t.gate);
      const auto v = tape.value(t.summand);
      result.summands.emplace_back(v.begin(), v.end());
    }
  }
  NeighborhoodTerms result;

 private:
  std::size_t layer_;
  NodeId u_;
};

}  // namespace detail

/// Gates and summands of N(u) at `layer` under full neighbourhoods and the
/// stack's current parameters.
inline NeighborhoodTerms neighborhood_terms(const AttributedGraph& g, LayerStack& stack, std::size_t layer, NodeId u) {
  if (layer < 1 || layer > stack.depth()) throw std::out_of_range("neighborhood_terms: layer out of range");
  Tape tape;
  StackForward fwd(tape, g, stack);
  FullNeighborhood full;
  detail::TermCollector collect(layer, u);
  const NodeId batch[] = {u};
  fwd.run(batch, full, &collect, layer);
  return std::move(collect.result);
}

/// g^(layer)(v|u) with the gate factored out.
inline std::vector<double> neighbor_summand(const AttributedGraph& g, LayerStack& stack, std::size_t layer, NodeId u,
                                            NodeId v) {
  const auto nbrs = g.neighbors(u);
  const auto it = std::find_if(nbrs.begin(), nbrs.end(), [v](const NeighborRef& r) { return r.node == v; });
  if (it == nbrs.end()) {
    throw SamplingError("neighbor_summand: " + std::to_string(v) + " is not a neighbour of " + std::to_string(u));
  }
  auto terms = neighborhood_terms(g, stack, layer, u);
  return std::move(terms.summands[static_cast<std::size_t>(it - nbrs.begin())]);
}

inline std::vector<double> probs_gate(const AttributedGraph& g, LayerStack& stack, std::size_t layer, NodeId u) {
  if (g.degree(u) == 0) throw SamplingError("probs_gate: empty neighbourhood");
  return probs_gate(neighborhood_terms(g, stack, layer, u));
}
inline std::vector<double> probs_minvar(const AttributedGraph& g, LayerStack& stack, std::size_t layer, NodeId u) {
  if (g.degree(u) == 0) throw SamplingError("probs_minvar: empty neighbourhood");
  return probs_minvar(neighborhood_terms(g, stack, layer, u));
}

/// Per (layer, node) sampling distributions with an interval-k refresh.
class SamplerState {
 public:
  SamplerState() = default;
  SamplerState(std::size_t depth, std::size_t num_nodes) : probs_(depth + 1, std::vector<std::vector<double>>(num_nodes)) {}

  /// Distribution over N(u) at `layer`; empty when none has been computed.
  std::span<const double> probs(std::size_t layer, NodeId u) const { return probs_.at(layer).at(u); }

  std::size_t batches_since_refresh() const noexcept { return since_; }
  std::size_t refresh_count() const noexcept { return refreshes_; }
  /// Count of neighbour terms evaluated by refreshes so far.
  std::size_t refresh_work() const noexcept { return work_; }

  /// Recomputes every distribution the training batches can reach iff no
  /// refresh has happened yet or at least `plan.refresh_interval` batches
  /// have passed since the last one. Returns whether it refreshed.
  bool refresh(const AttributedGraph& g, LayerStack& stack, const SamplePlan& plan, std::span<const NodeId> train) {
    if (refreshes_ > 0 && since_ < plan.refresh_interval) return false;
    if (plan.strategy == SamplingStrategy::gate || plan.strategy == SamplingStrategy::min_var) recompute(g, stack, plan, train);
    since_ = 0;
    ++refreshes_;
    return true;
  }

  /// Marks one training batch as done.
  void tick() noexcept { ++since_; }

 private:
  class Recorder final : public ForwardObserver {
   public:
    Recorder(SamplerState& s, SamplingStrategy strategy) : s_(s), strategy_(strategy) {}
    void on_neighborhood(std::size_t layer, NodeId u, const Tape& tape, std::span<const NeighborTerm> terms) override {
      if (terms.empty()) return;
      NeighborhoodTerms t;
      for (const auto& term : terms) {
        t.gates.push_back(term.gate);
        const auto v = tape.value(term.summand);
        t.summands.emplace_back(v.begin(), v.end());
      }
      s_.work_ += terms.size();
      s_.probs_[layer][u] = probs_for(strategy_, t);
    }

   private:
    SamplerState& s_;
    SamplingStrategy strategy_;
  };

  void recompute(const AttributedGraph& g, LayerStack& stack, const SamplePlan& plan, std::span<const NodeId> train) {
    constexpr std::size_t chunk = 128;
    Recorder rec(*this, plan.strategy);
    FullNeighborhood full;
    for (std::size_t start = 0; start < train.size(); start += chunk) {
      Tape tape;
      StackForward fwd(tape, g, stack);
      fwd.run(train.subspan(start, std::min(chunk, train.size() - start)), full, &rec);
    }
  }

  std::vector<std::vector<std::vector<double>>> probs_;
  std::size_t since_ = 0;
  std::size_t refreshes_ = 0;
  std::size_t work_ = 0;
};

/// Neighbour selection for training batches: full neighbourhoods, or s draws
/// with replacement from the uniform / refreshed distributions. Probabilities
/// enter the weights as constants, so no gradient flows through them.
class SampledNeighborhood final : public NeighborSelector {
 public:
  SampledNeighborhood(const SamplePlan& plan, const SamplerState* state, std::mt19937_64& rng)
      : plan_(plan), state_(state), rng_(rng) {}

  void select(std::size_t layer, NodeId u, std::size_t degree, std::vector<NeighborChoice>& out) override {
    out.clear();
    if (plan_.strategy == SamplingStrategy::full || degree == 0) {
      for (std::size_t j = 0; j < degree; ++j) out.push_back({static_cast<std::uint32_t>(j), 1.0});
      return;
    }
    std::span<const double> probs;
    if (plan_.strategy != SamplingStrategy::uniform && state_ != nullptr) probs = state_->probs(layer, u);
    if (probs.size() != degree) {
      uniform_ = probs_uniform(degree);
      probs = uniform_;
    }
    weights_.assign(degree, 0.0);
    const double s = static_cast<double>(plan_.sample_size);
    for (std::size_t j = 0; j < plan_.sample_size; ++j) {
      const std::size_t v = detail::draw(probs, rng_);
      weights_[v] += 1.0 / (s * probs[v]);
    }
    for (std::size_t j = 0; j < degree; ++j) {
      if (weights_[j] != 0.0) out.push_back({static_cast<std::uint32_t>(j), weights_[j]});
    }
  }

 private:
  SamplePlan plan_;
  const SamplerState* state_;
  std::mt19937_64& rng_;
  std::vector<double> uniform_;
  std::vector<double> weights_;
};

}  // namespace lase
