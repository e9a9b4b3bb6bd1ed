#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lase/graph.hpp"
#include "lase/layers.hpp"
#include "lase/sampler.hpp"
#include "lase/tape.hpp"

namespace lase {

/// Non-finite loss or parameter during training.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OptimizerKind { sgd, adam };

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer '" + s + "'");
}
inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct TrainRun {
  StackConfig stack;
  OptimizerConfig optimizer;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  SamplePlan plan;
  std::uint64_t seed = 42;
  /// Link-attribute contamination; absent or +inf means clean.
  std::optional<double> snr;

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("TrainRun: batch_size must be >= 1");
    if (patience < 1) throw std::invalid_argument("TrainRun: patience must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("TrainRun: max_epochs must be >= 1");
    if (!(optimizer.lr >= 0.0)) throw std::invalid_argument("TrainRun: learning rate must be >= 0");
    if (snr && !(*snr > 0.0)) throw std::invalid_argument("TrainRun: snr must be positive");
    plan.validate();
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_f1 = 0.0;
  double seconds = 0.0;
};

struct MetricHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_f1 = -1.0;
  double test_f1 = 0.0;
  std::size_t batches = 0;
  std::size_t refreshes = 0;
  double refresh_seconds = 0.0;
};

/// Derives independent stream seeds from one run seed (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// A layer stack plus the softmax classifier head on h^(L).
class Model {
 public:
  Model() = default;
  Model(const StackConfig& cfg, std::size_t d_node, std::size_t d_link, std::size_t n_labels, std::uint64_t seed)
      : stack_(cfg, d_node, d_link, derive_seed(seed, 0)), n_labels_(n_labels) {
    if (n_labels < 1) throw std::invalid_argument("Model: need at least one label");
    std::mt19937_64 rng(derive_seed(seed, 1));
    head_w_ = glorot_uniform(n_labels, stack_.output_dim(), rng);
    head_b_ = Tensor2(n_labels, 1, true);
  }

  LayerStack& stack() noexcept { return stack_; }
  const LayerStack& stack() const noexcept { return stack_; }
  std::size_t n_labels() const noexcept { return n_labels_; }
  Tensor2& head_weight() noexcept { return head_w_; }
  Tensor2& head_bias() noexcept { return head_b_; }
  const Tensor2& head_weight() const noexcept { return head_w_; }
  const Tensor2& head_bias() const noexcept { return head_b_; }

  std::vector<ParamRef> parameters() {
    auto out = stack_.parameters();
    out.push_back({"head.W", &head_w_});
    out.push_back({"head.b", &head_b_});
    return out;
  }

  /// Class scores W h + b for one final hidden state.
  std::vector<double> logits(std::span<const double> h) const {
    std::vector<double> out(n_labels_);
    for (std::size_t c = 0; c < n_labels_; ++c) out[c] = dot(head_w_.row(c), h) + head_b_[c];
    return out;
  }

 private:
  LayerStack stack_;
  std::size_t n_labels_ = 0;
  Tensor2 head_w_;
  Tensor2 head_b_;
};

/// Mean cross-entropy over `batch`, recorded on `tape`.
inline Var batch_loss(Tape& tape, const AttributedGraph& g, Model& model, std::span<const NodeId> batch,
                      NeighborSelector& selector) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  StackForward fwd(tape, g, model.stack());
  const auto hidden = fwd.run(batch, selector);
  const Var w = tape.param(model.head_weight());
  const Var b = tape.param(model.head_bias());
  std::vector<Var> losses;
  losses.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto label = g.label(batch[i]);
    if (!label) throw std::invalid_argument("batch_loss: node " + std::to_string(batch[i]) + " has no label");
    losses.push_back(tape.softmax_cross_entropy(tape.add(tape.matvec(w, hidden[i]), b), *label));
  }
  return tape.scale(tape.add_n(losses), 1.0 / static_cast<double>(batch.size()));
}

/// Argmax class per node under full neighbourhoods; ties go to the lowest index.
inline std::vector<std::size_t> predict(const AttributedGraph& g, Model& model, std::span<const NodeId> nodes) {
  std::vector<std::size_t> out;
  out.reserve(nodes.size());
  for (const auto& h : infer_hidden(g, model.stack(), nodes)) {
    const auto z = model.logits(h.data());
    out.push_back(static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin()));
  }
  return out;
}

/// Micro-averaged F1 for single-label multiclass predictions.
inline double micro_f1(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("micro_f1: size mismatch");
  if (predicted.empty()) throw std::invalid_argument("micro_f1: empty node set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i] ? 1 : 0;
  // Pooled TP = hit, FP = FN = n - hit, so precision = recall = F1.
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

inline std::vector<std::size_t> labels_of(const AttributedGraph& g, std::span<const NodeId> nodes) {
  std::vector<std::size_t> out;
  out.reserve(nodes.size());
  for (NodeId u : nodes) {
    const auto l = g.label(u);
    if (!l) throw std::invalid_argument("labels_of: node " + std::to_string(u) + " has no label");
    out.push_back(*l);
  }
  return out;
}

inline double evaluate(const AttributedGraph& g, Model& model, std::span<const NodeId> nodes) {
  if (nodes.empty()) throw std::invalid_argument("evaluate: empty node set");
  const auto truth = labels_of(g, nodes);
  return micro_f1(predict(g, model, nodes), truth);
}

/// SGD or Adam over a fixed parameter list; weight decay is added to the gradient.
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, std::vector<ParamRef> params) : cfg_(cfg), params_(std::move(params)) {
    if (cfg_.kind == OptimizerKind::adam) {
      for (const auto& p : params_) {
        m_.emplace_back(p.tensor->size(), 0.0);
        v_.emplace_back(p.tensor->size(), 0.0);
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor->zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto data = params_[i].tensor->data();
      const auto grad = params_[i].tensor->grad();
      for (std::size_t j = 0; j < data.size(); ++j) {
        const double gj = grad[j] + cfg_.weight_decay * data[j];
        if (cfg_.kind == OptimizerKind::sgd) {
          data[j] -= cfg_.lr * gj;
        } else {
          m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * gj;
          v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * gj * gj;
          data[j] -= cfg_.lr * (m_[i][j] / bc1) / (std::sqrt(v_[i][j] / bc2) + cfg_.eps);
        }
        if (!std::isfinite(data[j])) {
          throw DivergenceError("optimizer produced a non-finite value in " + params_[i].name);
        }
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  std::vector<ParamRef> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

namespace detail {

inline std::vector<std::vector<double>> snapshot(const std::vector<ParamRef>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.tensor->data().begin(), p.tensor->data().end());
  return out;
}

inline void restore(const std::vector<ParamRef>& params, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) std::copy(values[i].begin(), values[i].end(), params[i].tensor->data().begin());
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Copy of g with N(0, (A/snr)^2) noise added to every link-feature entry,
/// where A is the standard deviation over all link-feature entries.
/// snr = +inf returns g unchanged.
inline AttributedGraph contaminate_links(const AttributedGraph& g, double snr, std::uint64_t seed) {
  if (!(snr > 0.0)) throw std::invalid_argument("contaminate_links: snr must be positive");
  if (std::isinf(snr)) return g;
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (const auto& l : g.links()) {
    for (double x : l.features) {
      sum += x;
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("contaminate_links: graph has no link features");
  const double mean = sum / static_cast<double>(count);
  for (const auto& l : g.links()) {
    for (double x : l.features) sq += (x - mean) * (x - mean);
  }
  const double amplitude = std::sqrt(sq / static_cast<double>(count));
  if (!(amplitude > 0.0)) throw std::invalid_argument("contaminate_links: link features have zero variance");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, amplitude / snr);
  std::vector<std::vector<double>> features;
  features.reserve(g.num_links());
  for (const auto& l : g.links()) {
    auto f = l.features;
    for (auto& x : f) x += noise(rng);
    features.push_back(std::move(f));
  }
  return g.with_link_features(features);
}

struct TrainResult {
  Model model;
  MetricHistory history;
};

/// Per-epoch callback, e.g. for progress output.
using EpochHook = std::function<void(const EpochRecord&)>;

/// Mini-batch training with early stopping on validation micro-F1. The
/// returned model holds the best-validation parameters and the test score is
/// taken from it once.
inline TrainResult train(const AttributedGraph& clean, const Split& split, const TrainRun& run,
                         const EpochHook& hook = {}) {
  run.validate();
  if (split.train.empty()) throw std::invalid_argument("train: empty training split");
  if (split.val.empty()) throw std::invalid_argument("train: empty validation split");
  if (clean.n_labels() < 1) throw std::invalid_argument("train: graph has no labels");

  const bool noisy = run.snr && !std::isinf(*run.snr);
  const AttributedGraph contaminated = noisy ? contaminate_links(clean, *run.snr, derive_seed(run.seed, 5)) : AttributedGraph{};
  const AttributedGraph& g = noisy ? contaminated : clean;

  TrainResult out{Model(run.stack, g.d_node(), g.d_link(), g.n_labels(), run.seed), {}};
  Model& model = out.model;
  MetricHistory& hist = out.history;
  const auto params = model.parameters();
  Optimizer opt(run.optimizer, params);

  std::mt19937_64 shuffle_rng(derive_seed(run.seed, 2));
  std::mt19937_64 sample_rng(derive_seed(run.seed, 3));
  SamplerState sampler(model.stack().depth(), g.num_nodes());
  SampledNeighborhood selector(run.plan, &sampler, sample_rng);

  std::vector<NodeId> order(split.train.begin(), split.train.end());
  auto best = detail::snapshot(params);
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= run.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += run.batch_size) {
      const std::span<const NodeId> batch(order.data() + start, std::min(run.batch_size, order.size() - start));
      if (run.plan.strategy == SamplingStrategy::gate || run.plan.strategy == SamplingStrategy::min_var) {
        const auto r0 = std::chrono::steady_clock::now();
        if (sampler.refresh(g, model.stack(), run.plan, split.train)) hist.refresh_seconds += detail::seconds_since(r0);
      }
      double loss = 0.0;
      try {
        Tape tape;
        const Var l = batch_loss(tape, g, model, batch, selector);
        loss = tape.scalar(l);
        opt.zero_grad();
        tape.backward(l);
      } catch (const NumericError& e) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(n_batches + 1) + ": " + e.what());
      }
      opt.step();
      sampler.tick();
      loss_sum += loss;
      ++n_batches;
    }
    hist.batches += n_batches;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(n_batches);
    rec.val_f1 = evaluate(g, model, split.val);
    rec.seconds = detail::seconds_since(t0);
    hist.epochs.push_back(rec);
    if (hook) hook(rec);

    if (rec.val_f1 > hist.best_val_f1) {
      hist.best_val_f1 = rec.val_f1;
      hist.best_epoch = epoch;
      best = detail::snapshot(params);
      since_best = 0;
    } else if (++since_best >= run.patience) {
      break;
    }
  }
  detail::restore(params, best);
  hist.refreshes = sampler.refresh_count();
  if (!split.test.empty()) hist.test_f1 = evaluate(g, model, split.test);
  return out;
}

struct SnrRow {
  double snr;
  double test_f1;
  double best_val_f1;
};

/// One independent training per snr value under otherwise identical settings.
inline std::vector<SnrRow> snr_sweep(const AttributedGraph& g, const Split& split, TrainRun run,
                                     std::span<const double> snrs) {
  if (snrs.empty()) throw std::invalid_argument("snr_sweep: no snr values");
  std::vector<SnrRow> rows;
  for (double s : snrs) {
    run.snr = s;
    const auto r = train(g, split, run);
    rows.push_back({s, r.history.test_f1, r.history.best_val_f1});
  }
  return rows;
}

struct StrategyCurve {
  SamplingStrategy strategy;
  std::size_t refresh_interval;
  MetricHistory history;
};

/// One training per sampling strategy with a shared seed.
inline std::vector<StrategyCurve> strategy_comparison(const AttributedGraph& g, const Split& split, TrainRun run,
                                                      std::span<const SamplingStrategy> strategies) {
  if (strategies.empty()) throw std::invalid_argument("strategy_comparison: no strategies");
  std::vector<StrategyCurve> out;
  for (auto s : strategies) {
    run.plan.strategy = s;
    out.push_back({s, run.plan.refresh_interval, train(g, split, run).history});
  }
  return out;
}

/// One training per refresh interval k with the run's sampling strategy.
inline std::vector<StrategyCurve> refresh_sweep(const AttributedGraph& g, const Split& split, TrainRun run,
                                                std::span<const std::size_t> intervals) {
  if (intervals.empty()) throw std::invalid_argument("refresh_sweep: no intervals");
  std::vector<StrategyCurve> out;
  for (auto k : intervals) {
    run.plan.refresh_interval = k;
    out.push_back({run.plan.strategy, k, train(g, split, run).history});
  }
  return out;
}

}  // namespace lase
