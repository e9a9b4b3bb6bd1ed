#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lase/tensor.hpp"

namespace lase {

/// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = npos;
  bool valid() const noexcept { return id != npos; }
};

/// Raised on misuse of the tape itself (non-scalar loss, second backward).
class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Reverse-mode differentiation tape over dense column vectors and matrices.
///
/// Ops are recorded in execution order; `backward` walks them in exact
/// reverse order. Parameters enter through `param()`, which records a leaf
/// that reads the tensor in place and adds into its gradient buffer during
/// backward, so a parameter bound once and used many times sums its
/// contributions. A tape belongs to one thread and supports one backward pass.
class Tape {
 public:
  enum class OpKind : std::uint8_t {
    constant,
    param,
    matvec,
    hadamard,
    add,
    sub,
    scale,
    scale_by,
    concat,
    add_n,
    reduce_sum,
    inner,
    sigmoid,
    relu,
    softmax_xent,
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(const Tensor2& t) {
    auto& n = push(OpKind::constant, t.rows(), t.cols());
    n.value.assign(t.data().begin(), t.data().end());
    return finish();
  }
  Var constant(std::span<const double> column) {
    auto& n = push(OpKind::constant, column.size(), 1);
    n.value.assign(column.begin(), column.end());
    return finish();
  }
  Var zeros(std::size_t rows, std::size_t cols = 1) {
    auto& n = push(OpKind::constant, rows, cols);
    n.value.assign(rows * cols, 0.0);
    return finish(false);
  }

  /// Leaf bound to `p`. The tensor must outlive the tape and stay unchanged
  /// until backward has run.
  Var param(Tensor2& p) {
    if (p.empty()) throw ShapeError("param: empty tensor");
    auto& n = push(OpKind::param, p.rows(), p.cols());
    n.param = &p;
    n.needs_grad = p.requires_grad();
    return finish(false);
  }

  /// y = W x for W (m x n) and x (n x 1).
  Var matvec(Var w, Var x) {
    check_column(x, "matvec");
    if (cols(w) != rows(x)) {
      throw ShapeError("matvec: " + shape_str(w) + " times " + shape_str(x));
    }
    const std::size_t m = rows(w), k = cols(w);
    auto& n = push(OpKind::matvec, m, 1, w, x);
    n.value.assign(m, 0.0);
    const double* wd = raw(w);
    const double* xd = raw(x);
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      const double* wr = wd + i * k;
      for (std::size_t j = 0; j < k; ++j) s += wr[j] * xd[j];
      n.value[i] = s;
    }
    return finish();
  }

  Var hadamard(Var a, Var b) { return binary(OpKind::hadamard, a, b, "hadamard"); }
  Var add(Var a, Var b) { return binary(OpKind::add, a, b, "add"); }
  Var sub(Var a, Var b) { return binary(OpKind::sub, a, b, "sub"); }

  /// c * a for a constant scalar c.
  Var scale(Var a, double c) {
    auto& n = push(OpKind::scale, rows(a), cols(a), a);
    n.coef = c;
    n.value.resize(size(a));
    const double* ad = raw(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = c * ad[i];
    return finish();
  }

  /// s * a where s is a recorded 1x1 value (the only broadcast allowed).
  Var scale_by(Var s, Var a) {
    if (size(s) != 1) throw ShapeError("scale_by: scalar operand is " + shape_str(s));
    auto& n = push(OpKind::scale_by, rows(a), cols(a), s, a);
    const double c = raw(s)[0];
    n.value.resize(size(a));
    const double* ad = raw(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = c * ad[i];
    return finish();
  }

  Var concat(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat: empty part list");
    std::size_t total = 0;
    for (Var p : parts) {
      check_column(p, "concat");
      total += rows(p);
    }
    auto& n = push(OpKind::concat, total, 1);
    for (Var p : parts) n.inputs.push_back(p.id);
    n.value.reserve(total);
    for (Var p : parts) {
      const double* pd = raw(p);
      n.value.insert(n.value.end(), pd, pd + size(p));
    }
    return finish();
  }
  Var concat(std::initializer_list<Var> parts) {
    return concat(std::span<const Var>(parts.begin(), parts.size()));
  }

  /// Elementwise sum of equally shaped values, accumulated in list order.
  Var add_n(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("add_n: empty part list");
    const Var first = parts.front();
    for (Var p : parts) {
      if (rows(p) != rows(first) || cols(p) != cols(first)) {
        throw ShapeError("add_n: " + shape_str(first) + " vs " + shape_str(p));
      }
    }
    auto& n = push(OpKind::add_n, rows(first), cols(first));
    for (Var p : parts) n.inputs.push_back(p.id);
    n.value.assign(size(first), 0.0);
    for (Var p : parts) {
      const double* pd = raw(p);
      for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += pd[i];
    }
    return finish();
  }

  Var reduce_sum(Var a) {
    auto& n = push(OpKind::reduce_sum, 1, 1, a);
    double s = 0.0;
    const double* ad = raw(a);
    for (std::size_t i = 0; i < size(a); ++i) s += ad[i];
    n.value.assign(1, s);
    return finish();
  }

  Var inner(Var a, Var b) {
    check_same(a, b, "inner");
    auto& n = push(OpKind::inner, 1, 1, a, b);
    double s = 0.0;
    const double* ad = raw(a);
    const double* bd = raw(b);
    for (std::size_t i = 0; i < size(a); ++i) s += ad[i] * bd[i];
    n.value.assign(1, s);
    return finish();
  }

  Var sigmoid(Var a) {
    auto& n = push(OpKind::sigmoid, rows(a), cols(a), a);
    n.value.resize(size(a));
    const double* ad = raw(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = logistic(ad[i]);
    return finish();
  }

  Var relu(Var a) {
    auto& n = push(OpKind::relu, rows(a), cols(a), a);
    n.value.resize(size(a));
    const double* ad = raw(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = ad[i] > 0.0 ? ad[i] : 0.0;
    return finish();
  }

  /// -log softmax(logits)[label], stabilised by subtracting the max logit.
  Var softmax_cross_entropy(Var logits, std::size_t label) {
    check_column(logits, "softmax_cross_entropy");
    const std::size_t k = rows(logits);
    if (label >= k) {
      throw ShapeError("softmax_cross_entropy: label " + std::to_string(label) +
                       " out of range for " + std::to_string(k) + " classes");
    }
    const double* z = raw(logits);
    for (std::size_t i = 0; i < k; ++i) {
      if (!std::isfinite(z[i])) throw NumericError("softmax_cross_entropy: non-finite logit");
    }
    auto& n = push(OpKind::softmax_xent, 1, 1, logits);
    n.label = label;
    double zmax = z[0];
    for (std::size_t i = 1; i < k; ++i) zmax = std::max(zmax, z[i]);
    double denom = 0.0;
    n.saved.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      n.saved[i] = std::exp(z[i] - zmax);
      denom += n.saved[i];
    }
    for (auto& p : n.saved) p /= denom;
    n.value.assign(1, std::log(denom) - (z[label] - zmax));
    return finish();
  }

  /// Propagates d(loss)/d(.) to every parameter bound on this tape.
  void backward(Var loss) {
    if (backward_done_) throw TapeError("backward: tape already consumed");
    if (!loss.valid() || loss.id >= nodes_.size()) throw TapeError("backward: loss not on this tape");
    if (size(loss) != 1) throw TapeError("backward: loss must be scalar, got " + shape_str(loss));
    backward_done_ = true;
    grads_.assign(nodes_.size(), {});
    grads_[loss.id].assign(1, 1.0);
    for (std::size_t idx = loss.id + 1; idx-- > 0;) {
      auto& n = nodes_[idx];
      if (!n.needs_grad || grads_[idx].empty()) continue;
      propagate(idx);
    }
  }

  std::span<const double> value(Var v) const {
    const auto& n = nodes_.at(v.id);
    if (n.kind == OpKind::param) return n.param->data();
    return n.value;
  }
  double scalar(Var v) const {
    if (size(v) != 1) throw ShapeError("scalar: value is " + shape_str(v));
    return value(v)[0];
  }
  Tensor2 tensor(Var v) const {
    auto vals = value(v);
    return {rows(v), cols(v), std::vector<double>(vals.begin(), vals.end())};
  }
  /// Gradient of the last backward pass w.r.t. `v` (empty if none flowed).
  std::span<const double> grad(Var v) const {
    if (v.id >= grads_.size()) return {};
    return grads_[v.id];
  }

  std::size_t rows(Var v) const { return nodes_.at(v.id).rows; }
  std::size_t cols(Var v) const { return nodes_.at(v.id).cols; }
  std::size_t size(Var v) const { return rows(v) * cols(v); }
  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }

  static double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  }

 private:
  struct Node {
    OpKind kind;
    std::uint32_t rows;
    std::uint32_t cols;
    std::uint32_t a = Var::npos;
    std::uint32_t b = Var::npos;
    std::vector<std::uint32_t> inputs;
    std::vector<double> value;
    std::vector<double> saved;
    double coef = 0.0;
    std::size_t label = 0;
    Tensor2* param = nullptr;
    bool needs_grad = false;
  };

  Node& push(OpKind kind, std::size_t r, std::size_t c, Var a = {}, Var b = {}) {
    if (backward_done_) throw TapeError("tape already consumed by backward");
    auto& n = nodes_.emplace_back();
    n.kind = kind;
    n.rows = static_cast<std::uint32_t>(r);
    n.cols = static_cast<std::uint32_t>(c);
    n.a = a.id;
    n.b = b.id;
    n.needs_grad = (a.valid() && nodes_[a.id].needs_grad) || (b.valid() && nodes_[b.id].needs_grad);
    return n;
  }

  Var finish(bool check = true) {
    auto& n = nodes_.back();
    if (!n.inputs.empty()) {
      for (auto in : n.inputs) n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
    }
    if (check) {
      for (double v : n.value) {
        if (!std::isfinite(v)) {
          throw NumericError("non-finite value produced by op #" + std::to_string(nodes_.size() - 1));
        }
      }
    }
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  Var binary(OpKind kind, Var a, Var b, const char* what) {
    check_same(a, b, what);
    auto& n = push(kind, rows(a), cols(a), a, b);
    n.value.resize(size(a));
    const double* ad = raw(a);
    const double* bd = raw(b);
    for (std::size_t i = 0; i < n.value.size(); ++i) {
      switch (kind) {
        case OpKind::hadamard: n.value[i] = ad[i] * bd[i]; break;
        case OpKind::add: n.value[i] = ad[i] + bd[i]; break;
        default: n.value[i] = ad[i] - bd[i]; break;
      }
    }
    return finish();
  }

  const double* raw(Var v) const { return value(v).data(); }
  const double* raw(std::uint32_t id) const { return value(Var{id}).data(); }

  void check_same(Var a, Var b, const char* what) const {
    if (rows(a) != rows(b) || cols(a) != cols(b)) {
      throw ShapeError(std::string(what) + ": " + shape_str(a) + " vs " + shape_str(b));
    }
  }
  void check_column(Var a, const char* what) const {
    if (cols(a) != 1) throw ShapeError(std::string(what) + ": expected column, got " + shape_str(a));
  }
  std::string shape_str(Var v) const {
    return std::to_string(rows(v)) + "x" + std::to_string(cols(v));
  }

  std::vector<double>& grad_buf(std::uint32_t id) {
    auto& g = grads_[id];
    if (g.empty()) g.assign(static_cast<std::size_t>(nodes_[id].rows) * nodes_[id].cols, 0.0);
    return g;
  }

  void propagate(std::size_t idx) {
    const Node& n = nodes_[idx];
    const std::vector<double>& g = grads_[idx];
    auto wants = [&](std::uint32_t id) { return id != Var::npos && nodes_[id].needs_grad; };
    switch (n.kind) {
      case OpKind::constant:
        break;
      case OpKind::param: {
        auto pg = n.param->grad();
        for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
        break;
      }
      case OpKind::matvec: {
        const std::size_t m = n.rows, k = nodes_[n.a].cols;
        const double* w = raw(n.a);
        const double* x = raw(n.b);
        if (wants(n.a)) {
          auto& gw = grad_buf(n.a);
          for (std::size_t i = 0; i < m; ++i) {
            if (g[i] == 0.0) continue;
            for (std::size_t j = 0; j < k; ++j) gw[i * k + j] += g[i] * x[j];
          }
        }
        if (wants(n.b)) {
          auto& gx = grad_buf(n.b);
          for (std::size_t i = 0; i < m; ++i) {
            if (g[i] == 0.0) continue;
            for (std::size_t j = 0; j < k; ++j) gx[j] += w[i * k + j] * g[i];
          }
        }
        break;
      }
      case OpKind::hadamard: {
        const double* a = raw(n.a);
        const double* b = raw(n.b);
        if (wants(n.a)) {
          auto& ga = grad_buf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
        }
        if (wants(n.b)) {
          auto& gb = grad_buf(n.b);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
        }
        break;
      }
      case OpKind::add:
      case OpKind::sub: {
        const double sign = n.kind == OpKind::add ? 1.0 : -1.0;
        if (wants(n.a)) {
          auto& ga = grad_buf(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (wants(n.b)) {
          auto& gb = grad_buf(n.b);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
        }
        break;
      }
      case OpKind::scale: {
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.coef * g[i];
        break;
      }
      case OpKind::scale_by: {
        const double s = raw(n.a)[0];
        const double* x = raw(n.b);
        if (wants(n.a)) {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * x[i];
          grad_buf(n.a)[0] += acc;
        }
        if (wants(n.b)) {
          auto& gx = grad_buf(n.b);
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
        }
        break;
      }
      case OpKind::concat: {
        std::size_t offset = 0;
        for (auto in : n.inputs) {
          const std::size_t len = nodes_[in].rows;
          if (wants(in)) {
            auto& gi = grad_buf(in);
            for (std::size_t i = 0; i < len; ++i) gi[i] += g[offset + i];
          }
          offset += len;
        }
        break;
      }
      case OpKind::add_n: {
        for (auto in : n.inputs) {
          if (!wants(in)) continue;
          auto& gi = grad_buf(in);
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
        break;
      }
      case OpKind::reduce_sum: {
        auto& ga = grad_buf(n.a);
        for (auto& v : ga) v += g[0];
        break;
      }
      case OpKind::inner: {
        const double* a = raw(n.a);
        const double* b = raw(n.b);
        if (wants(n.a)) {
          auto& ga = grad_buf(n.a);
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0] * b[i];
        }
        if (wants(n.b)) {
          auto& gb = grad_buf(n.b);
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[0] * a[i];
        }
        break;
      }
      case OpKind::sigmoid: {
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
        }
        break;
      }
      case OpKind::relu: {
        auto& ga = grad_buf(n.a);
        const double* x = raw(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (x[i] > 0.0) ga[i] += g[i];
        }
        break;
      }
      case OpKind::softmax_xent: {
        auto& gz = grad_buf(n.a);
        for (std::size_t i = 0; i < gz.size(); ++i) {
          gz[i] += g[0] * (n.saved[i] - (i == n.label ? 1.0 : 0.0));
        }
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  bool backward_done_ = false;
};

}  // namespace lase
