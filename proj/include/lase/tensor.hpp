#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lase {

/// Raised when operand shapes disagree. No implicit broadcasting exists
/// beyond scalar * tensor, so every other mismatch ends up here.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a NaN or Inf shows up in a computed value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles with an optional gradient accumulator.
///
/// Column vectors are plain `n x 1` tensors. The gradient buffer exists iff
/// `requires_grad()` is set; it accumulates (+=) across a tape and is cleared
/// explicitly with `zero_grad()`.
class Tensor2 {
 public:
  Tensor2() = default;

  Tensor2(std::size_t rows, std::size_t cols, bool requires_grad = false)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    set_requires_grad(requires_grad);
  }

  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data,
          bool requires_grad = false)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("Tensor2: data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
    }
    set_requires_grad(requires_grad);
  }

  static Tensor2 column(std::span<const double> values) {
    return {values.size(), 1, std::vector<double>(values.begin(), values.end())};
  }
  static Tensor2 column(std::initializer_list<double> values) {
    return {values.size(), 1, std::vector<double>(values)};
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_column() const noexcept { return cols_ == 1; }
  bool same_shape(const Tensor2& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Row `r` as a contiguous view.
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  bool requires_grad() const noexcept { return requires_grad_; }
  void set_requires_grad(bool on) {
    requires_grad_ = on;
    if (on) {
      grad_.assign(data_.size(), 0.0);
    } else {
      grad_.clear();
    }
  }
  std::span<double> grad() noexcept { return grad_; }
  std::span<const double> grad() const noexcept { return grad_; }
  void zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Tensor2& a, const Tensor2& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  bool requires_grad_ = false;
  std::vector<double> grad_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: length " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace lase
