#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lase/checkpoint.hpp"

namespace lase::testing {

struct GradReport {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double max_rel = 0.0;  ///< over entries not covered by the absolute floor
  double max_abs = 0.0;
  std::string worst;
};

/// Central differences with step h against the analytic gradient on every
/// entry of every parameter. `loss(with_grad)` evaluates the scalar loss and,
/// when asked, runs backward into the parameter gradients.
inline GradReport grad_check(const std::vector<ParamRef>& params, const std::function<double(bool)>& loss,
                             double h = 1e-6, double rel_tol = 1e-4, double abs_floor = 1e-8) {
  for (const auto& p : params) p.tensor->zero_grad();
  loss(true);
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) analytic.emplace_back(p.tensor->grad().begin(), p.tensor->grad().end());
  GradReport r;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto data = params[i].tensor->data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double keep = data[j];
      data[j] = keep + h;
      const double up = loss(false);
      data[j] = keep - h;
      const double down = loss(false);
      data[j] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i][j];
      const double gap = std::abs(a - numeric);
      ++r.checked;
      r.max_abs = std::max(r.max_abs, gap);
      if (gap <= abs_floor) continue;
      const double rel = gap / std::max(std::abs(a), std::abs(numeric));
      if (rel > r.max_rel) {
        r.max_rel = rel;
        r.worst = params[i].name + "[" + std::to_string(j) + "] analytic " + std::to_string(a) + " numeric " +
                  std::to_string(numeric);
      }
      if (rel >= rel_tol) ++r.failed;
    }
  }
  return r;
}

}  // namespace lase::testing
