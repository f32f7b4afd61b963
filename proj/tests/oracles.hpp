/* Copyright 2026 The kanprompt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Independent reference implementations used by the tests. None of these
// call into the code under test beyond reading parameters.

#ifndef KANPROMPT_TESTS_ORACLES_HPP_
#define KANPROMPT_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kanprompt/kan_core.hpp"

namespace oracle {

// Textbook Cox-de Boor recursion. The last interval is closed at `hi`.
inline double cox_de_boor(const std::vector<double>& t, int j, int p, double x, double hi) {
  if (p == 0) {
    if (x == hi) return t[j + 1] == hi ? 1.0 : 0.0;  // closed right end
    return (t[j] <= x && x < t[j + 1]) ? 1.0 : 0.0;
  }
  double left = 0.0, right = 0.0;
  const double dl = t[j + p] - t[j];
  const double dr = t[j + p + 1] - t[j + 1];
  if (dl > 0) left = (x - t[j]) / dl * cox_de_boor(t, j, p - 1, x, hi);
  if (dr > 0) right = (t[j + p + 1] - x) / dr * cox_de_boor(t, j + 1, p - 1, x, hi);
  return left + right;
}

inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;

  void add(double analytic, double numeric, const std::string& what) {
    const double e = relative_error(analytic, numeric);
    ++checked;
    if (e > max_rel_error) {
      max_rel_error = e;
      std::ostringstream s;
      s << what << " analytic=" << analytic << " numeric=" << numeric;
      worst = s.str();
    }
  }
};

// Central differences of `f` with respect to every entry of `values`,
// compared with `analytic`.
template <typename T>
void check_entries(std::vector<T>& values, const std::vector<T>& analytic,
                   const std::function<double()>& f, double h, const std::string& label,
                   GradCheck& out) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T saved = values[i];
    values[i] = saved + static_cast<T>(h);
    const double up = f();
    values[i] = saved - static_cast<T>(h);
    const double down = f();
    values[i] = saved;
    out.add(static_cast<double>(analytic[i]), (up - down) / (2 * h), label + "[" + std::to_string(i) + "]");
  }
}

inline GradCheck check_network_gradients(kanprompt::kan::KanNetwork<double>& net,
                                         std::vector<double>& z,
                                         const kanprompt::kan::KanGradients<double>& g,
                                         const std::function<double()>& f, double h) {
  GradCheck out;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    check_entries(net.layer(l).base_weights(), g.base_weights[l], f, h,
                  "layer" + std::to_string(l) + ".base", out);
    check_entries(net.layer(l).coefficients(), g.coefficients[l], f, h,
                  "layer" + std::to_string(l) + ".coef", out);
  }
  check_entries(z, g.input, f, h, "input", out);
  return out;
}

// DSC and IoU from explicit pixel-index sets.
struct SetMetrics {
  double dsc;
  double iou;
};

inline SetMetrics set_metrics(const std::vector<std::uint8_t>& pred,
                              const std::vector<std::uint8_t>& gt, std::uint8_t cls) {
  std::set<std::size_t> a, b, inter, uni;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == cls) a.insert(i);
    if (gt[i] == cls) b.insert(i);
  }
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(inter, inter.begin()));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::inserter(uni, uni.begin()));
  if (uni.empty()) return {1.0, 1.0};
  return {2.0 * static_cast<double>(inter.size()) / static_cast<double>(a.size() + b.size()),
          static_cast<double>(inter.size()) / static_cast<double>(uni.size())};
}

// Plain triple-loop product of row-major matrices.
inline std::vector<double> matmul(const std::vector<float>& a, const std::vector<float>& b,
                                  std::size_t n, std::size_t k, std::size_t m) {
  std::vector<double> c(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += static_cast<double>(a[i * k + p]) * b[p * m + j];
      c[i * m + j] = s;
    }
  }
  return c;
}

}  // namespace oracle

#endif  // KANPROMPT_TESTS_ORACLES_HPP_
