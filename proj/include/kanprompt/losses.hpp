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

// Segmentation losses with analytic gradients with respect to mask logits.
//
// The hybrid objective summed over classes i = 1..k is
//
//   (1 - alpha) * dice_i + alpha * focal_i + beta * (iou_pred_i - iou_i)^2
//
// where plane i of the target is the one-hot indicator of class i and iou_i
// is measured on the prediction thresholded at probability 0.5.

#ifndef KANPROMPT_LOSSES_HPP_
#define KANPROMPT_LOSSES_HPP_

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kanprompt/errors.hpp"
#include "kanprompt/metrics.hpp"

namespace kanprompt::loss {

struct LossWeights {
  double alpha = 0.125;
  double beta = 0.01;
  double focal_gamma = 2.0;
};

inline constexpr double kDiceEpsilon = 1e-6;

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw StructuralError(std::string(op) + ": prediction has " + std::to_string(a) +
                          " pixels, target has " + std::to_string(b));
  }
}

// log(sigmoid(x)) without overflow.
template <std::floating_point T>
T log_sigmoid(T x) {
  return x >= T(0) ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <std::floating_point T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

}  // namespace detail

// 1 - (2 sum p t + eps) / (sum p + sum t + eps)
template <std::floating_point T>
T dice_loss(std::span<const T> probs, std::span<const std::uint8_t> target) {
  detail::require_same_size(probs.size(), target.size(), "dice_loss");
  T inter = T(0), total = T(0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const T t = target[i] ? T(1) : T(0);
    inter += probs[i] * t;
    total += probs[i] + t;
  }
  const T eps = static_cast<T>(kDiceEpsilon);
  return T(1) - (T(2) * inter + eps) / (total + eps);
}

// d dice / d probs.
template <std::floating_point T>
std::vector<T> dice_loss_grad(std::span<const T> probs, std::span<const std::uint8_t> target) {
  detail::require_same_size(probs.size(), target.size(), "dice_loss");
  T inter = T(0), total = T(0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const T t = target[i] ? T(1) : T(0);
    inter += probs[i] * t;
    total += probs[i] + t;
  }
  const T eps = static_cast<T>(kDiceEpsilon);
  const T num = T(2) * inter + eps;
  const T den = total + eps;
  std::vector<T> g(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const T t = target[i] ? T(1) : T(0);
    g[i] = -(T(2) * t * den - num) / (den * den);
  }
  return g;
}

// Mean over pixels of -(1 - p_t)^gamma * log(p_t), p_t the sigmoid
// probability assigned to the true label.
template <std::floating_point T>
T focal_loss(std::span<const T> logits, std::span<const std::uint8_t> target, T gamma) {
  detail::require_same_size(logits.size(), target.size(), "focal_loss");
  if (logits.empty()) return T(0);
  T sum = T(0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const T s = target[i] ? logits[i] : -logits[i];
    const T q = detail::sigmoid(-s);  // 1 - p_t
    sum += -std::pow(q, gamma) * detail::log_sigmoid(s);
  }
  return sum / static_cast<T>(logits.size());
}

template <std::floating_point T>
std::vector<T> focal_loss_grad(std::span<const T> logits, std::span<const std::uint8_t> target,
                               T gamma) {
  detail::require_same_size(logits.size(), target.size(), "focal_loss");
  std::vector<T> g(logits.size());
  const T inv_n = T(1) / static_cast<T>(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const T sign = target[i] ? T(1) : T(-1);
    const T s = sign * logits[i];
    const T p = detail::sigmoid(s);
    const T q = detail::sigmoid(-s);
    const T qg = std::pow(q, gamma);
    const T ds = gamma * qg * p * detail::log_sigmoid(s) - qg * q;
    g[i] = sign * ds * inv_n;
  }
  return g;
}

template <std::floating_point T>
T iou_mse_loss(T predicted, T actual) {
  const T d = predicted - actual;
  return d * d;
}

template <std::floating_point T>
struct HybridLoss {
  T total = T(0);
  // Per class: {dice, focal, iou mse}, unweighted.
  std::vector<std::array<T, 3>> terms;
  std::vector<T> actual_ious;
  std::vector<T> grad_logits;  // k planes of pixels, same layout as the input
  std::vector<T> grad_ious;    // with respect to the predicted ious
};

// `logits` holds k planes of `labels.size()` pixels each, `ious` holds k
// predicted ious. Labels are class indices in [0, k).
template <std::floating_point T>
HybridLoss<T> hybrid_loss(std::span<const T> logits, std::span<const T> ious,
                          std::span<const std::uint8_t> labels, std::size_t k,
                          const LossWeights& w) {
  const std::size_t n = labels.size();
  if (k == 0) throw StructuralError("hybrid_loss: need at least one class");
  if (logits.size() != k * n) {
    throw StructuralError("hybrid_loss: " + std::to_string(logits.size()) +
                          " logits for k=" + std::to_string(k) + " planes of " +
                          std::to_string(n) + " pixels");
  }
  if (ious.size() != k) {
    throw StructuralError("hybrid_loss: " + std::to_string(ious.size()) +
                          " iou predictions for k=" + std::to_string(k));
  }
  const T alpha = static_cast<T>(w.alpha);
  const T beta = static_cast<T>(w.beta);
  const T gamma = static_cast<T>(w.focal_gamma);

  HybridLoss<T> out;
  out.terms.resize(k);
  out.actual_ious.resize(k);
  out.grad_logits.assign(k * n, T(0));
  out.grad_ious.resize(k);
  std::vector<std::uint8_t> target(n);
  std::vector<std::uint8_t> predicted(n);
  std::vector<T> probs(n);
  for (std::size_t c = 0; c < k; ++c) {
    const auto plane = logits.subspan(c * n, n);
    for (std::size_t i = 0; i < n; ++i) {
      target[i] = labels[i] == c ? 1 : 0;
      probs[i] = detail::sigmoid(plane[i]);
      predicted[i] = probs[i] > T(0.5) ? 1 : 0;
    }
    const T dice = dice_loss<T>(probs, target);
    const T focal = focal_loss<T>(plane, target, gamma);
    const T actual = static_cast<T>(metrics::iou_metric(predicted, target));
    const T mse = iou_mse_loss(ious[c], actual);
    out.terms[c] = {dice, focal, mse};
    out.actual_ious[c] = actual;
    out.total += (T(1) - alpha) * dice + alpha * focal + beta * mse;

    const auto gd = dice_loss_grad<T>(probs, target);
    const auto gf = focal_loss_grad<T>(plane, target, gamma);
    for (std::size_t i = 0; i < n; ++i) {
      const T dprob = probs[i] * (T(1) - probs[i]);
      out.grad_logits[c * n + i] = (T(1) - alpha) * gd[i] * dprob + alpha * gf[i];
    }
    out.grad_ious[c] = beta * T(2) * (ious[c] - actual);
  }
  return out;
}

}  // namespace kanprompt::loss

#endif  // KANPROMPT_LOSSES_HPP_
