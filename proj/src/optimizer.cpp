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

#include "kanprompt/optimizer.hpp"

#include <cmath>

namespace kanprompt {

AdamW::AdamW(ParameterSet& params, const AdamWConfig& cfg) : cfg_(cfg), params_(params.all()) {
  for (const Parameter* p : params_) {
    m_.emplace_back(p->size(), 0.0f);
    v_.emplace_back(p->size(), 0.0f);
  }
}

void AdamW::step() {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const float lr = static_cast<float>(cfg_.learning_rate);
  const float decay = static_cast<float>(cfg_.learning_rate * cfg_.weight_decay);
  const float b1 = static_cast<float>(cfg_.beta1);
  const float b2 = static_cast<float>(cfg_.beta2);
  const float c1 = static_cast<float>(1.0 / (1.0 - std::pow(cfg_.beta1, t)));
  const float c2 = static_cast<float>(1.0 / (1.0 - std::pow(cfg_.beta2, t)));
  const float eps = static_cast<float>(cfg_.epsilon);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (p.frozen) continue;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const float g = p.grad[i];
      m[i] = b1 * m[i] + (1.0f - b1) * g;
      v[i] = b2 * v[i] + (1.0f - b2) * g * g;
      const float update = (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
      p.value[i] -= decay * p.value[i] + lr * update;
    }
  }
}

}  // namespace kanprompt
