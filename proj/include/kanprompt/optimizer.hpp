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

#ifndef KANPROMPT_OPTIMIZER_HPP_
#define KANPROMPT_OPTIMIZER_HPP_

#include <cstddef>
#include <vector>

#include "kanprompt/autograd.hpp"

namespace kanprompt {

struct AdamWConfig {
  double learning_rate = 1e-5;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with decoupled weight decay. Frozen parameters are left untouched.
class AdamW {
 public:
  AdamW(ParameterSet& params, const AdamWConfig& cfg);

  void step();
  std::size_t steps() const { return steps_; }

 private:
  AdamWConfig cfg_;
  std::vector<Parameter*> params_;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
  std::size_t steps_ = 0;
};

}  // namespace kanprompt

#endif  // KANPROMPT_OPTIMIZER_HPP_
