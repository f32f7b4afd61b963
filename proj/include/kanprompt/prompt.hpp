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

// Learnable class prompts: k trainable class embeddings, each refined by its
// own small network into a prompt token for the mask decoder.

#ifndef KANPROMPT_PROMPT_HPP_
#define KANPROMPT_PROMPT_HPP_

#include <concepts>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kanprompt/autograd.hpp"
#include "kanprompt/kan_core.hpp"
#include "kanprompt/layers.hpp"

namespace kanprompt {

template <std::floating_point T>
struct ClassEmbeddingTable {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<T> values;  // num_classes x dim

  std::span<const T> embedding(std::size_t i) const {
    return std::span<const T>(values).subspan(i * dim, dim);
  }
};

template <std::floating_point T>
struct PromptTokenSet {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<T> values;  // token i in row i

  std::span<const T> token(std::size_t i) const {
    return std::span<const T>(values).subspan(i * dim, dim);
  }
};

// token_i = kan_i(embedding_i) + embedding_i.
template <std::floating_point T>
PromptTokenSet<T> generate_prompt_tokens(const ClassEmbeddingTable<T>& table,
                                         std::span<const kan::KanNetwork<T>> networks) {
  if (table.num_classes == 0) throw StructuralError("prompt table needs k >= 1");
  if (networks.size() != table.num_classes) {
    throw StructuralError("generate_prompt_tokens: " + std::to_string(table.num_classes) +
                          " classes but " + std::to_string(networks.size()) + " networks");
  }
  PromptTokenSet<T> out{table.num_classes, table.dim, {}};
  out.values.reserve(table.values.size());
  for (std::size_t i = 0; i < table.num_classes; ++i) {
    const auto& net = networks[i];
    if (net.n_in() != table.dim || net.n_out() != table.dim) {
      throw StructuralError("prompt network " + std::to_string(i) + " maps " +
                            std::to_string(net.n_in()) + " -> " + std::to_string(net.n_out()) +
                            ", expected " + std::to_string(table.dim) + " -> " +
                            std::to_string(table.dim));
    }
    const auto e = table.embedding(i);
    const auto y = kan::kan_forward<T>(e, net);
    for (std::size_t c = 0; c < table.dim; ++c) out.values.push_back(y[c] + e[c]);
  }
  return out;
}

enum class PromptKind { kKan, kMlp };

std::string_view prompt_kind_name(PromptKind kind);
PromptKind parse_prompt_kind(std::string_view name);

struct PromptConfig {
  std::size_t num_classes = 2;
  std::size_t dim = 256;
  PromptKind kind = PromptKind::kKan;
  std::size_t depth = 3;
  // One network applied to every class instead of one per class.
  bool shared_network = false;
  int spline_intervals = 8;
  int spline_order = 3;
};

// Trainable prompt generator on the autograd tape. The MLP variant replaces
// each KAN with a perceptron of the same depth and width.
class PromptGenerator {
 public:
  PromptGenerator() = default;
  PromptGenerator(ParameterSet& params, const PromptConfig& cfg, Rng& rng);

  // k x dim prompt tokens.
  ag::Var forward(ag::Tape& tape) const;
  PromptTokenSet<float> tokens() const;

  const PromptConfig& config() const { return cfg_; }
  Parameter& embeddings() const { return *embeddings_; }
  std::size_t network_count() const;
  // KAN parameters of network i (kind must be kKan).
  const ag::KanParams& kan(std::size_t i) const { return kans_.at(i); }
  // Owning copy of KAN network i, for use with the pure kan_core routines.
  kan::KanNetwork<float> kan_network(std::size_t i) const;
  ClassEmbeddingTable<float> embedding_table() const;

 private:
  PromptConfig cfg_;
  Parameter* embeddings_ = nullptr;
  std::vector<ag::KanParams> kans_;
  std::vector<std::vector<nn::Linear>> mlps_;
};

}  // namespace kanprompt

#endif  // KANPROMPT_PROMPT_HPP_
