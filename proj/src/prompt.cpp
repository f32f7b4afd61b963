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

#include "kanprompt/prompt.hpp"

#include "kanprompt/errors.hpp"

namespace kanprompt {

std::string_view prompt_kind_name(PromptKind kind) {
  return kind == PromptKind::kKan ? "kan" : "mlp";
}

PromptKind parse_prompt_kind(std::string_view name) {
  if (name == "kan") return PromptKind::kKan;
  if (name == "mlp") return PromptKind::kMlp;
  throw InvalidArgument("unknown prompt kind '" + std::string(name) + "' (expected kan or mlp)");
}

PromptGenerator::PromptGenerator(ParameterSet& params, const PromptConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  if (cfg.num_classes == 0) throw InvalidArgument("prompt generator needs k >= 1");
  if (cfg.depth == 0) throw InvalidArgument("prompt network depth must be >= 1");
  const std::size_t d = cfg.dim;
  embeddings_ = &params.add("prompt.class_embeddings", {cfg.num_classes, d});
  for (float& v : embeddings_->value) v = static_cast<float>(rng.uniform(-1.0, 1.0));

  const std::size_t networks = cfg.shared_network ? 1 : cfg.num_classes;
  if (cfg.kind == PromptKind::kKan) {
    auto grid = std::make_shared<const kan::SplineGrid<float>>(
        kan::SplineGrid<float>::uniform(cfg.spline_intervals, cfg.spline_order, -1.0f, 1.0f));
    // Random base weights break the symmetry between output units of a wide
    // layer; unit base weights would make every output identical.
    const kan::KanInit init{0.0, 1.0, 0.1};
    for (std::size_t n = 0; n < networks; ++n) {
      ag::KanParams net;
      net.grid = grid;
      net.widths.assign(cfg.depth + 1, d);
      for (std::size_t l = 0; l < cfg.depth; ++l) {
        const std::string name = "prompt.kan" + std::to_string(n) + ".layer" + std::to_string(l);
        Parameter& base = params.add(name + ".base", {d, d});
        Parameter& coef = params.add(name + ".coef", {d, d, grid->basis_count()});
        kan::initialize_layer<float>(base.value, coef.value, d, grid->basis_count(), init, rng);
        net.base_weights.push_back(&base);
        net.coefficients.push_back(&coef);
      }
      kans_.push_back(std::move(net));
    }
  } else {
    for (std::size_t n = 0; n < networks; ++n) {
      std::vector<nn::Linear> layers;
      for (std::size_t l = 0; l < cfg.depth; ++l) {
        layers.emplace_back(params,
                            "prompt.mlp" + std::to_string(n) + ".layer" + std::to_string(l), d, d,
                            rng);
      }
      mlps_.push_back(std::move(layers));
    }
  }
}

std::size_t PromptGenerator::network_count() const {
  return cfg_.kind == PromptKind::kKan ? kans_.size() : mlps_.size();
}

ag::Var PromptGenerator::forward(ag::Tape& tape) const {
  const std::size_t d = cfg_.dim;
  const ag::Var table = tape.parameter(*embeddings_, cfg_.num_classes, d);
  std::vector<ag::Var> tokens;
  for (std::size_t i = 0; i < cfg_.num_classes; ++i) {
    const ag::Var e = ag::slice_rows(table, i, 1);
    const std::size_t n = cfg_.shared_network ? 0 : i;
    ag::Var y;
    if (cfg_.kind == PromptKind::kKan) {
      y = ag::kan_rows(e, kans_[n]);
    } else {
      y = e;
      for (std::size_t l = 0; l < mlps_[n].size(); ++l) {
        y = mlps_[n][l](tape, y);
        if (l + 1 < mlps_[n].size()) y = ag::silu(y);
      }
    }
    tokens.push_back(ag::add(y, e));
  }
  return ag::concat_rows(tokens);
}

PromptTokenSet<float> PromptGenerator::tokens() const {
  ag::Tape tape(false);
  const ag::Var t = forward(tape);
  return PromptTokenSet<float>{cfg_.num_classes, cfg_.dim, t.value().data};
}

kan::KanNetwork<float> PromptGenerator::kan_network(std::size_t i) const {
  const ag::KanParams& p = kans_.at(i);
  std::vector<kan::KanLayer<float>> layers;
  for (std::size_t l = 0; l + 1 < p.widths.size(); ++l) {
    kan::KanLayer<float> layer(p.widths[l], p.widths[l + 1], p.grid);
    layer.base_weights() = p.base_weights[l]->value;
    layer.coefficients() = p.coefficients[l]->value;
    layers.push_back(std::move(layer));
  }
  return kan::KanNetwork<float>(std::move(layers));
}

ClassEmbeddingTable<float> PromptGenerator::embedding_table() const {
  return {cfg_.num_classes, cfg_.dim, embeddings_->value};
}

}  // namespace kanprompt
