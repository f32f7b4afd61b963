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

#include "kanprompt/config.hpp"

#include <cmath>
#include <cstdio>

#include "kanprompt/errors.hpp"

namespace kanprompt {

void validate(const TrainConfig& cfg) {
  // A zero learning rate is allowed: it is the null-update probe.
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw InvalidArgument("learning rate must be finite and >= 0");
  }
  if (!(cfg.weight_decay >= 0.0)) throw InvalidArgument("weight decay must be >= 0");
  if (cfg.epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (cfg.batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (!(cfg.loss.alpha >= 0.0 && cfg.loss.alpha <= 1.0)) {
    throw InvalidArgument("alpha must lie in [0, 1]");
  }
  if (!(cfg.loss.beta >= 0.0)) throw InvalidArgument("beta must be >= 0");
  if (!(cfg.loss.focal_gamma >= 0.0)) throw InvalidArgument("focal gamma must be >= 0");
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_mean_iou,val_mean_dsc\n";
  char line[128];
  for (const auto& r : history) {
    std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss, r.val_mean_iou,
                  r.val_mean_dsc);
    out += line;
  }
  return out;
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"embed_dim", c.embed_dim}, {"depth", c.depth},         {"patch_stride", c.patch_stride},
       {"heads", c.heads},         {"mlp_ratio", c.mlp_ratio}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.depth = j.value("depth", c.depth);
  c.patch_stride = j.value("patch_stride", c.patch_stride);
  c.heads = j.value("heads", c.heads);
  c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
  c.seed = j.value("seed", c.seed);
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"num_classes", c.num_classes},
       {"encoder", c.encoder},
       {"decoder_dim", c.decoder_dim},
       {"decoder_blocks", c.decoder_blocks},
       {"decoder_heads", c.decoder_heads},
       {"token_self_attention", c.token_self_attention},
       {"prompt_kind", std::string(prompt_kind_name(c.prompt_kind))},
       {"prompt_depth", c.prompt_depth},
       {"shared_prompt_network", c.shared_prompt_network},
       {"spline_intervals", c.spline_intervals},
       {"spline_order", c.spline_order},
       {"sam2_feature_channels", c.sam2_feature_channels},
       {"pathology_feature_channels", c.pathology_feature_channels},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.num_classes = j.value("num_classes", c.num_classes);
  if (j.contains("encoder")) j.at("encoder").get_to(c.encoder);
  c.decoder_dim = j.value("decoder_dim", c.decoder_dim);
  c.decoder_blocks = j.value("decoder_blocks", c.decoder_blocks);
  c.decoder_heads = j.value("decoder_heads", c.decoder_heads);
  c.token_self_attention = j.value("token_self_attention", c.token_self_attention);
  if (j.contains("prompt_kind")) {
    c.prompt_kind = parse_prompt_kind(j.at("prompt_kind").get<std::string>());
  }
  c.prompt_depth = j.value("prompt_depth", c.prompt_depth);
  c.shared_prompt_network = j.value("shared_prompt_network", c.shared_prompt_network);
  c.spline_intervals = j.value("spline_intervals", c.spline_intervals);
  c.spline_order = j.value("spline_order", c.spline_order);
  c.sam2_feature_channels = j.value("sam2_feature_channels", c.sam2_feature_channels);
  c.pathology_feature_channels = j.value("pathology_feature_channels", c.pathology_feature_channels);
  c.seed = j.value("seed", c.seed);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"model", c.model},
       {"optimizer", "adamw"},
       {"learning_rate", c.learning_rate},
       {"weight_decay", c.weight_decay},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"seed", c.seed},
       {"alpha", c.loss.alpha},
       {"beta", c.loss.beta},
       {"focal_gamma", c.loss.focal_gamma},
       {"freeze_sam2", c.freeze_sam2},
       {"freeze_pathology", c.freeze_pathology},
       {"aggregation", c.aggregation == metrics::Aggregation::kPooled ? "pooled" : "per_sample"},
       {"val_fraction", c.split.val_fraction},
       {"split_seed", c.split.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (j.contains("model")) j.at("model").get_to(c.model);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.loss.alpha = j.value("alpha", c.loss.alpha);
  c.loss.beta = j.value("beta", c.loss.beta);
  c.loss.focal_gamma = j.value("focal_gamma", c.loss.focal_gamma);
  c.freeze_sam2 = j.value("freeze_sam2", c.freeze_sam2);
  c.freeze_pathology = j.value("freeze_pathology", c.freeze_pathology);
  if (j.contains("aggregation")) {
    const auto mode = j.at("aggregation").get<std::string>();
    if (mode == "pooled") {
      c.aggregation = metrics::Aggregation::kPooled;
    } else if (mode == "per_sample") {
      c.aggregation = metrics::Aggregation::kPerSample;
    } else {
      throw InvalidArgument("unknown aggregation '" + mode + "'");
    }
  }
  c.split.val_fraction = j.value("val_fraction", c.split.val_fraction);
  c.split.seed = j.value("split_seed", c.split.seed);
}

void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = {{"epoch", r.epoch},
       {"train_loss", r.train_loss},
       {"val_mean_iou", r.val_mean_iou},
       {"val_mean_dsc", r.val_mean_dsc}};
}

void from_json(const nlohmann::json& j, EpochRecord& r) {
  r.epoch = j.at("epoch").get<int>();
  r.train_loss = j.at("train_loss").get<double>();
  r.val_mean_iou = j.at("val_mean_iou").get<double>();
  r.val_mean_dsc = j.at("val_mean_dsc").get<double>();
}

}  // namespace kanprompt
