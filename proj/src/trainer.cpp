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

#include "kanprompt/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "kanprompt/errors.hpp"
#include "kanprompt/optimizer.hpp"
#include "kanprompt/random.hpp"

namespace kanprompt {

namespace {

void apply_freeze(SegmentationModel& model, const TrainConfig& cfg) {
  model.parameters().set_frozen(SegmentationModel::encoder_prefix(EncoderKind::kSam2Stub),
                                cfg.freeze_sam2);
  model.parameters().set_frozen(SegmentationModel::encoder_prefix(EncoderKind::kPathologyStub),
                                cfg.freeze_pathology);
}

void check_classes(const std::vector<LoadedSample>& samples, int k) {
  for (const auto& s : samples) {
    for (std::uint8_t v : s.mask.labels) {
      if (v >= k) {
        throw DatasetError("sample " + s.name + " has label " + std::to_string(v) +
                           " but the model has " + std::to_string(k) + " classes");
      }
    }
  }
}

}  // namespace

double accumulate_sample_gradients(SegmentationModel& model, const LoadedSample& sample,
                                   const loss::LossWeights& weights, float grad_scale) {
  ag::Tape tape;
  const auto fwd = model.forward(tape, sample.image);
  const Tensor& logits = tape.value(fwd.decoded.mask_logits);
  const Tensor& ious = tape.value(fwd.decoded.ious);
  const auto k = static_cast<std::size_t>(model.config().num_classes);
  const auto result = loss::hybrid_loss<float>(logits.data, ious.data, sample.mask.labels, k,
                                               weights);
  if (!std::isfinite(result.total)) return result.total;
  std::vector<float> g_logits(result.grad_logits);
  for (float& g : g_logits) g *= grad_scale;
  std::vector<float> g_ious(result.grad_ious);
  for (float& g : g_ious) g *= grad_scale;
  tape.seed(fwd.decoded.mask_logits, g_logits);
  tape.seed(fwd.decoded.ious, g_ious);
  tape.backward();
  return result.total;
}

TrainResult train(SegmentationModel& model, const std::vector<LoadedSample>& train_set,
                  const std::vector<LoadedSample>& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  validate(cfg);
  if (train_set.empty()) throw DatasetError("training set is empty");
  const int k = model.config().num_classes;
  check_classes(train_set, k);
  check_classes(val_set, k);
  apply_freeze(model, cfg);

  AdamWConfig oc;
  oc.learning_rate = cfg.learning_rate;
  oc.weight_decay = cfg.weight_decay;
  AdamW opt(model.parameters(), oc);
  Rng order_rng(cfg.seed ^ 0x5DEECE66Dull);
  const auto& scored = val_set.empty() ? train_set : val_set;

  TrainResult result;
  std::vector<std::size_t> order(train_set.size());
  double best_iou = -1.0;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      model.parameters().zero_grad();
      const float scale = 1.0f / static_cast<float>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const auto& sample = train_set[order[i]];
        const double l = accumulate_sample_gradients(model, sample, cfg.loss, scale);
        if (!std::isfinite(l)) {
          throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch) +
                                " on sample " + sample.name + "; try a smaller learning rate");
        }
        loss_sum += l;
      }
      opt.step();
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    const auto report = evaluate(model, scored, cfg.aggregation);
    rec.val_mean_iou = report.mean_iou;
    rec.val_mean_dsc = report.mean_dsc;
    result.history.push_back(rec);
    if (rec.val_mean_iou > best_iou) {
      best_iou = rec.val_mean_iou;
      result.best_epoch = epoch;
      result.best = capture_checkpoint(model, cfg, epoch, result.history);
    }
    if (on_epoch) on_epoch(rec);
  }
  result.last = capture_checkpoint(model, cfg, cfg.epochs, result.history);
  result.best.history = result.history;
  return result;
}

TrainResult train(SegmentationModel& model, const DatasetIndex& train_data,
                  const DatasetIndex& val_data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  const auto train_set = load_samples(train_data);
  const auto val_set = val_data.samples.empty() ? std::vector<LoadedSample>{}
                                                : load_samples(val_data);
  return train(model, train_set, val_set, cfg, on_epoch);
}

metrics::MetricReport evaluate(const SegmentationModel& model,
                               const std::vector<LoadedSample>& samples,
                               metrics::Aggregation mode) {
  metrics::MetricAccumulator acc(static_cast<std::size_t>(model.config().num_classes), mode);
  for (const auto& s : samples) acc.add(model.predict_labels(s.image), s.mask);
  return acc.report();
}

metrics::MetricReport evaluate(const SegmentationModel& model, const DatasetIndex& dataset,
                               metrics::Aggregation mode) {
  if (dataset.num_classes != model.config().num_classes) {
    throw InvalidArgument("model has " + std::to_string(model.config().num_classes) +
                          " classes but the dataset has " + std::to_string(dataset.num_classes));
  }
  metrics::MetricAccumulator acc(static_cast<std::size_t>(dataset.num_classes), mode);
  for (const auto& entry : dataset.samples) {
    const auto s = load_sample(entry);
    acc.add(model.predict_labels(s.image), s.mask);
  }
  return acc.report();
}

metrics::MetricReport evaluate(const Checkpoint& ckpt, const DatasetIndex& dataset,
                               metrics::Aggregation mode) {
  if (ckpt.config.model.num_classes != dataset.num_classes) {
    throw InvalidArgument("checkpoint has " + std::to_string(ckpt.config.model.num_classes) +
                          " classes but the dataset has " + std::to_string(dataset.num_classes));
  }
  const auto model = model_from_checkpoint(ckpt);
  return evaluate(*model, dataset, mode);
}

metrics::MetricReport evaluate_label_maps(const std::vector<LabelMap>& predictions,
                                          const std::vector<LabelMap>& truths, int num_classes,
                                          metrics::Aggregation mode) {
  if (predictions.size() != truths.size()) {
    throw InvalidArgument("got " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(truths.size()) + " ground-truth maps");
  }
  metrics::MetricAccumulator acc(static_cast<std::size_t>(num_classes), mode);
  for (std::size_t i = 0; i < truths.size(); ++i) acc.add(predictions[i], truths[i]);
  return acc.report();
}

std::string AblationTable::csv() const {
  std::string out = "model";
  for (const auto& d : datasets) out += "," + d + "_DSC," + d + "_IOU";
  out += "\n";
  char buf[64];
  for (const auto& row : rows) {
    out += row.model;
    for (const auto& r : row.reports) {
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f", r.mean_dsc, r.mean_iou);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

AblationTable ablate(const TrainConfig& base, const std::vector<NamedDataset>& datasets) {
  validate(base);
  if (datasets.empty()) throw InvalidArgument("ablation needs at least one dataset");
  AblationTable table;
  for (const auto& d : datasets) table.datasets.push_back(d.name);
  const std::pair<const char*, PromptKind> variants[] = {{"w.o. KAN", PromptKind::kMlp},
                                                          {"w. KAN", PromptKind::kKan}};
  for (const auto& [label, kind] : variants) {
    AblationRow row;
    row.model = label;
    for (const auto& d : datasets) {
      TrainConfig cfg = base;
      cfg.model.prompt_kind = kind;
      cfg.model.num_classes = d.train.num_classes;
      const auto [tr, va] = split_train_val(d.train, cfg.split);
      SegmentationModel model(cfg.model);
      const auto result = train(model, tr, va, cfg);
      restore_parameters(model, result.best);
      row.reports.push_back(evaluate(model, d.test ? *d.test : va, cfg.aggregation));
    }
    table.rows.push_back(std::move(row));
  }
  table.kan_at_least_mlp = true;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    if (table.rows[1].reports[i].mean_iou < table.rows[0].reports[i].mean_iou) {
      table.kan_at_least_mlp = false;
    }
  }
  return table;
}

}  // namespace kanprompt
