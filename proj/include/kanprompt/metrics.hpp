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

// Overlap metrics for binary masks and their per-class aggregation.

#ifndef KANPROMPT_METRICS_HPP_
#define KANPROMPT_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kanprompt/errors.hpp"
#include "kanprompt/tensor.hpp"

namespace kanprompt::metrics {

struct OverlapCounts {
  std::size_t intersection = 0;
  std::size_t pred = 0;
  std::size_t gt = 0;

  std::size_t union_size() const { return pred + gt - intersection; }
  OverlapCounts& operator+=(const OverlapCounts& o) {
    intersection += o.intersection;
    pred += o.pred;
    gt += o.gt;
    return *this;
  }
};

// Nonzero entries are members of the mask.
inline OverlapCounts count_overlap(std::span<const std::uint8_t> pred,
                                   std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) {
    throw StructuralError("mask size mismatch: " + std::to_string(pred.size()) + " vs " +
                          std::to_string(gt.size()));
  }
  OverlapCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred[i] != 0;
    const bool b = gt[i] != 0;
    c.intersection += a && b;
    c.pred += a;
    c.gt += b;
  }
  return c;
}

// Both metrics are 1 when prediction and ground truth are both empty.
inline double dsc_from_counts(const OverlapCounts& c) {
  if (c.pred + c.gt == 0) return 1.0;
  return 2.0 * static_cast<double>(c.intersection) / static_cast<double>(c.pred + c.gt);
}

inline double iou_from_counts(const OverlapCounts& c) {
  if (c.union_size() == 0) return 1.0;
  return static_cast<double>(c.intersection) / static_cast<double>(c.union_size());
}

inline double dsc_metric(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  return dsc_from_counts(count_overlap(pred, gt));
}

inline double iou_metric(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  return iou_from_counts(count_overlap(pred, gt));
}

// Per-class overlap of two label maps; class c is the set of pixels equal to c.
inline std::vector<OverlapCounts> class_overlaps(const LabelMap& pred, const LabelMap& gt,
                                                 std::size_t num_classes) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw StructuralError("label maps differ in size: " + std::to_string(pred.height) + "x" +
                          std::to_string(pred.width) + " vs " + std::to_string(gt.height) +
                          "x" + std::to_string(gt.width));
  }
  std::vector<OverlapCounts> out(num_classes);
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    const std::size_t a = pred.labels[i];
    const std::size_t b = gt.labels[i];
    if (a < num_classes) ++out[a].pred;
    if (b < num_classes) ++out[b].gt;
    if (a == b && a < num_classes) ++out[a].intersection;
  }
  return out;
}

struct MetricReport {
  std::vector<double> dsc;  // per class
  std::vector<double> iou;  // per class
  double mean_dsc = 0.0;
  double mean_iou = 0.0;
  std::size_t sample_count = 0;
};

enum class Aggregation {
  kPerSample,  // mean over samples of each sample's per-class metric
  kPooled,     // counts summed over the dataset, metric computed once
};

class MetricAccumulator {
 public:
  MetricAccumulator(std::size_t num_classes, Aggregation mode)
      : num_classes_(num_classes),
        mode_(mode),
        dsc_sum_(num_classes, 0.0),
        iou_sum_(num_classes, 0.0),
        pooled_(num_classes) {}

  void add(const LabelMap& pred, const LabelMap& gt) {
    const auto counts = class_overlaps(pred, gt, num_classes_);
    for (std::size_t c = 0; c < num_classes_; ++c) {
      dsc_sum_[c] += dsc_from_counts(counts[c]);
      iou_sum_[c] += iou_from_counts(counts[c]);
      pooled_[c] += counts[c];
    }
    ++samples_;
  }

  MetricReport report() const {
    MetricReport r;
    r.sample_count = samples_;
    r.dsc.resize(num_classes_);
    r.iou.resize(num_classes_);
    for (std::size_t c = 0; c < num_classes_; ++c) {
      if (mode_ == Aggregation::kPooled) {
        r.dsc[c] = dsc_from_counts(pooled_[c]);
        r.iou[c] = iou_from_counts(pooled_[c]);
      } else if (samples_ > 0) {
        r.dsc[c] = dsc_sum_[c] / static_cast<double>(samples_);
        r.iou[c] = iou_sum_[c] / static_cast<double>(samples_);
      }
      r.mean_dsc += r.dsc[c];
      r.mean_iou += r.iou[c];
    }
    if (num_classes_ > 0) {
      r.mean_dsc /= static_cast<double>(num_classes_);
      r.mean_iou /= static_cast<double>(num_classes_);
    }
    return r;
  }

 private:
  std::size_t num_classes_;
  Aggregation mode_;
  std::vector<double> dsc_sum_;
  std::vector<double> iou_sum_;
  std::vector<OverlapCounts> pooled_;
  std::size_t samples_ = 0;
};

}  // namespace kanprompt::metrics

#endif  // KANPROMPT_METRICS_HPP_
