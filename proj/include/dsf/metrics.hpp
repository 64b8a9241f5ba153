#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dsf/tensor.hpp"

namespace dsf {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

/// Pixelwise tallies with spill (1) as the positive class. Inputs must be 0/1.
ConfusionCounts confusion(const Tensor& pred_mask, const Tensor& gt_mask);

enum MetricFlag : unsigned {
  kPrecisionUndefined = 1u << 0,
  kRecallUndefined = 1u << 1,
  kF1Undefined = 1u << 2,
  kIouUndefined = 1u << 3,
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
  std::optional<double> roc_auc;
  /// MetricFlag bits for metrics whose denominator was zero (reported as 0).
  unsigned undefined = 0;
};

/// Accuracy, precision, recall, F1 and IoU from pixel counts.
MetricsReport metrics(const ConfusionCounts& counts);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct RocResult {
  std::vector<RocPoint> points;  // descending threshold; starts at (inf, 0, 0), ends at (1, 1)
  double auc = 0.0;              // trapezoidal
};

/// ROC curve with one point per distinct score; labels must be 0/1 with both classes present.
RocResult roc_curve(std::span<const double> scores, std::span<const double> labels);

/// Mann-Whitney rank statistic with midranks for ties.
double rank_auc(std::span<const double> scores, std::span<const double> labels);

/// Header: accuracy,precision,recall,f1,iou,roc_auc
void write_metrics_csv(std::ostream& os, const MetricsReport& report);
/// Header: threshold,fpr,tpr
void write_roc_csv(std::ostream& os, const RocResult& roc);

}  // namespace dsf
