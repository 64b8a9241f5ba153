#include "dsf/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "dsf/errors.hpp"

namespace dsf {
namespace {

double ratio(std::uint64_t num, std::uint64_t den, unsigned flag, unsigned& undefined) {
  if (den == 0) {
    undefined |= flag;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

struct ClassTotals {
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
};

ClassTotals check_scores(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("roc: " + std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) +
                     " labels");
  }
  ClassTotals t;
  for (double l : labels) {
    if (l == 1.0) {
      ++t.positives;
    } else if (l == 0.0) {
      ++t.negatives;
    } else {
      throw ShapeError("roc: labels must be 0 or 1");
    }
  }
  if (t.positives == 0 || t.negatives == 0) {
    throw ShapeError("roc: labels contain a single class (" + std::to_string(t.positives) + " positive, " +
                     std::to_string(t.negatives) + " negative); AUC is undefined");
  }
  return t;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion(const Tensor& pred_mask, const Tensor& gt_mask) {
  if (pred_mask.shape() != gt_mask.shape()) {
    throw ShapeError("confusion: prediction " + pred_mask.shape().str() + " vs ground truth " +
                     gt_mask.shape().str());
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred_mask.size(); ++i) {
    const double p = pred_mask[i];
    const double g = gt_mask[i];
    if ((p != 0.0 && p != 1.0) || (g != 0.0 && g != 1.0)) {
      throw ShapeError("confusion: non-binary value at element " + std::to_string(i));
    }
    if (p == 1.0) {
      (g == 1.0 ? c.tp : c.fp) += 1;
    } else {
      (g == 1.0 ? c.fn : c.tn) += 1;
    }
  }
  return c;
}

MetricsReport metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw ShapeError("metrics: confusion counts are all zero");
  MetricsReport r;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  r.precision = ratio(c.tp, c.tp + c.fp, kPrecisionUndefined, r.undefined);
  r.recall = ratio(c.tp, c.tp + c.fn, kRecallUndefined, r.undefined);
  if (r.precision + r.recall == 0.0) {
    r.undefined |= kF1Undefined;
    r.f1 = 0.0;
  } else {
    r.f1 = 2.0 * (r.precision * r.recall) / (r.precision + r.recall);
  }
  r.iou = ratio(c.tp, c.tp + c.fp + c.fn, kIouUndefined, r.undefined);
  return r;
}

RocResult roc_curve(std::span<const double> scores, std::span<const double> labels) {
  const ClassTotals totals = check_scores(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double np = static_cast<double>(totals.positives);
  const double nn = static_cast<double>(totals.negatives);
  RocResult roc;
  roc.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) {
      (labels[order[i]] == 1.0 ? tp : fp) += 1;
    }
    roc.points.push_back({t, static_cast<double>(fp) / nn, static_cast<double>(tp) / np});
  }
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    const RocPoint& a = roc.points[i - 1];
    const RocPoint& b = roc.points[i];
    roc.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return roc;
}

double rank_auc(std::span<const double> scores, std::span<const double> labels) {
  const ClassTotals totals = check_scores(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // ranks i+1 .. j share the midrank
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1.0) positive_rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(totals.positives);
  const double nn = static_cast<double>(totals.negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

void write_metrics_csv(std::ostream& os, const MetricsReport& r) {
  os << "accuracy,precision,recall,f1,iou,roc_auc\n";
  os << fmt(r.accuracy) << ',' << fmt(r.precision) << ',' << fmt(r.recall) << ',' << fmt(r.f1) << ','
     << fmt(r.iou) << ',' << (r.roc_auc ? fmt(*r.roc_auc) : std::string()) << '\n';
}

void write_roc_csv(std::ostream& os, const RocResult& roc) {
  os << "threshold,fpr,tpr\n";
  for (const RocPoint& p : roc.points) os << fmt(p.threshold) << ',' << fmt(p.fpr) << ',' << fmt(p.tpr) << '\n';
}

}  // namespace dsf
