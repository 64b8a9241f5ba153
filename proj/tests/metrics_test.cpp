#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "dsf/errors.hpp"
#include "dsf/metrics.hpp"
#include "test_util.hpp"

namespace dsf {
namespace {

TEST(Confusion, IdentityAndComplement) {
  Rng rng(1);
  Tensor g(Shape{1, 1, 8, 8});
  for (double& v : g.values()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
  const ConfusionCounts same = confusion(g, g);
  EXPECT_EQ(same.fp, 0u);
  EXPECT_EQ(same.fn, 0u);
  Tensor inv = g;
  for (double& v : inv.values()) v = 1.0 - v;
  const ConfusionCounts comp = confusion(inv, g);
  EXPECT_EQ(comp.tp, 0u);
  EXPECT_EQ(comp.tn, 0u);
}

TEST(Confusion, MatchesPixelLoop) {
  Rng rng(2);
  Tensor p(Shape{1, 1, 16, 16}), g(Shape{1, 1, 16, 16});
  for (double& v : p.values()) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
  for (double& v : g.values()) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
  ConfusionCounts ref;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 1 && g[i] == 1) ++ref.tp;
    if (p[i] == 0 && g[i] == 0) ++ref.tn;
    if (p[i] == 1 && g[i] == 0) ++ref.fp;
    if (p[i] == 0 && g[i] == 1) ++ref.fn;
  }
  EXPECT_EQ(confusion(p, g), ref);
  EXPECT_EQ(ref.total(), 256u);
}

TEST(Confusion, RejectsNonBinaryAndShapeMismatch) {
  Tensor p(Shape{1, 1, 2, 2}, 0.0);
  p[1] = 0.5;
  EXPECT_THROW(confusion(p, Tensor(Shape{1, 1, 2, 2})), ShapeError);
  EXPECT_THROW(confusion(Tensor(Shape{1, 1, 2, 2}), Tensor(Shape{1, 1, 2, 3})), ShapeError);
}

TEST(Metrics, HandExample) {
  const MetricsReport r = metrics(ConfusionCounts{3, 5, 1, 1});
  EXPECT_DOUBLE_EQ(r.accuracy, 0.8);
  EXPECT_DOUBLE_EQ(r.precision, 0.75);
  EXPECT_DOUBLE_EQ(r.recall, 0.75);
  EXPECT_DOUBLE_EQ(r.f1, 0.75);
  EXPECT_DOUBLE_EQ(r.iou, 0.6);
  EXPECT_EQ(r.undefined, 0u);
}

TEST(Metrics, PerfectClassifier) {
  const MetricsReport r = metrics(ConfusionCounts{17, 0, 0, 0});
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.iou, 1.0);
}

TEST(Metrics, ZeroDenominatorsAreFlagged) {
  const MetricsReport r = metrics(ConfusionCounts{0, 10, 0, 0});
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.iou, 0.0);
  EXPECT_TRUE(r.undefined & kPrecisionUndefined);
  EXPECT_TRUE(r.undefined & kRecallUndefined);
  EXPECT_TRUE(r.undefined & kF1Undefined);
  EXPECT_TRUE(r.undefined & kIouUndefined);
  EXPECT_THROW(metrics(ConfusionCounts{}), ShapeError);
}

TEST(Metrics, RandomCountsAgreeWithFormulasAndIdentities) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ConfusionCounts c{1 + rng.below(500), rng.below(500), rng.below(500), rng.below(500)};
    const MetricsReport r = metrics(c);
    const double tp = c.tp, tn = c.tn, fp = c.fp, fn = c.fn;
    const double p = tp / (tp + fp), rc = tp / (tp + fn);
    EXPECT_NEAR(r.accuracy, (tp + tn) / (tp + tn + fp + fn), 1e-15);
    EXPECT_NEAR(r.precision, p, 1e-15);
    EXPECT_NEAR(r.recall, rc, 1e-15);
    EXPECT_NEAR(r.f1, 2.0 * p * rc / (p + rc), 1e-15);
    EXPECT_NEAR(r.iou, tp / (tp + fp + fn), 1e-15);
    EXPECT_NEAR(r.f1, 2.0 * r.iou / (1.0 + r.iou), 1e-14);
    EXPECT_LE(r.iou, r.precision);
    EXPECT_LE(r.iou, r.recall);
  }
}

TEST(Roc, SeparatedScoresGiveOne) {
  const std::vector<double> s{0.9, 0.8, 0.3, 0.1}, l{1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(roc_curve(s, l).auc, 1.0);
  EXPECT_DOUBLE_EQ(rank_auc(s, l), 1.0);
}

TEST(Roc, IdenticalScoresGiveOneHalf) {
  const std::vector<double> s(6, 0.4), l{1, 0, 1, 0, 0, 1};
  EXPECT_DOUBLE_EQ(roc_curve(s, l).auc, 0.5);
  EXPECT_DOUBLE_EQ(rank_auc(s, l), 0.5);
}

TEST(Roc, PairEnumerationExample) {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6}, l{1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(roc_curve(s, l).auc, 0.75);
  EXPECT_DOUBLE_EQ(rank_auc(s, l), 0.75);
}

TEST(Roc, CurveShapeInvariants) {
  Rng rng(4);
  std::vector<double> s(200), l(200);
  for (std::size_t i = 0; i < s.size(); ++i) {
    l[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
    s[i] = std::round(rng.uniform() * 20.0) / 20.0;
  }
  const RocResult r = roc_curve(s, l);
  ASSERT_GE(r.points.size(), 2u);
  EXPECT_EQ(r.points.front().fpr, 0.0);
  EXPECT_EQ(r.points.front().tpr, 0.0);
  EXPECT_EQ(r.points.back().fpr, 1.0);
  EXPECT_EQ(r.points.back().tpr, 1.0);
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    EXPECT_LT(r.points[i].threshold, r.points[i - 1].threshold);
    EXPECT_GE(r.points[i].fpr, r.points[i - 1].fpr);
    EXPECT_GE(r.points[i].tpr, r.points[i - 1].tpr);
  }
}

TEST(Roc, TrapezoidEqualsRankStatisticWithTies) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.below(300);
    std::vector<double> s(n), l(n);
    for (std::size_t i = 0; i < n; ++i) {
      l[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
      s[i] = static_cast<double>(rng.below(12)) / 11.0;
    }
    l[0] = 1.0;
    l[1] = 0.0;
    EXPECT_NEAR(roc_curve(s, l).auc, rank_auc(s, l), 1e-9);
  }
}

TEST(Roc, RejectsSingleClass) {
  const std::vector<double> s{0.1, 0.2}, l{1, 1};
  EXPECT_THROW(roc_curve(s, l), ShapeError);
  EXPECT_THROW(rank_auc(s, l), ShapeError);
}

TEST(MetricsCsv, HeaderAndRoundTripPrecision) {
  MetricsReport r = metrics(ConfusionCounts{3, 5, 1, 1});
  r.roc_auc = 1.0 / 3.0;
  std::ostringstream os;
  write_metrics_csv(os, r);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "accuracy,precision,recall,f1,iou,roc_auc");
  EXPECT_EQ(std::stod(row.substr(row.rfind(',') + 1)), 1.0 / 3.0);

  const std::vector<double> s{0.9, 0.2}, l{1, 0};
  std::ostringstream roc;
  write_roc_csv(roc, roc_curve(s, l));
  EXPECT_EQ(roc.str().substr(0, roc.str().find('\n')), "threshold,fpr,tpr");
}

}  // namespace
}  // namespace dsf
