#include <gtest/gtest.h>

#include "dsf/errors.hpp"
#include "dsf/param_store.hpp"
#include "dsf/tensor.hpp"
#include "test_util.hpp"

namespace dsf {
namespace {

TEST(Tensor, DataLengthMatchesShape) {
  Tensor t(Shape{2, 3, 4, 5}, 1.5);
  EXPECT_EQ(t.size(), 120u);
  EXPECT_EQ(t.at(1, 2, 3, 4), 1.5);
  EXPECT_THROW(Tensor(Shape{1, 1, 2, 2}, std::vector<double>(3)), ShapeError);
}

TEST(Tensor, RowMajorOffsets) {
  Tensor t(Shape{2, 2, 3, 3});
  EXPECT_EQ(t.offset(1, 1, 2, 2), t.size() - 1);
  EXPECT_EQ(t.offset(0, 1, 0, 0), 9u);
  EXPECT_EQ(t.plane(1, 0) - t.data(), 18);
}

TEST(Tensor, StackAndSliceBatch) {
  Rng rng(3);
  const Tensor a = test::random_tensor({1, 2, 3, 3}, rng);
  const Tensor b = test::random_tensor({1, 2, 3, 3}, rng);
  const std::vector<Tensor> items{a, b};
  const Tensor s = stack_batch(items);
  EXPECT_EQ(s.shape(), (Shape{2, 2, 3, 3}));
  EXPECT_EQ(max_abs_diff(s.slice_batch(1, 1), b), 0.0);
  EXPECT_EQ(max_abs_diff(s.slice_batch(0, 1), a), 0.0);
  const std::vector<Tensor> bad{a, Tensor(Shape{1, 1, 3, 3})};
  EXPECT_THROW(stack_batch(bad), ShapeError);
}

TEST(Tensor, AllFiniteDetectsNan) {
  Tensor t(Shape{1, 1, 2, 2});
  EXPECT_TRUE(t.all_finite());
  t[3] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(ParamStore, IteratesInLexicographicOrder) {
  ParamStore p;
  p.add("b.weight", Tensor(Shape{1, 1, 1, 1}));
  p.add("a.bias", Tensor(Shape{2, 1, 1, 1}));
  p.add("a.weight", Tensor(Shape{1, 1, 1, 1}));
  EXPECT_EQ(p.names(), (std::vector<std::string>{"a.bias", "a.weight", "b.weight"}));
  EXPECT_EQ(p.numel(), 4u);
}

TEST(ParamStore, GradShapeMatchesValueAndZeroes) {
  ParamStore p;
  p.add("w", Tensor(Shape{2, 3, 1, 1}, 1.0));
  EXPECT_EQ(p.get("w").grad.shape(), p.value("w").shape());
  p.grad("w").fill(4.0);
  p.zero_grad();
  for (double g : p.grad("w").span()) EXPECT_EQ(g, 0.0);
}

TEST(ParamStore, RejectsDuplicateAndUnknownNames) {
  ParamStore p;
  p.add("w", Tensor(Shape{1, 1, 1, 1}));
  EXPECT_THROW(p.add("w", Tensor(Shape{1, 1, 1, 1})), ShapeError);
  EXPECT_ANY_THROW(p.get("missing"));
}

TEST(ParamStore, Float32RoundingIsIdempotent) {
  Rng rng(1);
  ParamStore p;
  p.add("w", test::random_tensor({3, 3, 3, 3}, rng));
  const ParamStore r1 = round_to_float32(p);
  const ParamStore r2 = round_to_float32(r1);
  EXPECT_EQ(max_abs_diff(r1.value("w"), r2.value("w")), 0.0);
  for (std::size_t i = 0; i < p.value("w").size(); ++i) {
    EXPECT_EQ(r1.value("w")[i], static_cast<double>(static_cast<float>(p.value("w")[i])));
  }
}

TEST(Rng, DerivedStreamsAreDistinctAndReproducible) {
  EXPECT_EQ(derive_seed(7, 1, 2), derive_seed(7, 1, 2));
  EXPECT_NE(derive_seed(7, 1, 2), derive_seed(7, 2, 1));
  EXPECT_NE(derive_seed(7, 1, 2), derive_seed(8, 1, 2));
  Rng a(5);
  Rng b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(Rng, BelowStaysInRange) {
  Rng rng(11);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++hist[v];
  }
  for (int h : hist) EXPECT_GT(h, 800);
}

}  // namespace
}  // namespace dsf
