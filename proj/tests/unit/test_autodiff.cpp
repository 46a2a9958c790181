#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gogan/autodiff/autodiff.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace gogan;
using ad::Tensor;
using T = Tensor<double>;
using gogan::testing::gradcheck;
using gogan::testing::random_tensor;
using gogan::testing::worst;

namespace {

double dot(const T& a, const T& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

// Weighted sum so every output element gets a distinct upstream gradient.
T probe_loss(const T& y, std::uint64_t seed = 99) {
  ad::Rng rng(seed);
  auto w = random_tensor(y.shape(), rng, -1, 1, 0, false);
  return ad::sum(ad::mul(y, w));
}

}  // namespace

TEST(Tensor, ShapeAndValues) {
  auto t = T::of({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.dim(1), 3u);
  EXPECT_THROW(T({2, 2}, {1, 2, 3}), ad::DimensionError);
}

TEST(Conv2d, FirstEncoderBlockShape) {
  auto x = T::zeros({1, 1, 256, 256});
  auto k = T::zeros({64, 1, 4, 4});
  auto y = ad::conv2d(x, k, {2, 1});
  EXPECT_EQ(y.shape(), (ad::Shape{1, 64, 128, 128}));
}

TEST(Conv2d, IdentityKernel) {
  ad::Rng rng(1);
  auto x = random_tensor({2, 3, 5, 4}, rng, -1, 1, 0, false);
  std::vector<double> kv(9, 0.0);
  for (int c = 0; c < 3; ++c) kv[c * 3 + c] = 1.0;
  auto y = ad::conv2d(x, T({3, 3, 1, 1}, kv), {1, 0});
  ASSERT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Conv2d, MatchesNestedLoopOracle) {
  ad::Rng rng(2);
  auto x = random_tensor({1, 1, 4, 4}, rng, -1, 1, 0, false);
  auto k = random_tensor({1, 1, 3, 3}, rng, -1, 1, 0, false);
  auto y = ad::conv2d(x, k, {1, 1});
  int Ho, Wo;
  auto ref = gogan::testing::naive_conv2d(x.values(), 1, 1, 4, 4, k.values(), 1, 3, 3, 1, 1, Ho, Wo);
  ASSERT_EQ(y.numel(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-14);

  auto x2 = random_tensor({2, 3, 9, 7}, rng, -1, 1, 0, false);
  auto k2 = random_tensor({4, 3, 4, 4}, rng, -1, 1, 0, false);
  auto y2 = ad::conv2d(x2, k2, {2, 1});
  auto ref2 = gogan::testing::naive_conv2d(x2.values(), 2, 3, 9, 7, k2.values(), 4, 4, 4, 2, 1, Ho, Wo);
  EXPECT_EQ(y2.shape(), (ad::Shape{2, 4, static_cast<std::size_t>(Ho), static_cast<std::size_t>(Wo)}));
  for (std::size_t i = 0; i < ref2.size(); ++i) EXPECT_NEAR(y2[i], ref2[i], 1e-13);
}

TEST(Conv2d, ErrorsNameTheAxis) {
  auto x = T::zeros({1, 3, 8, 8});
  try {
    ad::conv2d(x, T::zeros({4, 2, 3, 3}), {1, 0});
    FAIL() << "expected DimensionError";
  } catch (const ad::DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("axis"), std::string::npos) << e.what();
  }
  EXPECT_THROW(ad::conv2d(x, T::zeros({4, 3, 11, 11}), {1, 0}), ad::DimensionError);
  EXPECT_THROW(ad::conv2d(x, T::zeros({4, 3, 3, 3}), {0, 0}), ad::DimensionError);
}

TEST(ConvTranspose2d, DecoderUpsampleShape) {
  auto x = T::zeros({1, 64, 128, 128});
  auto k = T::zeros({64, 1, 4, 4});
  auto y = ad::conv_transpose2d(x, k, {2, 1});
  EXPECT_EQ(y.shape(), (ad::Shape{1, 1, 256, 256}));
}

TEST(ConvTranspose2d, IdentityKernel) {
  ad::Rng rng(3);
  auto x = random_tensor({1, 2, 3, 3}, rng, -1, 1, 0, false);
  auto y = ad::conv_transpose2d(x, T({2, 2, 1, 1}, {1, 0, 0, 1}), {1, 0});
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(ConvTranspose2d, AdjointOfConv) {
  ad::Rng rng(4);
  for (auto [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0}, {2, 1}, {2, 0}, {3, 2}}) {
    auto x = random_tensor({2, 3, 8, 8}, rng, -1, 1, 0, false);
    auto k = random_tensor({5, 3, 4, 4}, rng, -1, 1, 0, false);
    auto cx = ad::conv2d(x, k, {stride, pad});
    auto y = random_tensor(cx.shape(), rng, -1, 1, 0, false);
    auto ty = ad::conv_transpose2d(y, k, {stride, pad});
    if (ty.shape() != x.shape()) continue;  // output_padding ambiguity; sizes must agree
    EXPECT_NEAR(dot(cx, y), dot(x, ty), 1e-10) << "stride " << stride << " pad " << pad;
  }
}

TEST(BatchNorm, InferenceWithMatchingRunningMeanIsZero) {
  auto x = T::full({2, 3, 2, 2}, 4.0);
  ad::RunningStats<double> rs{{4, 4, 4}, {1, 1, 1}};
  auto y = ad::batchnorm2d(x, T::full({3}, 1.0), T::zeros({3}), false, rs);
  for (std::size_t i = 0; i < y.numel(); ++i) EXPECT_NEAR(y[i], 0.0, 1e-12);
}

TEST(BatchNorm, TrainingNormalizes) {
  ad::Rng rng(5);
  auto x = random_tensor({4, 3, 5, 5}, rng, -3, 7, 0, false);
  ad::RunningStats<double> rs{{0, 0, 0}, {1, 1, 1}};
  ad::NormOptions opts;
  opts.eps = 0.0;
  auto y = ad::batchnorm2d(x, T::full({3}, 1.0), T::zeros({3}), true, rs, opts);
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0, v = 0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 25; ++i) m += y[(n * 3 + c) * 25 + i];
    m /= 100;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 25; ++i) v += std::pow(y[(n * 3 + c) * 25 + i] - m, 2);
    v /= 100;
    EXPECT_LT(std::abs(m), 1e-9);
    EXPECT_NEAR(v, 1.0, 1e-9);
  }
  // Running stats moved toward the batch statistics.
  EXPECT_NE(rs.mean[0], 0.0);
}

TEST(BatchNorm, SingleSampleTrainingIsAnError) {
  ad::RunningStats<double> rs{{0}, {1}};
  EXPECT_THROW(ad::batchnorm2d(T::zeros({1, 1, 4, 4}), T::full({1}, 1.0), T::zeros({1}), true, rs),
               ad::DimensionError);
}

TEST(BatchNorm, GradientMatchesFiniteDifferences) {
  ad::Rng rng(6);
  auto x = random_tensor({3, 2, 3, 3}, rng);
  auto g = random_tensor({2}, rng, 0.5, 1.5);
  auto b = random_tensor({2}, rng);
  auto res = gradcheck(
      [&] {
        ad::RunningStats<double> rs{{0, 0}, {1, 1}};
        return probe_loss(ad::batchnorm2d(x, g, b, true, rs));
      },
      {{"x", x}, {"gamma", g}, {"beta", b}});
  EXPECT_LT(worst(res), 1e-6);
}

TEST(Activations, Values) {
  auto x = T::of({3}, {-1.0, 0.0, 2.0});
  auto l = ad::leaky_relu(x, 0.2);
  EXPECT_DOUBLE_EQ(l[0], -0.2);
  EXPECT_DOUBLE_EQ(l[2], 2.0);
  EXPECT_DOUBLE_EQ(ad::relu(x)[0], 0.0);
  EXPECT_DOUBLE_EQ(ad::sigmoid(x)[1], 0.5);
  EXPECT_DOUBLE_EQ(ad::tanh(x)[1], 0.0);
  auto big = ad::sigmoid(T::of({2}, {-800.0, 800.0}));
  EXPECT_TRUE(std::isfinite(big[0]) && std::isfinite(big[1]));
}

TEST(Activations, TanhGradient) {
  ad::Rng rng(7);
  auto x = random_tensor({10}, rng, -2, 2);
  auto res = gradcheck([&] { return probe_loss(ad::tanh(x)); }, {{"x", x}});
  EXPECT_LT(worst(res), 1e-8);
}

TEST(Dense, Arithmetic) {
  auto y = ad::dense(T::of({1, 2}, {1, 2}), T::of({2, 1}, {1, 1}), T::of({1}, {3}));
  EXPECT_DOUBLE_EQ(y.item(), 6.0);
  auto x = T::of({2, 2}, {1, 2, 3, 4});
  auto id = ad::dense(x, T::of({2, 2}, {1, 0, 0, 1}), T::zeros({2}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(id[i], x[i]);
  EXPECT_THROW(ad::dense(x, T::zeros({3, 2}), T::zeros({2})), ad::DimensionError);
}

TEST(Dense, Gradient) {
  ad::Rng rng(8);
  auto x = random_tensor({3, 4}, rng);
  auto w = random_tensor({4, 5}, rng);
  auto b = random_tensor({5}, rng);
  auto res = gradcheck([&] { return probe_loss(ad::dense(x, w, b)); }, {{"x", x}, {"w", w}, {"b", b}});
  EXPECT_LT(worst(res), 1e-8);
}

TEST(Reductions, Values) {
  EXPECT_DOUBLE_EQ(ad::mean(T::of({3}, {1, 2, 3})).item(), 2.0);
  EXPECT_DOUBLE_EQ(ad::sum(T::of({3}, {1, 2, 3})).item(), 6.0);
  ad::Rng rng(9);
  auto x = T::of({3}, {1, -2, 3});
  auto d = ad::dropout(x, 0.0, true, rng);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(d[i], x[i]);
  auto inf = ad::dropout(x, 0.5, false, rng);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(inf[i], x[i]);
  EXPECT_THROW(ad::dropout(x, 1.0, true, rng), ad::DomainError);
  EXPECT_THROW(ad::log(T::of({2}, {1.0, 0.0})), ad::DomainError);
}

TEST(Reductions, AbsSubgradient) {
  auto x = T::of({3}, {2.0, -2.0, 0.0}, true);
  ad::Tape<double> tape;
  {
    ad::TapeScope<double> s(tape);
    tape.backward(ad::sum(ad::abs(x)));
  }
  EXPECT_EQ(x.grad()[0], 1.0);
  EXPECT_EQ(x.grad()[1], -1.0);
  EXPECT_EQ(x.grad()[2], 0.0);
}

TEST(Reductions, DropoutKeepsExpectation) {
  ad::Rng rng(10);
  auto x = T::full({20000}, 1.0);
  auto y = ad::dropout(x, 0.5, true, rng);
  double m = ad::mean(y).item();
  EXPECT_NEAR(m, 1.0, 0.03);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_TRUE(y[i] == 0.0 || y[i] == 2.0);
}

TEST(Backward, SumOfProductGivesInput) {
  auto w = T::of({3}, {0.5, -1, 2}, true);
  auto x = T::of({3}, {4, 5, 6});
  ad::Tape<double> tape;
  {
    ad::TapeScope<double> s(tape);
    tape.backward(ad::sum(ad::mul(w, x)));
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(w.grad()[i], x[i]);
  EXPECT_FALSE(x.has_grad());
}

TEST(Backward, TwoConsumersAdd) {
  auto w = T::of({2}, {1.5, -0.5}, true);
  ad::Tape<double> tape;
  {
    ad::TapeScope<double> s(tape);
    auto a = ad::affine(w, 2.0, 0.0);
    auto b = ad::affine(w, 3.0, 1.0);
    tape.backward(ad::sum(ad::add(a, b)));
  }
  EXPECT_DOUBLE_EQ(w.grad()[0], 5.0);
  EXPECT_DOUBLE_EQ(w.grad()[1], 5.0);
}

TEST(Backward, SharedSubexpressionEqualsExpanded) {
  ad::Rng rng(11);
  auto w1 = random_tensor({6}, rng);
  auto w2 = T(w1.shape(), w1.values(), true);
  ad::Tape<double> t1, t2;
  {
    ad::TapeScope<double> s(t1);
    auto h = ad::tanh(ad::affine(w1, 1.3, 0.2));
    t1.backward(ad::sum(ad::mul(h, h)));
  }
  {
    ad::TapeScope<double> s(t2);
    auto h1 = ad::tanh(ad::affine(w2, 1.3, 0.2));
    auto h2 = ad::tanh(ad::affine(w2, 1.3, 0.2));
    t2.backward(ad::sum(ad::mul(h1, h2)));
  }
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(w1.grad()[i], w2.grad()[i], 1e-15);
  EXPECT_EQ(t1.last_visit_count(), t1.size());
}

TEST(Backward, NonScalarLossIsUsageError) {
  auto w = T::of({2}, {1, 2}, true);
  ad::Tape<double> tape;
  ad::TapeScope<double> s(tape);
  auto y = ad::affine(w, 2.0, 0.0);
  EXPECT_THROW(tape.backward(y), ad::UsageError);
}

TEST(Backward, UnreachableParameterHoldsZero) {
  auto a = T::of({2}, {1, 2}, true);
  auto b = T::of({2}, {3, 4}, true);
  ad::Tape<double> tape;
  {
    ad::TapeScope<double> s(tape);
    tape.backward(ad::sum(a));
  }
  EXPECT_EQ(b.grad()[0], 0.0);
  EXPECT_EQ(b.grad()[1], 0.0);
}

TEST(Backward, DetachedTensorGetsNoGradient) {
  auto a = T::of({2}, {1, 2}, true);
  ad::Tape<double> tape;
  T d;
  {
    ad::TapeScope<double> s(tape);
    d = a.detach();
    tape.backward(ad::sum(ad::mul(d, a)));
  }
  EXPECT_FALSE(d.has_grad());
  EXPECT_EQ(a.grad()[1], 2.0);
}

TEST(Backward, NoGradScopeRecordsNothing) {
  auto a = T::of({2}, {1, 2}, true);
  ad::Tape<double> tape;
  ad::TapeScope<double> s(tape);
  {
    ad::NoGradScope<double> off;
    ad::sum(ad::mul(a, a));
  }
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Determinism, ForwardIsBitwiseRepeatable) {
  auto run = [] {
    ad::Rng rng(12);
    auto x = random_tensor({2, 3, 8, 8}, rng, -1, 1, 0, false);
    auto k = random_tensor({4, 3, 4, 4}, rng, -1, 1, 0, false);
    auto y = ad::dropout(ad::leaky_relu(ad::conv2d(x, k, {2, 1}), 0.2), 0.5, true, rng);
    return y.values();
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ad::ParameterList<double> p;
  p.add("w", T::of({2}, {1.0, -2.0}, true));
  p.zero_grad();
  p.at("w").impl()->ensure_grad();
  ad::AdamState<double> st;
  ad::adam_step(p, st);
  EXPECT_EQ(p.at("w")[0], 1.0);
  EXPECT_EQ(p.at("w")[1], -2.0);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  ad::ParameterList<double> p;
  p.add("w", T::of({3}, {0, 0, 0}, true));
  p.at("w").impl()->grad = {0.3, -7.0, 1e-3};
  ad::AdamState<double> st;
  st.options.lr = 0.01;
  ad::adam_step(p, st);
  EXPECT_NEAR(p.at("w")[0], -0.01, 1e-8);
  EXPECT_NEAR(p.at("w")[1], 0.01, 1e-8);
  EXPECT_NEAR(p.at("w")[2], -0.01, 1e-6);
}

TEST(Adam, NaNGradientNamesParameter) {
  ad::ParameterList<double> p;
  p.add("good", T::of({1}, {1}, true));
  p.add("bad.weight", T::of({1}, {1}, true));
  p.at("good").impl()->grad = {1.0};
  p.at("bad.weight").impl()->grad = {std::nan("")};
  ad::AdamState<double> st;
  try {
    ad::adam_step(p, st);
    FAIL();
  } catch (const ad::DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.weight"), std::string::npos);
  }
  EXPECT_EQ(p.at("good")[0], 1.0);
}

TEST(Adam, ScalarDescentConvergesMonotonically) {
  ad::ParameterList<double> p;
  p.add("w", T::of({1}, {0.0}, true));
  ad::AdamState<double> st;
  st.options.lr = 0.1;
  std::vector<double> dist;
  for (int step = 0; step < 50; ++step) {
    ad::Tape<double> tape;
    {
      ad::TapeScope<double> s(tape);
      p.zero_grad();
      auto d = ad::affine(p.at("w"), 1.0, -3.0);
      tape.backward(ad::sum(ad::mul(d, d)));
    }
    ad::adam_step(p, st);
    dist.push_back(std::abs(p.at("w")[0] - 3.0));
  }
  for (std::size_t i = 5; i < dist.size(); ++i) EXPECT_LE(dist[i], dist[i - 1]) << "step " << i;
  EXPECT_LT(dist.back(), dist.front());
}

TEST(Parameters, DuplicateNamesRejected) {
  ad::ParameterList<double> p;
  p.add("a", T::zeros({1}));
  EXPECT_THROW(p.add("a", T::zeros({1})), ad::UsageError);
}

TEST(Rng, SerializationRoundTrip) {
  ad::Rng a(42);
  a();
  auto text = ad::serialize_rng(a);
  auto b = ad::deserialize_rng(text);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
}
