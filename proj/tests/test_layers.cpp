#include <gtest/gtest.h>

#include <numeric>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "pilotstack/error.hpp"
#include "pilotstack/nn/gemm.hpp"
#include "pilotstack/nn/layers.hpp"

using namespace pilot;
using namespace pilot::nn;
using DT = BasicTensor<double>;

TEST(Conv, OneByOneIdentityKernel) {
  const Tensor in({2, 3, 1}, std::vector<float>{1, 2, 3, 4, 5, 6});
  const Tensor out = conv2d_forward(in, Tensor({1, 1, 1, 1}, 1.0f), Tensor({1}), 1);
  EXPECT_EQ(out.shape(), (Shape{2, 3, 1}));
  EXPECT_EQ(out.storage(), in.storage());
}

TEST(Conv, AllOnesHandSum) {
  const Tensor out = conv2d_forward(Tensor({3, 3, 1}, 1.0f), Tensor({2, 2, 1, 1}, 1.0f), Tensor({1}), 1);
  EXPECT_EQ(out.shape(), (Shape{2, 2, 1}));
  for (float v : out.values()) EXPECT_EQ(v, 4.0f);
}

TEST(Conv, OutputShapeOfFirstLayer) {
  const Tensor out = conv2d_forward(Tensor({120, 160, 3}), Tensor({5, 5, 3, 24}), Tensor({24}), 2);
  EXPECT_EQ(out.shape(), (Shape{58, 78, 24}));
}

TEST(Conv, ShapeErrors) {
  EXPECT_THROW(conv2d_forward(Tensor({3, 3, 1}), Tensor({4, 4, 1, 1}), Tensor({1}), 1), ValidationError);
  EXPECT_THROW(conv2d_forward(Tensor({3, 3, 2}), Tensor({2, 2, 1, 1}), Tensor({1}), 1), ValidationError);
  EXPECT_THROW(conv2d_forward(Tensor({3, 3, 1}), Tensor({2, 2, 1, 2}), Tensor({1}), 1), ValidationError);
  EXPECT_THROW(conv2d_forward(Tensor({3, 3, 1}), Tensor({2, 2, 1, 1}), Tensor({1}), 0), ValidationError);
}

TEST(Conv, MatchesDirectLoopOnRandomShapes) {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t kh = 1 + rng.below(5), kw = 1 + rng.below(5), stride = 1 + rng.below(3);
    const std::size_t h = kh + rng.below(12), w = kw + rng.below(12);
    const std::size_t c = 1 + rng.below(6), f = 1 + rng.below(8);
    const auto x = oracle::random_vector(rng, h * w * c);
    const auto k = oracle::random_vector(rng, kh * kw * c * f);
    const auto b = oracle::random_vector(rng, f);
    const auto expect = oracle::conv2d(x, h, w, c, k, kh, kw, f, b, stride);
    const DT got = conv2d_forward(DT({h, w, c}, x), DT({kh, kw, c, f}, k), DT({f}, b), stride);
    ASSERT_EQ(got.size(), expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) ASSERT_NEAR(got[i], expect[i], 1e-6) << "trial " << trial;
  }
}

TEST(Conv, BackwardTrivialCases) {
  const auto g = conv2d_backward(Tensor({2, 2, 3}), Tensor({3, 3, 2}, 0.7f), Tensor({2, 2, 2, 3}, 0.3f), 1);
  for (float v : g.input.values()) EXPECT_EQ(v, 0.0f);
  for (float v : g.kernel.values()) EXPECT_EQ(v, 0.0f);
  for (float v : g.bias.values()) EXPECT_EQ(v, 0.0f);

  const auto s = conv2d_backward(Tensor({1, 1, 1}, 2.0f), Tensor({1, 1, 1}, 3.0f), Tensor({1, 1, 1, 1}, 5.0f), 1);
  EXPECT_EQ(s.kernel[0], 6.0f);
  EXPECT_EQ(s.input[0], 10.0f);
  EXPECT_EQ(s.bias[0], 2.0f);
}

TEST(GradCheck, ConvSpecifiedInstance) {
  // 6x7x2 input, 3x3 kernel, stride 2.
  Rng rng(99);
  const auto x = oracle::random_vector(rng, 6 * 7 * 2);
  const auto k = oracle::random_vector(rng, 3 * 3 * 2 * 3);
  const auto b = oracle::random_vector(rng, 3);
  const auto r = oracle::random_vector(rng, 2 * 3 * 3);
  auto run = [&](const std::vector<double>& xi, const std::vector<double>& ki) {
    return gradcheck::dot(conv2d_forward(DT({6, 7, 2}, xi), DT({3, 3, 2, 3}, ki), DT({3}, b), 2), r);
  };
  const auto g = conv2d_backward(DT({2, 3, 3}, r), DT({6, 7, 2}, x), DT({3, 3, 2, 3}, k), 2);
  EXPECT_LT(oracle::max_relative_error(
                g.input.storage(), oracle::central_difference([&](const auto& v) { return run(v, k); }, x, 1e-3)),
            1e-4);
  EXPECT_LT(oracle::max_relative_error(
                g.kernel.storage(), oracle::central_difference([&](const auto& v) { return run(x, v); }, k, 1e-3)),
            1e-4);
}

TEST(GradCheck, ConvRandomInstances) {
  for (std::uint64_t s = 0; s < 25; ++s) EXPECT_LT(gradcheck::conv_instance(1000 + s), 1e-4) << "seed " << s;
}

TEST(GradCheck, DenseRandomInstances) {
  for (std::uint64_t s = 0; s < 25; ++s) EXPECT_LT(gradcheck::dense_instance(2000 + s), 1e-4) << "seed " << s;
}

TEST(GradCheck, ReluRandomInstances) {
  for (std::uint64_t s = 0; s < 25; ++s) EXPECT_LT(gradcheck::relu_instance(3000 + s), 1e-4) << "seed " << s;
}

TEST(GradCheck, FlattenRandomInstances) {
  for (std::uint64_t s = 0; s < 25; ++s) EXPECT_LT(gradcheck::flatten_instance(4000 + s), 1e-4) << "seed " << s;
}

TEST(GradCheck, DropoutInferRandomInstances) {
  for (std::uint64_t s = 0; s < 25; ++s)
    EXPECT_LT(gradcheck::dropout_infer_instance(5000 + s), 1e-4) << "seed " << s;
}

TEST(GradCheck, DualHeadLossRandomInstances) {
  for (std::uint64_t s = 0; s < 25; ++s) EXPECT_LT(gradcheck::loss_instance(6000 + s), 1e-6) << "seed " << s;
}

TEST(GradCheck, ComposedModel) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto r = gradcheck::model_instance(7000 + s);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << s;
    EXPECT_GT(r.checked, 9 * (r.checked + r.skipped) / 10) << "seed " << s;
  }
}

TEST(GradCheck, ComposedModelWithFixedDropoutMask) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto r = gradcheck::model_instance(8000 + s, Mode::Train);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << s;
    EXPECT_GT(r.checked, 0u);
  }
}

TEST(Dense, IdentityAndErrors) {
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0f;
  const Tensor x({2, 3}, std::vector<float>{1, -2, 3, 4, 5, -6});
  EXPECT_EQ(dense_forward(x, eye, Tensor({3})).storage(), x.storage());
  EXPECT_THROW(dense_forward(x, Tensor({2, 3}), Tensor({3})), ValidationError);
  EXPECT_THROW(dense_forward(x, eye, Tensor({2})), ValidationError);
}

TEST(Relu, ForwardAndBackward) {
  const Tensor x({3}, std::vector<float>{-1, 0, 2});
  EXPECT_EQ(relu_forward(x).storage(), (std::vector<float>{0, 0, 2}));
  const Tensor g = relu_backward(Tensor({3}, std::vector<float>{5, 6, 7}), x);
  EXPECT_EQ(g.storage(), (std::vector<float>{0, 0, 7}));
}

TEST(Flatten, ShapeOnly) {
  Tensor x({2, 3, 4, 5});
  std::iota(x.storage().begin(), x.storage().end(), 0.0f);
  const Tensor f = flatten_forward(x);
  EXPECT_EQ(f.shape(), (Shape{2, 60}));
  EXPECT_EQ(f.storage(), x.storage());
  EXPECT_EQ(flatten_backward(f, x.shape()), x);
}

TEST(Dropout, RateZeroAndInferAreIdentity) {
  Rng rng(1);
  Tensor x({4, 5});
  std::iota(x.storage().begin(), x.storage().end(), 1.0f);
  const auto train = dropout_forward(x, 0.0, Mode::Train, rng);
  EXPECT_EQ(train.output, x);
  for (auto m : train.mask) EXPECT_EQ(m, 1);
  const auto infer = dropout_forward(x, 0.7, Mode::Infer, rng);
  EXPECT_EQ(infer.output, x);
  EXPECT_THROW(dropout_forward(x, 1.0, Mode::Train, rng), ValidationError);
  EXPECT_THROW(dropout_forward(x, -0.1, Mode::Train, rng), ValidationError);
}

TEST(Dropout, InvertedScalingStatistics) {
  Rng rng(12345);
  const Tensor x({100000}, 1.0f);
  const auto r = dropout_forward(x, 0.5, Mode::Train, rng);
  const double kept = std::accumulate(r.mask.begin(), r.mask.end(), 0.0) / 1e5;
  EXPECT_GE(kept, 0.49);
  EXPECT_LE(kept, 0.51);
  double mean = 0.0;
  for (float v : r.output.values()) {
    EXPECT_TRUE(v == 0.0f || v == 2.0f);
    mean += v;
  }
  EXPECT_NEAR(mean / 1e5, 1.0, 0.02);
}

TEST(Dropout, SameSeedSameMask) {
  Rng a(5);
  Rng b(5);
  const Tensor x({1000}, 1.0f);
  EXPECT_EQ(dropout_forward(x, 0.3, Mode::Train, a).mask, dropout_forward(x, 0.3, Mode::Train, b).mask);
}

TEST(Loss, HandValues) {
  const Tensor one({1, 1}, 1.0f);
  const Tensor zero({1, 1});
  auto l = mse_dual_head_loss(one, zero, zero, zero);
  EXPECT_DOUBLE_EQ(l.loss, 0.5);
  l = mse_dual_head_loss(one, one, one, one);
  EXPECT_EQ(l.loss, 0.0);
  EXPECT_EQ(l.grad_steering[0], 0.0f);
  EXPECT_EQ(l.grad_throttle[0], 0.0f);
  EXPECT_THROW(mse_dual_head_loss(Tensor({2, 1}), zero, zero, zero), ValidationError);
}

TEST(Loss, NonNegativeAndZeroOnlyAtExactFit) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const std::size_t b = 1 + rng.below(5);
    const auto p = oracle::random_vector(rng, b);
    auto t = oracle::random_vector(rng, b);
    const auto l = mse_dual_head_loss(DT({b, 1}, p), DT({b, 1}, p), DT({b, 1}, t), DT({b, 1}, t));
    EXPECT_GT(l.loss, 0.0);
    EXPECT_EQ(mse_dual_head_loss(DT({b, 1}, t), DT({b, 1}, t), DT({b, 1}, t), DT({b, 1}, t)).loss, 0.0);
  }
}

TEST(Gemm, MatchesReferenceOnRandomShapesAndLayouts) {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 1 + rng.below(70), n = 1 + rng.below(90), k = 1 + rng.below(300);
    std::vector<float> a(m * k), b(k * n), c(m * n), ref(m * n);
    for (auto& v : a) v = static_cast<float>(rng.uniform(-1, 1));
    for (auto& v : b) v = static_cast<float>(rng.uniform(-1, 1));
    for (auto& v : c) v = static_cast<float>(rng.uniform(-1, 1));
    ref = c;
    const bool ta = rng.below(2), tb = rng.below(2), acc = rng.below(2);
    // A transposed view reads the same values stored column-major.
    std::vector<float> a_store = a, b_store = b;
    MatrixRef<const float> av = row_major<const float>(a_store.data(), k);
    MatrixRef<const float> bv = row_major<const float>(b_store.data(), n);
    if (ta) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) a_store[j * m + i] = a[i * k + j];
      av = transposed(row_major<const float>(a_store.data(), m));
    }
    if (tb) {
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < n; ++j) b_store[j * k + i] = b[i * n + j];
      bv = transposed(row_major<const float>(b_store.data(), k));
    }
    gemm<float>(m, n, k, av, bv, row_major(c.data(), n), acc);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = acc ? ref[i * n + j] : 0.0;
        for (std::size_t p = 0; p < k; ++p) s += static_cast<double>(a[i * k + p]) * b[p * n + j];
        ASSERT_NEAR(c[i * n + j], s, 1e-4 * (1.0 + std::sqrt(static_cast<double>(k)))) << "trial " << trial;
      }
    }
  }
}

TEST(Gemm, DoubleIsTight) {
  Rng rng(78);
  const std::size_t m = 37, n = 41, k = 129;
  const auto a = oracle::random_vector(rng, m * k);
  const auto b = oracle::random_vector(rng, k * n);
  std::vector<double> c(m * n), ref(m * n);
  gemm<double>(m, n, k, row_major(a.data(), k), row_major(b.data(), n), row_major(c.data(), n), false);
  gemm_reference<double>(m, n, k, row_major(a.data(), k), row_major(b.data(), n), row_major(ref.data(), n), false);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], ref[i], 1e-12);
}

TEST(Gemm, Deterministic) {
  Rng rng(79);
  const std::size_t m = 100, n = 64, k = 500;
  std::vector<float> a(m * k), b(k * n), c1(m * n), c2(m * n);
  for (auto& v : a) v = static_cast<float>(rng.uniform(-1, 1));
  for (auto& v : b) v = static_cast<float>(rng.uniform(-1, 1));
  gemm<float>(m, n, k, row_major<const float>(a.data(), k), row_major<const float>(b.data(), n),
              row_major(c1.data(), n), false);
  gemm<float>(m, n, k, row_major<const float>(a.data(), k), row_major<const float>(b.data(), n),
              row_major(c2.data(), n), false);
  EXPECT_EQ(c1, c2);
}
