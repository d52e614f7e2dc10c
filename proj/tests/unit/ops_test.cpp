#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "ecgbnn/bintensor.hpp"
#include "ecgbnn/errors.hpp"
#include "ecgbnn/ops.hpp"
#include "support/oracles.hpp"

using namespace ecgbnn;

namespace {

BinaryTensor to_activations(const oracle::Signal& x) {
  BinaryTensor t = BinaryTensor::activations(x.size(), x.empty() ? 0 : x[0].size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    for (std::size_t i = 0; i < x[c].size(); ++i) t.set(c, i, x[c][i] > 0 ? 1 : -1);
  }
  return t;
}

BinaryTensor to_weights(const oracle::Kernel& w) {
  BinaryTensor t = BinaryTensor::weights(w.size(), w[0].size(), w[0][0].size());
  for (std::size_t o = 0; o < w.size(); ++o) {
    for (std::size_t c = 0; c < w[o].size(); ++c) {
      for (std::size_t k = 0; k < w[o][c].size(); ++k) t.set(o, c, k, w[o][c][k] > 0 ? 1 : -1);
    }
  }
  return t;
}

oracle::Signal random_pm1(oracle::Gen& g, std::size_t c, std::size_t l) {
  oracle::Signal s(c, std::vector<double>(l));
  for (auto& row : s) {
    for (double& v : row) v = g.pm1();
  }
  return s;
}

oracle::Kernel random_kernel(oracle::Gen& g, std::size_t o, std::size_t c, std::size_t k) {
  oracle::Kernel w(o, oracle::Signal(c, std::vector<double>(k)));
  for (auto& plane : w) {
    for (auto& row : plane) {
      for (double& v : row) v = g.pm1();
    }
  }
  return w;
}

}  // namespace

TEST(ConvLength, FormulaAndEdges) {
  EXPECT_EQ(conv_output_length(3600, 7, 2, 5), 1802U);
  EXPECT_EQ(conv_output_length(7, 7, 1, 0), 1U);
  EXPECT_EQ(conv_output_length(1, 7, 1, 3), 1U);
  EXPECT_THROW(conv_output_length(1, 7, 1, 2), EmptyOutputError);
  EXPECT_THROW(conv_output_length(10, 0, 1, 0), InvalidValueError);
  EXPECT_THROW(conv_output_length(10, 3, 0, 0), InvalidValueError);
}

TEST(PoolLength, FormulaAndEdges) {
  EXPECT_EQ(pool_output_length(1802, 7, 2), 898U);
  EXPECT_EQ(pool_output_length(7, 7, 2), 1U);
  EXPECT_THROW(pool_output_length(6, 7, 2), EmptyOutputError);
  EXPECT_THROW(pool_output_length(6, 0, 2), InvalidValueError);
}

TEST(BinaryConv, HandComputedExample) {
  // Padded input [+1, +1, -1, +1, +1] against w = [+1, +1, -1].
  const oracle::Signal x = {{1, -1, 1}};
  const oracle::Kernel w = {{{1, 1, -1}}};
  const IntFeatureMap y = binary_conv1d(to_activations(x), to_weights(w), {3, 1, 1, 1.0F});
  ASSERT_EQ(y.length, 3U);
  EXPECT_EQ(y.at(0, 0), 3);
  EXPECT_EQ(y.at(0, 1), -1);
  EXPECT_EQ(y.at(0, 2), -1);
}

TEST(BinaryConvProperty, MatchesDefinition) {
  oracle::Gen g(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t cin = g.index(1, 9);
    const std::size_t cout = g.index(1, 5);
    const std::size_t taps = g.index(1, 9);
    const std::size_t stride = g.index(1, 3);
    const std::size_t padding = g.index(0, 6);
    const std::size_t len = g.index(taps > 2 * padding ? taps - 2 * padding : 1, 80);
    const double pad = g.pm1();
    const oracle::Signal x = random_pm1(g, cin, len);
    const oracle::Kernel w = random_kernel(g, cout, cin, taps);
    const oracle::Signal want = oracle::conv1d(x, w, stride, padding, pad);
    const IntFeatureMap got = binary_conv1d(to_activations(x), to_weights(w),
                                            {taps, stride, padding, static_cast<float>(pad)});
    ASSERT_EQ(got.channels, cout);
    ASSERT_EQ(got.length, want[0].size());
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t t = 0; t < got.length; ++t) {
        ASSERT_EQ(got.at(o, t), static_cast<std::int32_t>(want[o][t]))
            << "trial " << trial << " o=" << o << " t=" << t;
      }
    }
  }
}

TEST(BinaryConv, RejectsMismatchAndBadPad) {
  const BinaryTensor x = BinaryTensor::activations(2, 10);
  EXPECT_THROW(binary_conv1d(x, BinaryTensor::weights(1, 3, 3), {3, 1, 0, 1.0F}), DimensionError);
  EXPECT_THROW(binary_conv1d(x, BinaryTensor::weights(1, 2, 3), {3, 1, 1, 0.5F}),
               InvalidValueError);
}

TEST(RealInputConvProperty, MatchesDefinition) {
  oracle::Gen g(22);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t taps = g.index(1, 9);
    const std::size_t stride = g.index(1, 3);
    const std::size_t padding = g.index(0, 5);
    const std::size_t len = g.index(taps, 60);
    const double pad = g.uniform(-2.0, 2.0);
    RealFeatureMap x(1, len);
    oracle::Signal xs(1, std::vector<double>(len));
    for (std::size_t i = 0; i < len; ++i) {
      x.at(0, i) = static_cast<float>(g.normal());
      xs[0][i] = x.at(0, i);
    }
    const oracle::Kernel w = random_kernel(g, 3, 1, taps);
    const oracle::Signal want = oracle::conv1d(xs, w, stride, padding, static_cast<float>(pad));
    const RealFeatureMap got =
        real_input_conv1d(x, to_weights(w), {taps, stride, padding, static_cast<float>(pad)});
    for (std::size_t o = 0; o < 3; ++o) {
      for (std::size_t t = 0; t < got.length; ++t) {
        EXPECT_NEAR(got.at(o, t), want[o][t], 1e-4);
      }
    }
  }
}

TEST(RealInputConv, RequiresSingleChannel) {
  EXPECT_THROW(real_input_conv1d(RealFeatureMap(2, 10), BinaryTensor::weights(1, 2, 3),
                                 {3, 1, 0, 1.0F}),
               DimensionError);
}

TEST(MaxPool, MatchesOracle) {
  oracle::Gen g(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t size = g.index(1, 7);
    const std::size_t stride = g.index(1, 4);
    const std::size_t len = g.index(size, 50);
    IntFeatureMap x(2, len);
    oracle::Signal xs(2, std::vector<double>(len));
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < len; ++i) {
        x.at(c, i) = static_cast<std::int32_t>(g.integer(-50, 50));
        xs[c][i] = x.at(c, i);
      }
    }
    const IntFeatureMap got = maxpool1d(x, size, stride);
    const oracle::Signal want = oracle::maxpool(xs, size, stride);
    for (std::size_t c = 0; c < 2; ++c) {
      ASSERT_EQ(got.length, want[c].size());
      for (std::size_t t = 0; t < got.length; ++t) EXPECT_EQ(got.at(c, t), want[c][t]);
    }
  }
}

TEST(MaxPool, TooShortThrows) {
  EXPECT_THROW(maxpool1d(IntFeatureMap(1, 3), 7, 2), EmptyOutputError);
}

TEST(Activations, SignOfZeroIsPlusOne) {
  EXPECT_EQ(sign(0), 1);
  EXPECT_EQ(sign(0.0), 1);
  EXPECT_EQ(sign(-0.0), 1);
  EXPECT_EQ(sign(-1e-30), -1);
}

TEST(Activations, PreluAndBatchnorm) {
  EXPECT_DOUBLE_EQ(prelu(2.0, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(prelu(-2.0, 0.25), -0.5);
  EXPECT_DOUBLE_EQ(prelu(0.0, 0.25), 0.0);
  EXPECT_NEAR(batchnorm_infer(3.0, 1.0, 4.0, 2.0, 0.5, 0.0), 2.5, 1e-12);
}

TEST(Activations, FusedAffineBranches) {
  EXPECT_DOUBLE_EQ(fused_affine(4, 0.5, 1.0, 0.25), 3.0);
  EXPECT_DOUBLE_EQ(fused_affine(-4, 0.5, 1.0, 0.25), 0.5);
  EXPECT_DOUBLE_EQ(fused_affine(0, 0.5, 1.0, 0.25), 1.0);
}

TEST(Gsp, SumsWithoutDivision) {
  IntFeatureMap x(2, 3);
  x.values = {1, 2, 3, -4, -5, 6};
  const std::vector<std::int64_t> s = gsp(x);
  EXPECT_EQ(s, (std::vector<std::int64_t>{6, -3}));
  EXPECT_THROW(gsp(IntFeatureMap(2, 0)), EmptyOutputError);
}

TEST(ArgmaxHead, LowestIndexWinsTies) {
  EXPECT_EQ(argmax_head(std::vector<int>{3, 7, 7, 1}), 1U);
  EXPECT_EQ(argmax_head(std::vector<double>{-1.0}), 0U);
  EXPECT_EQ(argmax_head(std::vector<double>{2.0, 2.0}), 0U);
  EXPECT_THROW(argmax_head(std::vector<int>{}), DimensionError);
}
