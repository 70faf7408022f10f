// Copyright 2026 The DCT Simulator Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dct/codec.h"
#include "dct/error.h"
#include "dct/nn.h"
#include "dct/tensor.h"
#include "oracles.h"

namespace dct {
namespace {

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no dct::Error thrown";
  return ErrorCode::kIo;
}

LayerGraph SingleFc(std::size_t in, std::size_t out, LossKind loss) {
  LayerGraph g;
  g.layers.push_back({LayerKind::kFullyConnected, in, out});
  if (loss == LossKind::kBinaryCrossEntropy) g.layers.push_back({LayerKind::kSigmoid, out, out});
  g.loss = loss;
  return g;
}

ModelParams Params(const Network& net, std::initializer_list<std::initializer_list<double>> w,
                   std::initializer_list<double> b) {
  ModelParams p = net.ZeroParams();
  p.layers[0].weight = DenseMatrix::FromRows(w);
  p.layers[0].bias = DenseMatrix::FromRows({b});
  return p;
}

Batch MakeBatch(std::initializer_list<std::initializer_list<double>> x,
                std::initializer_list<std::initializer_list<double>> y) {
  return {DenseMatrix::FromRows(x), DenseMatrix::FromRows(y)};
}

// Keep-all DCT-MP applied at every split.
class KeepAllMaskTap : public SplitTap {
 public:
  DenseMatrix Forward(std::size_t s, const DenseMatrix& a) override {
    last_[s] = MaskForward(a, 0.0);
    return last_[s].masked.ToDense();
  }
  DenseMatrix Backward(std::size_t s, const DenseMatrix& g) override {
    return MaskBackward(g, last_[s].mask).ToDense();
  }

 private:
  std::map<std::size_t, MaskForwardResult> last_;
};

TEST(DenseMatrixTest, MatMulVariantsAgree) {
  const DenseMatrix a = DenseMatrix::FromRows({{1, 2, 3}, {4, 5, 6}});
  const DenseMatrix b = DenseMatrix::FromRows({{1, 0}, {0, 1}, {2, -1}});
  DenseMatrix ab;
  MatMul(a, b, ab);
  EXPECT_EQ(ab, DenseMatrix::FromRows({{7, -1}, {16, -1}}));

  const DenseMatrix at = DenseMatrix::FromRows({{1, 4}, {2, 5}, {3, 6}});
  DenseMatrix ab2;
  MatMulTransA(at, b, ab2);
  EXPECT_EQ(ab, ab2);

  const DenseMatrix bt = DenseMatrix::FromRows({{1, 0, 2}, {0, 1, -1}});
  DenseMatrix ab3;
  MatMulTransB(a, bt, ab3);
  EXPECT_EQ(ab, ab3);
}

TEST(DenseMatrixTest, NormsAndFiniteness) {
  DenseMatrix m(2, 2, 1.0);
  m(1, 1) = -3.0;
  EXPECT_DOUBLE_EQ(SquaredNorm(m.values()), 12.0);
  EXPECT_DOUBLE_EQ(MaxAbs(m.values()), 3.0);
  EXPECT_TRUE(m.AllFinite());
  m[0] = std::nan("");
  EXPECT_FALSE(m.AllFinite());
  EXPECT_EQ(m.ShapeString(), "2x2");
}

TEST(LayerGraphTest, RejectsBadGraphs) {
  LayerGraph g = LayerGraph::Mlp(4, {3, 1}, LayerKind::kRelu, LayerKind::kSigmoid,
                                 LossKind::kBinaryCrossEntropy);
  EXPECT_NO_THROW(g.Validate());
  g.splits = {0};
  EXPECT_EQ(CodeOf([&] { g.Validate(); }), ErrorCode::kInvalidArgument);
  g.splits = {2, 2};
  EXPECT_EQ(CodeOf([&] { g.Validate(); }), ErrorCode::kInvalidArgument);
  g.splits = {g.layers.size()};
  EXPECT_EQ(CodeOf([&] { g.Validate(); }), ErrorCode::kInvalidArgument);
  g.splits = {2};
  g.layers[2].in = 5;
  EXPECT_EQ(CodeOf([&] { g.Validate(); }), ErrorCode::kInvalidArgument);
}

TEST(ForwardTest, IdentityRegressionHasZeroLoss) {
  Network net(SingleFc(2, 2, LossKind::kMeanSquaredError));
  const ModelParams p = Params(net, {{1, 0}, {0, 1}}, {0, 0});
  EXPECT_EQ(net.Forward(p, MakeBatch({{1, 2}}, {{1, 2}})).loss, 0.0);
}

TEST(ForwardTest, SigmoidBceAtZeroIsLn2) {
  Network net(SingleFc(1, 1, LossKind::kBinaryCrossEntropy));
  const ModelParams p = Params(net, {{2}}, {0});
  const double loss = net.Forward(p, MakeBatch({{0}}, {{1}})).loss;
  EXPECT_NEAR(loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(loss, 0.6931, 1e-4);
}

TEST(ForwardTest, KeepAllMaskHookIsBitIdentical) {
  LayerGraph g = LayerGraph::Mlp(5, {6, 4, 1}, LayerKind::kRelu, LayerKind::kSigmoid,
                                 LossKind::kBinaryCrossEntropy);
  g.splits = {2, 4};
  Network net(g);
  const ModelParams p = net.InitParams(3);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  Batch b{DenseMatrix(7, 5), DenseMatrix(7, 1)};
  for (double& v : b.inputs.values()) v = n(rng);
  for (std::size_t i = 0; i < 7; ++i) b.labels[i] = i % 2;

  const ForwardState plain = net.Forward(p, b);
  const BackwardResult plain_grad = net.Backward(p, b, plain);
  KeepAllMaskTap tap;
  const ForwardState hooked = net.Forward(p, b, &tap);
  const BackwardResult hooked_grad = net.Backward(p, b, hooked, &tap);
  EXPECT_EQ(plain.loss, hooked.loss);
  EXPECT_EQ(plain_grad.gradients, hooked_grad.gradients);
  EXPECT_EQ(plain_grad.input_gradient, hooked_grad.input_gradient);
}

TEST(ForwardTest, ShapeMismatchNamesLayer) {
  Network net(SingleFc(2, 1, LossKind::kMeanSquaredError));
  const ModelParams p = net.ZeroParams();
  try {
    net.Forward(p, MakeBatch({{1, 2, 3}}, {{1}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
  }
  ModelParams bad = p;
  bad.layers[0].weight = DenseMatrix(3, 1);
  EXPECT_EQ(CodeOf([&] { net.Forward(bad, MakeBatch({{1, 2}}, {{1}})); }),
            ErrorCode::kShapeMismatch);
}

TEST(ForwardTest, NonFiniteActivationIsNumericOverflow) {
  Network net(SingleFc(1, 1, LossKind::kMeanSquaredError));
  const ModelParams p = Params(net, {{1e308}}, {0});
  EXPECT_EQ(CodeOf([&] { net.Forward(p, MakeBatch({{1e10}}, {{0}})); }),
            ErrorCode::kNumericOverflow);
}

TEST(BackwardTest, LinearRegressionGradientIsEight) {
  Network net(SingleFc(1, 1, LossKind::kMeanSquaredError));
  const ModelParams p = Params(net, {{1}}, {0});
  const Batch b = MakeBatch({{2}}, {{0}});
  const ForwardState st = net.Forward(p, b);
  const BackwardResult r = net.Backward(p, b, st);
  EXPECT_DOUBLE_EQ(r.gradients.layers[0].weight[0], 8.0);
}

TEST(BackwardTest, ZeroInputGivesZeroWeightGradients) {
  LayerGraph g = LayerGraph::Mlp(3, {4, 2}, LayerKind::kRelu, LayerKind::kFullyConnected,
                                 LossKind::kMeanSquaredError);
  Network net(g);
  ModelParams p = net.InitParams(1);
  for (auto& l : p.layers) l.bias.Fill(0.0);
  const Batch b{DenseMatrix(4, 3), DenseMatrix(4, 2, 1.0)};
  const BackwardResult r = net.Backward(p, b, net.Forward(p, b));
  for (const auto& l : r.gradients.layers) {
    for (double v : l.weight.values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(BackwardTest, StaleStateIsRejected) {
  Network net(SingleFc(1, 1, LossKind::kMeanSquaredError));
  const ModelParams p = Params(net, {{1}}, {0});
  const Batch b = MakeBatch({{2}}, {{0}});
  const ForwardState first = net.Forward(p, b);
  net.Forward(p, b);
  EXPECT_EQ(CodeOf([&] { net.Backward(p, b, first); }), ErrorCode::kStaleForwardState);
  EXPECT_EQ(CodeOf([&] { net.Backward(p, b, ForwardState{}); }), ErrorCode::kStaleForwardState);
  const Batch other = MakeBatch({{2}, {3}}, {{0}, {0}});
  const ForwardState st = net.Forward(p, b);
  EXPECT_EQ(CodeOf([&] { net.Backward(p, other, st); }), ErrorCode::kStaleForwardState);
}

// Central differences on random small networks, both losses.
TEST(BackwardTest, MatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const bool bce = trial % 2 == 0;
    std::uniform_int_distribution<std::size_t> width(1, 16);
    const std::size_t depth = 1 + trial % 3;
    std::vector<std::size_t> widths;
    for (std::size_t i = 0; i + 1 < depth; ++i) widths.push_back(width(rng));
    widths.push_back(bce ? 1 : width(rng));
    const std::size_t in = width(rng);
    LayerGraph g = LayerGraph::Mlp(in, widths, trial % 4 < 2 ? LayerKind::kSigmoid : LayerKind::kRelu,
                                   bce ? LayerKind::kSigmoid : LayerKind::kFullyConnected,
                                   bce ? LossKind::kBinaryCrossEntropy : LossKind::kMeanSquaredError);
    Network net(g);
    ModelParams p = net.InitParams(100 + trial);
    std::normal_distribution<double> n;
    for (auto& l : p.layers) {
      for (double& v : l.bias.values()) v = 0.1 * n(rng);
    }
    Batch b{DenseMatrix(5, in), DenseMatrix(5, widths.back())};
    for (double& v : b.inputs.values()) v = n(rng);
    for (double& v : b.labels.values()) v = bce ? static_cast<double>(rng() % 2) : n(rng);

    const BackwardResult r = net.Backward(p, b, net.Forward(p, b));
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
      for (DenseMatrix* t : {&p.layers[li].weight, &p.layers[li].bias}) {
        std::vector<double> flat(t->values().begin(), t->values().end());
        const auto fd = oracle::CentralDifferences(flat, [&] {
          std::copy(flat.begin(), flat.end(), t->values().begin());
          return net.Loss(p, b);
        });
        std::copy(flat.begin(), flat.end(), t->values().begin());
        const DenseMatrix& g_an = t == &p.layers[li].weight ? r.gradients.layers[li].weight
                                                            : r.gradients.layers[li].bias;
        for (std::size_t i = 0; i < flat.size(); ++i) {
          const double denom = std::max({std::abs(fd[i]), std::abs(g_an[i]), 1e-6});
          EXPECT_LT(std::abs(fd[i] - g_an[i]) / denom, 1e-4)
              << "trial " << trial << " layer " << li << " entry " << i;
        }
      }
    }
  }
}

TEST(InitTest, GlorotBoundsAndDeterminism) {
  Network net(LayerGraph::Mlp(30, {20, 1}, LayerKind::kRelu, LayerKind::kSigmoid,
                              LossKind::kBinaryCrossEntropy));
  const ModelParams a = net.InitParams(9);
  EXPECT_EQ(a, net.InitParams(9));
  EXPECT_FALSE(a == net.InitParams(10));
  const double bound = std::sqrt(6.0 / 50.0);
  for (double v : a.layers[0].weight.values()) EXPECT_LE(std::abs(v), bound);
  for (double v : a.layers[0].bias.values()) EXPECT_EQ(v, 0.0);
}

TEST(SgdStepTest, Arithmetic) {
  Network net(SingleFc(1, 1, LossKind::kMeanSquaredError));
  ModelParams p = Params(net, {{1}}, {0});
  ModelParams g = Params(net, {{8}}, {0});
  SgdStep(p, g, 0.1);
  EXPECT_NEAR(p.layers[0].weight[0], 0.2, 1e-15);
}

TEST(SgdStepTest, ZeroGradientAndZeroRateAreNoOps) {
  Network net(SingleFc(2, 2, LossKind::kMeanSquaredError));
  ModelParams p = net.InitParams(4);
  const ModelParams orig = p;
  SgdStep(p, net.ZeroParams(), 0.5);
  EXPECT_EQ(p, orig);
  ModelParams g = net.InitParams(5);
  SgdStep(p, g, 0.0);
  SgdStep(p, g, 0.0);
  EXPECT_EQ(p, orig);
}

TEST(SgdStepTest, ShapeMismatchAndNegativeRate) {
  Network a(SingleFc(2, 2, LossKind::kMeanSquaredError));
  Network b(SingleFc(3, 2, LossKind::kMeanSquaredError));
  ModelParams p = a.ZeroParams();
  EXPECT_EQ(CodeOf([&] { SgdStep(p, b.ZeroParams(), 0.1); }), ErrorCode::kShapeMismatch);
  EXPECT_EQ(CodeOf([&] { SgdStep(p, a.ZeroParams(), -1.0); }), ErrorCode::kInvalidArgument);
}

TEST(TensorIdTest, WeightAndBiasIds) {
  Network net(LayerGraph::Mlp(3, {4, 1}, LayerKind::kRelu, LayerKind::kSigmoid,
                              LossKind::kBinaryCrossEntropy));
  ModelParams p = net.InitParams(1);
  EXPECT_EQ(TensorIds(p), (std::vector<std::uint32_t>{0, 1, 4, 5}));
  EXPECT_EQ(&TensorById(p, 4), &p.layers[1].weight);
  EXPECT_EQ(CodeOf([&] { TensorById(p, 2); }), ErrorCode::kUnknownLayer);
}

TEST(NumericsTest, StableSigmoidAndBce) {
  EXPECT_EQ(Sigmoid(0.0), 0.5);
  EXPECT_GT(Sigmoid(-800.0), -1.0);
  EXPECT_TRUE(std::isfinite(BceWithLogits(-800.0, 1.0)));
  EXPECT_NEAR(BceWithLogits(-800.0, 1.0), 800.0, 1e-9);
  EXPECT_NEAR(BceWithLogits(3.0, 0.0), 3.0 + std::log1p(std::exp(-3.0)), 1e-14);
}

TEST(DeterminismTest, SameSeedSameTrajectory) {
  LayerGraph g = LayerGraph::Mlp(4, {8, 1}, LayerKind::kRelu, LayerKind::kSigmoid,
                                 LossKind::kBinaryCrossEntropy);
  auto trajectory = [&] {
    Network net(g);
    ModelParams p = net.InitParams(2);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    std::vector<double> losses;
    for (int step = 0; step < 20; ++step) {
      Batch b{DenseMatrix(8, 4), DenseMatrix(8, 1)};
      for (double& v : b.inputs.values()) v = n(rng);
      for (std::size_t i = 0; i < 8; ++i) b.labels[i] = b.inputs(i, 0) > 0 ? 1 : 0;
      const ForwardState st = net.Forward(p, b);
      losses.push_back(st.loss);
      SgdStep(p, net.Backward(p, b, st).gradients, 0.1);
    }
    return losses;
  };
  EXPECT_EQ(trajectory(), trajectory());
}

}  // namespace
}  // namespace dct
