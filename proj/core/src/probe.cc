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
#include "dct/probe.h"

#include <cmath>
#include <random>

#include "dct/codec.h"
#include "dct/error.h"

namespace dct {

namespace {

// Masks the split activation per row (dynamic) or with one global threshold
// (static) and reuses that mask on the way back.
class ThresholdTap final : public SplitTap {
 public:
  ThresholdTap(double eta, const double* fixed_tau) : eta_(eta), fixed_tau_(fixed_tau) {}

  DenseMatrix Forward(std::size_t, const DenseMatrix& a) override {
    if (fixed_tau_ == nullptr) {
      MaskForwardResult r = MaskForward(a, eta_);
      mask_ = r.mask.bits;
      thresholds_ = r.mask.thresholds;
    } else {
      mask_.assign(a.size(), 0);
      for (std::size_t i = 0; i < a.size(); ++i) mask_[i] = std::abs(a[i]) >= *fixed_tau_;
    }
    return Apply(a);
  }

  DenseMatrix Backward(std::size_t, const DenseMatrix& g) override { return Apply(g); }

  const std::vector<double>& thresholds() const { return thresholds_; }

 private:
  DenseMatrix Apply(const DenseMatrix& m) const {
    DenseMatrix out = m;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!mask_[i]) out[i] = 0.0;
    }
    return out;
  }

  double eta_;
  const double* fixed_tau_;
  std::vector<std::uint8_t> mask_;
  std::vector<double> thresholds_;
};

// Captures the activation crossing the split.
class CaptureTap final : public SplitTap {
 public:
  DenseMatrix Forward(std::size_t, const DenseMatrix& a) override {
    captured = a;
    return a;
  }
  DenseMatrix Backward(std::size_t, const DenseMatrix& g) override { return g; }
  DenseMatrix captured;
};

std::vector<double> MaskedColumnMean(const DenseMatrix& a,
                                     const std::vector<double>& row_tau) {
  std::vector<double> mean(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (std::abs(a(r, c)) >= row_tau[r]) mean[c] += a(r, c);
    }
  }
  for (double& m : mean) m /= static_cast<double>(a.rows());
  return mean;
}

}  // namespace

ProbeReport TheoremProbe(const LayerGraph& graph, const ModelParams& params, const Dataset& data,
                         const ProbeOptions& options) {
  graph.Validate();
  if (graph.splits.size() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "theorem probe needs exactly one split, got " +
                                                 std::to_string(graph.splits.size()));
  }
  if (data.size() == 0) throw Error(ErrorCode::kEmptyInput, "probe dataset is empty");
  if (data.size() > options.max_samples) {
    throw Error(ErrorCode::kDatasetTooLarge,
                "probe enumerates every sample: " + std::to_string(data.size()) +
                    " exceeds the cap of " + std::to_string(options.max_samples));
  }
  CodecConfig{CodecKind::kDctMp, options.eta}.Validate();

  Network net(graph);
  const Batch all = data.All();
  ProbeReport rep;
  rep.samples = data.size();

  CaptureTap capture;
  net.Loss(params, all, &capture);
  const DenseMatrix& act = capture.captured;

  // Dynamic network: per-sample thresholds. The loss is a batch mean, so the
  // full-batch gradient is the mean of the per-sample gradients.
  ThresholdTap dynamic(options.eta, nullptr);
  ForwardState fs = net.Forward(params, all, &dynamic);
  rep.lhs = net.Backward(params, all, fs, &dynamic).gradients;
  rep.thresholds = dynamic.thresholds();

  double sum = 0.0;
  for (double t : rep.thresholds) sum += t;
  rep.mean_threshold = sum / static_cast<double>(rep.thresholds.size());

  ThresholdTap fixed(options.eta, &rep.mean_threshold);
  fs = net.Forward(params, all, &fixed);
  rep.rhs = net.Backward(params, all, fs, &fixed).gradients;

  rep.dynamic_mean = MaskedColumnMean(act, rep.thresholds);
  rep.static_mean =
      MaskedColumnMean(act, std::vector<double>(act.rows(), rep.mean_threshold));
  double gap = 0.0;
  for (std::size_t c = 0; c < act.cols(); ++c) {
    const double d = rep.dynamic_mean[c] - rep.static_mean[c];
    gap += d * d;
  }
  rep.assumption_residual = std::sqrt(gap);

  const std::size_t split = graph.splits.front();
  double down = 0.0;
  double up = 0.0;
  for (std::size_t i = 0; i < rep.lhs.layers.size(); ++i) {
    const LayerParams& a = rep.lhs.layers[i];
    const LayerParams& b = rep.rhs.layers[i];
    double acc = 0.0;
    for (std::size_t j = 0; j < a.weight.size(); ++j) {
      acc += (a.weight[j] - b.weight[j]) * (a.weight[j] - b.weight[j]);
    }
    for (std::size_t j = 0; j < a.bias.size(); ++j) {
      acc += (a.bias[j] - b.bias[j]) * (a.bias[j] - b.bias[j]);
    }
    (a.layer_id >= split ? down : up) += acc;
  }
  rep.discrepancy = std::sqrt(down);
  rep.upstream_discrepancy = std::sqrt(up);
  return rep;
}

namespace {

constexpr std::size_t kProbeWidth = 6;

LayerGraph ProbeGraph() {
  LayerGraph g;
  g.layers = {{LayerKind::kFullyConnected, kProbeWidth, kProbeWidth},
              {LayerKind::kFullyConnected, kProbeWidth, 4},
              {LayerKind::kSigmoid, 4, 4},
              {LayerKind::kFullyConnected, 4, 1},
              {LayerKind::kSigmoid, 1, 1}};
  g.splits = {1};
  g.loss = LossKind::kBinaryCrossEntropy;
  return g;
}

ModelParams ProbeParams(const LayerGraph& g, std::uint64_t seed) {
  ModelParams p = Network(g).InitParams(seed);
  // First partition is the identity so the split sees the raw inputs.
  DenseMatrix& w = p.layers[0].weight;
  w.Fill(0.0);
  for (std::size_t i = 0; i < kProbeWidth; ++i) w(i, i) = 1.0;
  return p;
}

// Three large coordinates that every rule keeps, three near-zero ones whose
// fate depends on the threshold rule.
constexpr double kBase[kProbeWidth] = {0.0, 0.0, 0.0, 1.5, -2.0, 3.0};

}  // namespace

ProbeInstance PerturbationInstance(double epsilon, std::uint64_t seed) {
  constexpr std::size_t kPairs = 8;
  ProbeInstance inst;
  inst.graph = ProbeGraph();
  inst.params = ProbeParams(inst.graph, seed);
  inst.data.x = DenseMatrix(2 * kPairs, kProbeWidth);
  inst.data.y = DenseMatrix(2 * kPairs, 1);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> mag(0.2, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t k = 0; k < kPairs; ++k) {
    const double label = coin(rng) ? 1.0 : 0.0;
    for (std::size_t c = 0; c < kProbeWidth; ++c) {
      double p = 0.0;
      if (kBase[c] == 0.0) p = (coin(rng) ? 1.0 : -1.0) * mag(rng);
      inst.data.x(2 * k, c) = kBase[c] + epsilon * p;
      inst.data.x(2 * k + 1, c) = kBase[c] - epsilon * p;
    }
    inst.data.y(2 * k, 0) = label;
    inst.data.y(2 * k + 1, 0) = label;
  }
  return inst;
}

ProbeInstance DegenerateInstance(std::uint64_t seed) {
  constexpr std::size_t kRows = 8;
  ProbeInstance inst;
  inst.graph = ProbeGraph();
  inst.params = ProbeParams(inst.graph, seed);
  inst.data.x = DenseMatrix(kRows, kProbeWidth);
  inst.data.y = DenseMatrix(kRows, 1);
  constexpr double kRow[kProbeWidth] = {0.25, -0.5, 0.75, 1.5, -2.0, 3.0};
  for (std::size_t r = 0; r < kRows; ++r) {
    for (std::size_t c = 0; c < kProbeWidth; ++c) inst.data.x(r, c) = kRow[c];
    inst.data.y(r, 0) = static_cast<double>(r % 2);
  }
  return inst;
}

}  // namespace dct
