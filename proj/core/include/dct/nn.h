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
#ifndef DCT_NN_H_
#define DCT_NN_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dct/tensor.h"

namespace dct {

enum class LayerKind { kFullyConnected, kRelu, kSigmoid };
enum class LossKind { kBinaryCrossEntropy, kMeanSquaredError };

std::string LayerKindName(LayerKind kind);
std::string LossKindName(LossKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kFullyConnected;
  std::size_t in = 0;   // Input width.
  std::size_t out = 0;  // Output width; equals `in` for activations.
};

/// Ordered layer sequence plus the split positions where compressors attach.
/// A split at position p sits between layer p-1 and layer p, so valid
/// positions are 1..layers.size()-1.
struct LayerGraph {
  std::vector<LayerSpec> layers;
  std::vector<std::size_t> splits;
  LossKind loss = LossKind::kBinaryCrossEntropy;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  // Width of the activation crossing the given split position.
  std::size_t SplitWidth(std::size_t position) const { return layers[position - 1].out; }

  // Throws kInvalidArgument describing the first violated invariant.
  void Validate() const;

  // Builder helpers: FC layers followed by an activation.
  static LayerGraph Mlp(std::size_t input_dim, const std::vector<std::size_t>& widths,
                        LayerKind hidden_activation, LayerKind output_activation,
                        LossKind loss);
};

/// Parameters of one fully connected layer: y = x * weight + bias with
/// weight stored in x out.
struct LayerParams {
  std::size_t layer_id = 0;
  DenseMatrix weight;
  DenseMatrix bias;  // 1 x out
};

struct ModelParams {
  std::vector<LayerParams> layers;

  // Index into `layers` for a graph layer id, or -1.
  int IndexOf(std::size_t layer_id) const;
  std::size_t ParameterCount() const;
  bool SameShape(const ModelParams& other) const;
  friend bool operator==(const ModelParams&, const ModelParams&);
};

bool operator==(const LayerParams& a, const LayerParams& b);

// Every parameter tensor has a stable id: 2*layer_id for the weight and
// 2*layer_id+1 for the bias.
inline std::uint32_t WeightTensorId(std::size_t layer_id) {
  return static_cast<std::uint32_t>(2 * layer_id);
}
inline std::uint32_t BiasTensorId(std::size_t layer_id) {
  return static_cast<std::uint32_t>(2 * layer_id + 1);
}
DenseMatrix& TensorById(ModelParams& params, std::uint32_t tensor_id);
const DenseMatrix& TensorById(const ModelParams& params, std::uint32_t tensor_id);
std::vector<std::uint32_t> TensorIds(const ModelParams& params);

struct Batch {
  DenseMatrix inputs;  // B x d_in
  DenseMatrix labels;  // B x d_out
  std::size_t size() const { return inputs.rows(); }
};

/// Hook invoked at every declared split. Forward sees the activation that
/// leaves the upstream partition and returns what the downstream partition
/// receives; Backward does the same for the gradient travelling upstream.
class SplitTap {
 public:
  virtual ~SplitTap() = default;
  virtual DenseMatrix Forward(std::size_t split_index, const DenseMatrix& activation) = 0;
  virtual DenseMatrix Backward(std::size_t split_index, const DenseMatrix& gradient) = 0;
};

struct ForwardState {
  double loss = 0.0;
  // inputs[l] is what layer l consumed (after any tap); outputs[l] what it
  // produced (before any tap). outputs.back() holds logits when the sigmoid
  // is fused into the BCE loss.
  std::vector<DenseMatrix> inputs;
  std::vector<DenseMatrix> outputs;
  std::uint64_t token = 0;
  std::size_t batch_rows = 0;

  const DenseMatrix& prediction() const { return outputs.back(); }
};

struct BackwardResult {
  ModelParams gradients;
  DenseMatrix input_gradient;
};

/// Feed-forward engine over a fixed LayerGraph. Single stream: one engine per
/// thread.
class Network {
 public:
  explicit Network(LayerGraph graph);

  const LayerGraph& graph() const { return graph_; }

  // Uniform(-sqrt(6/(fan_in+fan_out)), +sqrt(...)) weights, zero biases.
  ModelParams InitParams(std::uint64_t seed) const;
  ModelParams ZeroParams() const;

  ForwardState Forward(const ModelParams& params, const Batch& batch,
                       SplitTap* tap = nullptr);
  BackwardResult Backward(const ModelParams& params, const Batch& batch,
                          const ForwardState& state, SplitTap* tap = nullptr);

  // Loss only, no state retained.
  double Loss(const ModelParams& params, const Batch& batch, SplitTap* tap = nullptr);

  // Fraction of rows whose thresholded prediction matches the label (BCE
  // only; returns NaN for MSE).
  double Accuracy(const ForwardState& state, const Batch& batch) const;

 private:
  void CheckParams(const ModelParams& params) const;
  bool FusedSigmoid() const;

  LayerGraph graph_;
  std::uint64_t next_token_ = 1;
  std::uint64_t last_token_ = 0;
};

void SgdStep(ModelParams& params, const ModelParams& gradients, double lr);

// Numerically stable sigmoid and BCE-with-logits.
double Sigmoid(double z);
double BceWithLogits(double logit, double label);

}  // namespace dct

#endif  // DCT_NN_H_
