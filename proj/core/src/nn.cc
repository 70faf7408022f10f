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
#include "dct/nn.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dct/error.h"

namespace dct {

std::string LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kFullyConnected: return "fc";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSigmoid: return "sigmoid";
  }
  return "?";
}

std::string LossKindName(LossKind kind) {
  return kind == LossKind::kBinaryCrossEntropy ? "bce" : "mse";
}

void LayerGraph::Validate() const {
  if (layers.empty()) throw Error(ErrorCode::kInvalidArgument, "layer graph is empty");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.in == 0 || l.out == 0) {
      throw Error(ErrorCode::kInvalidArgument, "layer " + std::to_string(i) + " has zero width");
    }
    if (l.kind != LayerKind::kFullyConnected && l.in != l.out) {
      throw Error(ErrorCode::kInvalidArgument,
                  "activation layer " + std::to_string(i) + " must preserve width");
    }
    if (i > 0 && layers[i - 1].out != l.in) {
      throw Error(ErrorCode::kInvalidArgument,
                  "layer " + std::to_string(i) + " input " + std::to_string(l.in) +
                      " does not match previous output " + std::to_string(layers[i - 1].out));
    }
  }
  for (std::size_t s = 0; s < splits.size(); ++s) {
    if (splits[s] == 0 || splits[s] >= layers.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "split position " + std::to_string(splits[s]) + " is not interior");
    }
    if (s > 0 && splits[s] <= splits[s - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "split positions must be strictly increasing");
    }
  }
  if (loss == LossKind::kBinaryCrossEntropy && layers.back().kind != LayerKind::kSigmoid) {
    throw Error(ErrorCode::kInvalidArgument, "bce loss requires a final sigmoid layer");
  }
}

LayerGraph LayerGraph::Mlp(std::size_t input_dim, const std::vector<std::size_t>& widths,
                           LayerKind hidden_activation, LayerKind output_activation,
                           LossKind loss) {
  LayerGraph g;
  g.loss = loss;
  std::size_t in = input_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    g.layers.push_back({LayerKind::kFullyConnected, in, widths[i]});
    const bool last = i + 1 == widths.size();
    const LayerKind act = last ? output_activation : hidden_activation;
    if (act != LayerKind::kFullyConnected) g.layers.push_back({act, widths[i], widths[i]});
    in = widths[i];
  }
  return g;
}

int ModelParams::IndexOf(std::size_t layer_id) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].layer_id == layer_id) return static_cast<int>(i);
  }
  return -1;
}

std::size_t ModelParams::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

bool ModelParams::SameShape(const ModelParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].layer_id != other.layers[i].layer_id ||
        !layers[i].weight.SameShape(other.layers[i].weight) ||
        !layers[i].bias.SameShape(other.layers[i].bias)) {
      return false;
    }
  }
  return true;
}

bool operator==(const LayerParams& a, const LayerParams& b) {
  return a.layer_id == b.layer_id && a.weight == b.weight && a.bias == b.bias;
}

bool operator==(const ModelParams& a, const ModelParams& b) { return a.layers == b.layers; }

DenseMatrix& TensorById(ModelParams& params, std::uint32_t tensor_id) {
  const int idx = params.IndexOf(tensor_id / 2);
  if (idx < 0) {
    throw Error(ErrorCode::kUnknownLayer, "no parameter tensor " + std::to_string(tensor_id));
  }
  auto& layer = params.layers[static_cast<std::size_t>(idx)];
  return tensor_id % 2 == 0 ? layer.weight : layer.bias;
}

const DenseMatrix& TensorById(const ModelParams& params, std::uint32_t tensor_id) {
  return TensorById(const_cast<ModelParams&>(params), tensor_id);
}

std::vector<std::uint32_t> TensorIds(const ModelParams& params) {
  std::vector<std::uint32_t> ids;
  for (const auto& l : params.layers) {
    ids.push_back(WeightTensorId(l.layer_id));
    ids.push_back(BiasTensorId(l.layer_id));
  }
  return ids;
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double BceWithLogits(double logit, double label) {
  // max(z,0) - z*y + log(1 + exp(-|z|))
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

Network::Network(LayerGraph graph) : graph_(std::move(graph)) { graph_.Validate(); }

bool Network::FusedSigmoid() const {
  return graph_.loss == LossKind::kBinaryCrossEntropy &&
         graph_.layers.back().kind == LayerKind::kSigmoid;
}

ModelParams Network::InitParams(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  ModelParams p;
  for (std::size_t i = 0; i < graph_.layers.size(); ++i) {
    const LayerSpec& l = graph_.layers[i];
    if (l.kind != LayerKind::kFullyConnected) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    LayerParams lp{i, DenseMatrix(l.in, l.out), DenseMatrix(1, l.out)};
    for (double& w : lp.weight.values()) w = dist(rng);
    p.layers.push_back(std::move(lp));
  }
  return p;
}

ModelParams Network::ZeroParams() const {
  ModelParams p;
  for (std::size_t i = 0; i < graph_.layers.size(); ++i) {
    const LayerSpec& l = graph_.layers[i];
    if (l.kind != LayerKind::kFullyConnected) continue;
    p.layers.push_back({i, DenseMatrix(l.in, l.out), DenseMatrix(1, l.out)});
  }
  return p;
}

void Network::CheckParams(const ModelParams& params) const {
  std::size_t fc = 0;
  for (std::size_t i = 0; i < graph_.layers.size(); ++i) {
    const LayerSpec& l = graph_.layers[i];
    if (l.kind != LayerKind::kFullyConnected) continue;
    ++fc;
    const int idx = params.IndexOf(i);
    if (idx < 0) {
      throw Error(ErrorCode::kShapeMismatch, "layer " + std::to_string(i) + " has no parameters");
    }
    const LayerParams& lp = params.layers[static_cast<std::size_t>(idx)];
    if (lp.weight.rows() != l.in || lp.weight.cols() != l.out || lp.bias.rows() != 1 ||
        lp.bias.cols() != l.out) {
      throw Error(ErrorCode::kShapeMismatch,
                  "layer " + std::to_string(i) + " expects weight " + std::to_string(l.in) + "x" +
                      std::to_string(l.out) + ", got " + lp.weight.ShapeString() + " / bias " +
                      lp.bias.ShapeString());
    }
  }
  if (fc != params.layers.size()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter set has layers absent from the graph");
  }
}

namespace {

void CheckFinite(const DenseMatrix& m, std::size_t layer) {
  if (!m.AllFinite()) {
    throw Error(ErrorCode::kNumericOverflow,
                "non-finite activation at layer " + std::to_string(layer));
  }
}

}  // namespace

ForwardState Network::Forward(const ModelParams& params, const Batch& batch, SplitTap* tap) {
  CheckParams(params);
  if (batch.inputs.cols() != graph_.input_dim() || batch.labels.rows() != batch.inputs.rows() ||
      batch.labels.cols() != graph_.output_dim()) {
    throw Error(ErrorCode::kShapeMismatch,
                "batch inputs " + batch.inputs.ShapeString() + " / labels " +
                    batch.labels.ShapeString() + " do not fit layer 0");
  }
  const std::size_t n = graph_.layers.size();
  const bool fused = FusedSigmoid();
  ForwardState st;
  st.inputs.resize(n);
  st.outputs.resize(n);
  st.batch_rows = batch.size();

  DenseMatrix x = batch.inputs;
  std::size_t next_split = 0;
  for (std::size_t l = 0; l < n; ++l) {
    if (next_split < graph_.splits.size() && graph_.splits[next_split] == l) {
      if (tap != nullptr) x = tap->Forward(next_split, x);
      ++next_split;
    }
    st.inputs[l] = std::move(x);
    const DenseMatrix& in = st.inputs[l];
    DenseMatrix out;
    const LayerSpec& spec = graph_.layers[l];
    switch (spec.kind) {
      case LayerKind::kFullyConnected: {
        const LayerParams& lp = params.layers[static_cast<std::size_t>(params.IndexOf(l))];
        MatMul(in, lp.weight, out);
        for (std::size_t r = 0; r < out.rows(); ++r) {
          auto row = out.row(r);
          for (std::size_t c = 0; c < row.size(); ++c) row[c] += lp.bias[c];
        }
        break;
      }
      case LayerKind::kRelu:
        out = in;
        for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::kSigmoid:
        out = in;
        if (!(fused && l + 1 == n)) {
          for (double& v : out.values()) v = Sigmoid(v);
        }
        break;
    }
    CheckFinite(out, l);
    st.outputs[l] = out;
    x = std::move(out);
  }

  const DenseMatrix& pred = st.outputs.back();
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (fused) {
      total += BceWithLogits(pred[i], batch.labels[i]);
    } else {
      const double d = pred[i] - batch.labels[i];
      total += d * d;
    }
  }
  st.loss = total / static_cast<double>(batch.size());
  if (!std::isfinite(st.loss)) {
    throw Error(ErrorCode::kNumericOverflow, "non-finite loss");
  }
  st.token = next_token_++;
  last_token_ = st.token;
  return st;
}

double Network::Loss(const ModelParams& params, const Batch& batch, SplitTap* tap) {
  const std::uint64_t keep = last_token_;
  const double loss = Forward(params, batch, tap).loss;
  last_token_ = keep;
  return loss;
}

BackwardResult Network::Backward(const ModelParams& params, const Batch& batch,
                                 const ForwardState& state, SplitTap* tap) {
  CheckParams(params);
  if (state.token == 0 || state.token != last_token_ || state.batch_rows != batch.size() ||
      state.outputs.size() != graph_.layers.size()) {
    throw Error(ErrorCode::kStaleForwardState,
                "backward called with a forward state that does not match the last forward");
  }
  const std::size_t n = graph_.layers.size();
  const bool fused = FusedSigmoid();
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  const DenseMatrix& pred = state.outputs.back();
  DenseMatrix g(pred.rows(), pred.cols());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    g[i] = fused ? (Sigmoid(pred[i]) - batch.labels[i]) * inv_b
                 : 2.0 * (pred[i] - batch.labels[i]) * inv_b;
  }

  BackwardResult res;
  res.gradients = ZeroParams();
  std::size_t split_cursor = graph_.splits.size();
  for (std::size_t l = n; l-- > 0;) {
    const LayerSpec& spec = graph_.layers[l];
    switch (spec.kind) {
      case LayerKind::kFullyConnected: {
        const LayerParams& lp = params.layers[static_cast<std::size_t>(params.IndexOf(l))];
        LayerParams& gp = res.gradients.layers[static_cast<std::size_t>(res.gradients.IndexOf(l))];
        MatMulTransA(state.inputs[l], g, gp.weight);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto row = g.row(r);
          for (std::size_t c = 0; c < row.size(); ++c) gp.bias[c] += row[c];
        }
        DenseMatrix upstream;
        MatMulTransB(g, lp.weight, upstream);
        g = std::move(upstream);
        break;
      }
      case LayerKind::kRelu: {
        const DenseMatrix& in = state.inputs[l];
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (!(in[i] > 0.0)) g[i] = 0.0;
        }
        break;
      }
      case LayerKind::kSigmoid: {
        if (fused && l + 1 == n) break;
        const DenseMatrix& s = state.outputs[l];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s[i] * (1.0 - s[i]);
        break;
      }
    }
    if (split_cursor > 0 && graph_.splits[split_cursor - 1] == l) {
      --split_cursor;
      if (tap != nullptr) g = tap->Backward(split_cursor, g);
    }
  }
  res.input_gradient = std::move(g);
  return res;
}

double Network::Accuracy(const ForwardState& state, const Batch& batch) const {
  if (!FusedSigmoid()) return std::numeric_limits<double>::quiet_NaN();
  const DenseMatrix& pred = state.outputs.back();
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred[i] >= 0.0 ? 1.0 : 0.0;
    if (p == batch.labels[i]) ++hit;
  }
  return pred.size() == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
}

void SgdStep(ModelParams& params, const ModelParams& gradients, double lr) {
  if (!params.SameShape(gradients)) {
    throw Error(ErrorCode::kShapeMismatch, "sgd step: gradient shape does not match parameters");
  }
  if (!(lr >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be >= 0");
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto w = params.layers[i].weight.values();
    auto gw = gradients.layers[i].weight.values();
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * gw[j];
    auto b = params.layers[i].bias.values();
    auto gb = gradients.layers[i].bias.values();
    for (std::size_t j = 0; j < b.size(); ++j) b[j] -= lr * gb[j];
  }
}

}  // namespace dct
