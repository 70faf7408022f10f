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
#include "dct/tasks.h"

#include <cmath>

#include "dct/error.h"

namespace dct {

LeastSquaresTask MakeLeastSquaresTask(std::uint64_t seed, std::size_t dims, std::size_t samples) {
  DatasetSpec spec;
  spec.kind = DatasetKind::kSyntheticRegression;
  spec.dims = dims;
  spec.samples = samples;
  spec.seed = seed;
  spec.noise = 0.1;
  LeastSquaresTask task;
  task.data = GenerateSamples(spec);
  task.cfg.graph.layers = {{LayerKind::kFullyConnected, dims, 1}};
  task.cfg.graph.loss = LossKind::kMeanSquaredError;
  task.cfg.batch_size = samples;
  task.cfg.lr = 0.1;
  task.cfg.seed = seed;
  task.cfg.steps = 1000;
  return task;
}

std::vector<double> LeastSquaresOptimum(const Dataset& data) {
  // Augmented design [X 1]; solve (A^T A) w = A^T y by Gaussian elimination
  // with partial pivoting.
  const std::size_t n = data.size();
  const std::size_t d = data.x.cols() + 1;
  std::vector<double> m(d * (d + 1), 0.0);
  auto a = [&](std::size_t r, std::size_t c) { return c + 1 == d ? 1.0 : data.x(r, c); };
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) m[i * (d + 1) + j] += a(r, i) * a(r, j);
      m[i * (d + 1) + d] += a(r, i) * data.y(r, 0);
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < d; ++r) {
      if (std::abs(m[r * (d + 1) + c]) > std::abs(m[piv * (d + 1) + c])) piv = r;
    }
    if (m[piv * (d + 1) + c] == 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "least squares design is rank deficient");
    }
    for (std::size_t j = 0; j <= d; ++j) std::swap(m[c * (d + 1) + j], m[piv * (d + 1) + j]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == c) continue;
      const double f = m[r * (d + 1) + c] / m[c * (d + 1) + c];
      for (std::size_t j = c; j <= d; ++j) m[r * (d + 1) + j] -= f * m[c * (d + 1) + j];
    }
  }
  std::vector<double> w(d);
  for (std::size_t i = 0; i < d; ++i) w[i] = m[i * (d + 1) + d] / m[i * (d + 1) + i];
  return w;
}

double DistanceToOptimum(const ModelParams& params, const std::vector<double>& optimum) {
  const LayerParams& l = params.layers.at(0);
  if (l.weight.size() + 1 != optimum.size()) {
    throw Error(ErrorCode::kShapeMismatch, "optimum does not match the model");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < l.weight.size(); ++i) {
    s += (l.weight[i] - optimum[i]) * (l.weight[i] - optimum[i]);
  }
  s += (l.bias[0] - optimum.back()) * (l.bias[0] - optimum.back());
  return std::sqrt(s);
}

ExperimentConfig DlrmTaskConfig(const std::vector<std::size_t>& splits, const CodecConfig& mp) {
  ExperimentConfig c = DefaultConfig();
  c.name = "dlrm";
  c.model.splits = splits;
  c.mp = mp;
  // Large enough that training is close to a single pass (no overfitting) and
  // the test set resolves sub-percent loss differences.
  c.dataset.samples = 60000;
  c.dataset.test_fraction = 0.5;
  c.dataset.separation = 1.0;
  c.steps = 2000;
  c.batch_size = 32;
  c.lr = 0.05;
  return c;
}

ExperimentConfig LifespanTaskConfig(std::uint64_t lifespan, std::uint64_t steps) {
  ExperimentConfig c;
  c.name = "lifespan";
  c.model.widths = {64, 1};
  c.model.hidden_activation = LayerKind::kRelu;
  c.model.loss = LossKind::kMeanSquaredError;
  c.dataset.kind = DatasetKind::kSyntheticRegression;
  c.dataset.dims = 32;
  // Enough data that 10k steps stay under one pass; both lifespans then sit
  // on the noise floor instead of overfitting differently.
  c.dataset.samples = 200000;
  c.dataset.noise = 1.0;
  c.dp = {CodecKind::kDctDp, 0.9, lifespan};
  c.lr = 0.005;
  c.batch_size = 32;
  c.steps = steps;
  return c;
}

}  // namespace dct
