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
#ifndef DCT_TASKS_H_
#define DCT_TASKS_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dct/config.h"
#include "dct/data.h"
#include "dct/runtime.h"

namespace dct {

// Desk-scale tasks shared by the verification suites, the acceptance tests
// and the example configs.

/// Full-batch linear least squares with label noise: one FC layer, MSE loss.
/// Gradient descent on it converges to the normal-equations solution.
struct LeastSquaresTask {
  TrainConfig cfg;
  Dataset data;
};
LeastSquaresTask MakeLeastSquaresTask(std::uint64_t seed = 1, std::size_t dims = 8,
                                      std::size_t samples = 64);

// Normal-equations solution, weights then bias.
std::vector<double> LeastSquaresOptimum(const Dataset& data);
// Euclidean distance between the single FC layer's (weights, bias) and `optimum`.
double DistanceToOptimum(const ModelParams& params, const std::vector<double>& optimum);

// DLRM-shaped MLP on two-cluster synthetic data. Splits are FC block
// positions (see ModelSpec).
ExperimentConfig DlrmTaskConfig(const std::vector<std::size_t>& splits, const CodecConfig& mp);

// Noisy regression through a one-hidden-layer MLP with DCT-DP on every tensor.
ExperimentConfig LifespanTaskConfig(std::uint64_t lifespan, std::uint64_t steps = 10000);

}  // namespace dct

#endif  // DCT_TASKS_H_
