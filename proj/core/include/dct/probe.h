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
#ifndef DCT_PROBE_H_
#define DCT_PROBE_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dct/data.h"
#include "dct/nn.h"

namespace dct {

struct ProbeOptions {
  double eta = 0.5;
  std::size_t max_samples = 4096;  // Full-dataset enumeration cap.
};

/// Compares the mean per-sample gradient of the dynamically thresholded
/// network (per-sample tau_i at the split) with the gradient of the network
/// thresholded at the dataset-mean threshold.
struct ProbeReport {
  std::size_t samples = 0;
  std::vector<double> thresholds;  // tau_i
  double mean_threshold = 0.0;
  // Column means of the masked activation under each threshold rule.
  std::vector<double> dynamic_mean;
  std::vector<double> static_mean;
  double assumption_residual = 0.0;  // L2 distance of the two means.
  ModelParams lhs;                   // Mean dynamic-threshold gradient.
  ModelParams rhs;                   // Static-threshold gradient.
  double discrepancy = 0.0;           // L2 over layers after the split.
  double upstream_discrepancy = 0.0;  // L2 over layers before the split.
};

// Requires a graph with exactly one split.
ProbeReport TheoremProbe(const LayerGraph& graph, const ModelParams& params, const Dataset& data,
                         const ProbeOptions& options);

struct ProbeInstance {
  LayerGraph graph;
  ModelParams params;
  Dataset data;
};

/// Identity first partition feeding a small sigmoid network. Activations are
/// a fixed base vector plus epsilon times sign-symmetric per-sample
/// perturbations on the small coordinates, which makes the threshold
/// assumption hold exactly at every epsilon.
ProbeInstance PerturbationInstance(double epsilon, std::uint64_t seed = 7);
// Every sample identical.
ProbeInstance DegenerateInstance(std::uint64_t seed = 7);

}  // namespace dct

#endif  // DCT_PROBE_H_
