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
#ifndef DCT_CONFIG_H_
#define DCT_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dct/codec.h"
#include "dct/data.h"
#include "dct/nn.h"
#include "dct/runtime.h"
#include "dct/transport.h"

namespace dct {

/// MLP description. `splits` are counted in FC blocks: a split at k sits
/// after the k-th FC layer and its activation.
struct ModelSpec {
  std::vector<std::size_t> widths;
  LayerKind hidden_activation = LayerKind::kRelu;
  LossKind loss = LossKind::kBinaryCrossEntropy;
  std::vector<std::size_t> splits;
};

struct SweepSpec {
  std::vector<std::uint64_t> lifespans;  // Overrides codecs.dp.lifespan.
  std::vector<double> etas;              // Overrides codecs.mp.eta.
  bool empty() const { return lifespans.empty() && etas.empty(); }
};

enum class RunMode { kSync, kAsync };

struct ExperimentConfig {
  std::string name = "run";
  ModelSpec model;
  DatasetSpec dataset;
  CodecConfig mp;
  CodecConfig dp;
  double lr = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t steps = 100;
  std::uint64_t seed = 1;
  std::size_t trainers = 1;
  RunMode mode = RunMode::kSync;
  Precision precision = Precision::k64;
  TransportMode transport = TransportMode::kInProcess;
  AsyncConfig async;
  DrainPolicy drain;
  CostModel cost;
  std::string out_dir = "out";
  bool audit = false;
  SweepSpec sweep;

  // Layer graph with the input width taken from the dataset.
  LayerGraph Graph() const;
  TrainConfig ToTrainConfig() const;
  // Throws kConfig naming the offending field.
  void Validate() const;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

// `source` prefixes syntax errors as source:line:column.
ExperimentConfig ParseConfig(const std::string& text, const std::string& source = "<config>");
ExperimentConfig LoadConfig(const std::string& path);
std::string SerializeConfig(const ExperimentConfig& cfg);

std::string RunModeName(RunMode mode);
RunMode ParseRunMode(const std::string& name);
std::string DrainModeName(DrainMode mode);
DrainMode ParseDrainMode(const std::string& name);
int PrecisionBits(Precision p);
Precision ParsePrecision(int bits);

// Built-in configuration matching the DLRM-shaped synthetic task.
ExperimentConfig DefaultConfig();

}  // namespace dct

#endif  // DCT_CONFIG_H_
