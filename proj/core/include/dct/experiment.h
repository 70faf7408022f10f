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
#ifndef DCT_EXPERIMENT_H_
#define DCT_EXPERIMENT_H_

#include <string>
#include <utility>
#include <vector>

#include "dct/config.h"
#include "dct/data.h"
#include "dct/runtime.h"

namespace dct {

struct ExperimentResult {
  RunResult run;
  EvalResult train;
  EvalResult test;
  bool has_test = false;
  double wall_seconds = 0.0;
};

// Generates or loads the configured dataset. CSV inputs fix dataset.dims.
TrainTest LoadExperimentData(ExperimentConfig& cfg);

ExperimentResult RunExperiment(const ExperimentConfig& cfg, const TrainTest& data);
ExperimentResult RunExperiment(ExperimentConfig cfg);

// Deterministic "key: value" lines; excludes wall-clock measurements.
std::string SummaryText(const ExperimentConfig& cfg, const ExperimentResult& result);
std::string MetricsCsv(const RunResult& run);
std::string TimingText(const ExperimentResult& result);

// Writes metrics.csv, summary.txt, meter.csv, timing.txt and config.json
// (plus audit.bin when auditing) into `dir`.
void WriteOutputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                  const std::string& dir);

struct SweepPoint {
  ExperimentConfig cfg;
  ExperimentResult result;
};

// One run per swept value, each written to <out_dir>/<name>; returns the runs
// in sweep order and writes <out_dir>/sweep.csv.
std::vector<SweepPoint> RunSweep(const ExperimentConfig& cfg);
std::string SweepCsv(const std::vector<SweepPoint>& points);

void WriteFile(const std::string& path, const std::string& contents);
std::string ReadFile(const std::string& path);

}  // namespace dct

#endif  // DCT_EXPERIMENT_H_
