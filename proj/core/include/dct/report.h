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
#ifndef DCT_REPORT_H_
#define DCT_REPORT_H_

#include <map>
#include <string>
#include <vector>

namespace dct {

using Summary = std::map<std::string, std::string>;

// Parses "key: value" lines; `source` names the file in error messages.
Summary ParseSummary(const std::string& text, const std::string& source);

struct Report {
  std::string table;  // Human-readable, one row per run.
  std::string csv;    // Same rows, plot-ready.
};

/// Aggregates run summaries into a sparsity-factor table with train loss,
/// test loss, bytes and simulated time. All runs must share a seed; the first
/// uncompressed run, if any, is the reference for the loss deltas.
Report BuildReport(const std::vector<Summary>& runs, const std::vector<std::string>& sources);

// Accepts summary files or run directories containing summary.txt.
Report ReportFromPaths(const std::vector<std::string>& paths);

}  // namespace dct

#endif  // DCT_REPORT_H_
