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
#include "dct/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "dct/error.h"
#include "dct/experiment.h"

namespace dct {

namespace {

const char* const kRequired[] = {"name",       "seed",      "mp_codec",    "mp_eta",
                                 "splits",     "train_loss", "test_loss",  "total_bytes",
                                 "mp_element_ratio", "simulated_time_seconds"};

double AsDouble(const Summary& s, const std::string& key) {
  const std::string& v = s.at(key);
  if (v == "nan") return std::nan("");
  if (v == "inf") return INFINITY;
  return std::stod(v);
}

std::string Fixed(double v, int digits) {
  if (std::isnan(v)) return "-";
  if (std::isinf(v)) return "inf";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string Pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

}  // namespace

Summary ParseSummary(const std::string& text, const std::string& source) {
  Summary out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const std::size_t colon = line.find(": ");
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  source + ":" + std::to_string(n) + ": expected 'key: value'");
    }
    out[line.substr(0, colon)] = line.substr(colon + 2);
  }
  return out;
}

Report BuildReport(const std::vector<Summary>& runs, const std::vector<std::string>& sources) {
  if (runs.empty()) throw Error(ErrorCode::kEmptyInput, "report: no runs given");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const char* key : kRequired) {
      if (!runs[i].count(key)) {
        throw Error(ErrorCode::kInvalidArgument,
                    sources[i] + ": missing column '" + std::string(key) + "'");
      }
    }
    if (runs[i].at("seed") != runs[0].at("seed")) {
      throw Error(ErrorCode::kInvalidArgument,
                  "seed mismatch: " + sources[0] + " has seed " + runs[0].at("seed") + ", " +
                      sources[i] + " has seed " + runs[i].at("seed"));
    }
  }

  std::vector<std::size_t> order(runs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const int sa = std::stoi(runs[a].at("splits"));
    const int sb = std::stoi(runs[b].at("splits"));
    if (sa != sb) return sa < sb;
    return AsDouble(runs[a], "mp_eta") < AsDouble(runs[b], "mp_eta");
  });

  double ref_test = std::nan("");
  double ref_train = std::nan("");
  for (const Summary& r : runs) {
    if (r.at("mp_codec") == "none") {
      ref_test = AsDouble(r, "test_loss");
      ref_train = AsDouble(r, "train_loss");
      break;
    }
  }

  std::ostringstream t;
  std::ostringstream csv;
  csv << "name,mp_codec,splits,eta,train_loss,test_loss,train_delta_pct,test_delta_pct,"
         "total_bytes,mp_element_ratio,simulated_time_seconds\n";
  const std::size_t name_w = 24;
  t << std::string(name_w, ' ').replace(0, 3, "run") << Pad("splits", 7) << Pad("eta", 7)
    << Pad("train loss", 12) << Pad("test loss", 12) << Pad("test d%", 9) << Pad("bytes", 14)
    << Pad("MP x", 9) << Pad("sim time", 12) << "\n";
  for (std::size_t i : order) {
    const Summary& r = runs[i];
    const double train = AsDouble(r, "train_loss");
    const double test = AsDouble(r, "test_loss");
    const double dtrain = 100.0 * (train - ref_train) / ref_train;
    const double dtest = 100.0 * (test - ref_test) / ref_test;
    std::string name = r.at("name");
    if (name.size() >= name_w) name = name.substr(0, name_w - 1);
    t << name << std::string(name_w - name.size(), ' ') << Pad(r.at("splits"), 7)
      << Pad(r.at("mp_codec") == "none" ? "-" : Fixed(AsDouble(r, "mp_eta"), 2), 7)
      << Pad(Fixed(train, 5), 12) << Pad(Fixed(test, 5), 12) << Pad(Fixed(dtest, 2), 9)
      << Pad(r.at("total_bytes"), 14) << Pad(Fixed(AsDouble(r, "mp_element_ratio"), 1), 9)
      << Pad(Fixed(AsDouble(r, "simulated_time_seconds"), 4), 12) << "\n";
    csv << r.at("name") << "," << r.at("mp_codec") << "," << r.at("splits") << ","
        << r.at("mp_eta") << "," << r.at("train_loss") << "," << r.at("test_loss") << ","
        << Fixed(dtrain, 4) << "," << Fixed(dtest, 4) << "," << r.at("total_bytes") << ","
        << r.at("mp_element_ratio") << "," << r.at("simulated_time_seconds") << "\n";
  }
  return {t.str(), csv.str()};
}

Report ReportFromPaths(const std::vector<std::string>& paths) {
  std::vector<Summary> runs;
  std::vector<std::string> sources;
  for (const std::string& p : paths) {
    std::string file = p;
    if (std::filesystem::is_directory(p)) file = (std::filesystem::path(p) / "summary.txt").string();
    runs.push_back(ParseSummary(ReadFile(file), file));
    sources.push_back(file);
  }
  return BuildReport(runs, sources);
}

}  // namespace dct
