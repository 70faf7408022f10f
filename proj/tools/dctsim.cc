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
// dctsim: run, verify, gen-data and report for the DCT simulator.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dct/config.h"
#include "dct/error.h"
#include "dct/experiment.h"
#include "dct/report.h"
#include "dct/verify.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitVerify = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> mode;
  std::optional<int> precision;
};

void Apply(const Overrides& o, dct::ExperimentConfig& cfg) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.mode) cfg.mode = dct::ParseRunMode(*o.mode);
  if (o.precision) cfg.precision = dct::ParsePrecision(*o.precision);
  cfg.Validate();
}

int Run(const std::string& path, const Overrides& o) {
  dct::ExperimentConfig cfg = dct::LoadConfig(path);
  Apply(o, cfg);
  if (!cfg.sweep.empty()) {
    const auto points = dct::RunSweep(cfg);
    std::cout << dct::SweepCsv(points);
    return kExitOk;
  }
  const dct::TrainTest data = dct::LoadExperimentData(cfg);
  const dct::ExperimentResult r = dct::RunExperiment(cfg, data);
  dct::WriteOutputs(cfg, r, cfg.out_dir);
  std::cout << dct::SummaryText(cfg, r);
  std::cout << "outputs written to " << cfg.out_dir << "\n";
  return kExitOk;
}

int Verify(const std::vector<std::string>& suites, std::uint64_t seed) {
  std::vector<std::string> names = suites;
  if (names.empty() || (names.size() == 1 && names[0] == "all")) names = dct::VerifySuiteNames();
  bool ok = true;
  for (const std::string& s : names) {
    const dct::VerifyReport r = dct::RunVerifySuite(s, seed);
    std::cout << r.ToString() << std::flush;
    ok = ok && r.passed();
  }
  return ok ? kExitOk : kExitVerify;
}

int GenData(const std::optional<std::string>& config, dct::DatasetSpec spec,
            const Overrides& o, const std::string& out) {
  if (config) spec = dct::LoadConfig(*config).dataset;
  if (o.seed) spec.seed = *o.seed;
  if (spec.kind == dct::DatasetKind::kCsv) {
    throw dct::Error(dct::ErrorCode::kConfig, "gen-data needs a synthetic dataset kind");
  }
  std::string path = out;
  if (path.empty()) {
    const std::string dir = o.out_dir.value_or(".");
    std::filesystem::create_directories(dir);
    path = (std::filesystem::path(dir) / "data.csv").string();
  }
  dct::WriteCsv(path, dct::GenerateSamples(spec));
  std::cout << "wrote " << spec.samples << " samples to " << path << "\n";
  return kExitOk;
}

int Report(const std::vector<std::string>& paths, const Overrides& o) {
  const dct::Report r = dct::ReportFromPaths(paths);
  std::cout << r.table;
  if (o.out_dir) {
    std::filesystem::create_directories(*o.out_dir);
    const std::string csv = (std::filesystem::path(*o.out_dir) / "report.csv").string();
    dct::WriteFile(csv, r.csv);
    std::cout << "wrote " << csv << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic communication thresholding simulator"};
  app.require_subcommand(1);

  Overrides o;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string mode;
  int precision = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Override the run seed");
    sub->add_option("--out-dir", out_dir, "Output directory");
  };

  std::string config;
  CLI::App* run = app.add_subcommand("run", "Train with a config and write metrics");
  run->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  add_common(run);
  run->add_option("--mode", mode, "sync or async")->check(CLI::IsMember({"sync", "async"}));
  run->add_option("--precision", precision, "64 or 32")->check(CLI::IsMember({32, 64}));

  std::vector<std::string> suites;
  CLI::App* verify = app.add_subcommand("verify", "Run verification suites");
  verify->add_option("suites", suites, "Suite names, or 'all'");
  verify->add_option("--seed", seed, "Seed for randomized cases");

  std::string gen_config;
  std::string gen_out;
  std::string gen_kind = "synthetic-classification";
  dct::DatasetSpec spec;
  CLI::App* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  gen->add_option("--config", gen_config, "Take the dataset spec from a config")
      ->check(CLI::ExistingFile);
  add_common(gen);
  gen->add_option("--kind", gen_kind, "synthetic-classification or synthetic-regression");
  gen->add_option("--dims", spec.dims, "Feature count");
  gen->add_option("--samples", spec.samples, "Sample count");
  gen->add_option("--separation", spec.separation, "Cluster separation (classification)");
  gen->add_option("--noise", spec.noise, "Label noise (regression)");
  gen->add_option("--out", gen_out, "CSV path (default <out-dir>/data.csv)");

  std::vector<std::string> paths;
  CLI::App* report = app.add_subcommand("report", "Aggregate run summaries into a table");
  report->add_option("paths", paths, "Run directories or summary.txt files")->required();
  report->add_option("--out-dir", out_dir, "Also write report.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto set = [](CLI::App* sub, const char* flag) { return sub->count(flag) > 0; };
  try {
    if (*run) {
      if (set(run, "--seed")) o.seed = seed;
      if (set(run, "--out-dir")) o.out_dir = out_dir;
      if (set(run, "--mode")) o.mode = mode;
      if (set(run, "--precision")) o.precision = precision;
      return Run(config, o);
    }
    if (*verify) return Verify(suites, set(verify, "--seed") ? seed : 1);
    if (*gen) {
      if (set(gen, "--seed")) o.seed = seed;
      if (set(gen, "--out-dir")) o.out_dir = out_dir;
      spec.kind = dct::ParseDatasetKind(gen_kind);
      std::optional<std::string> cfg;
      if (!gen_config.empty()) cfg = gen_config;
      return GenData(cfg, spec, o, gen_out);
    }
    if (*report) {
      if (set(report, "--out-dir")) o.out_dir = out_dir;
      return Report(paths, o);
    }
  } catch (const dct::Error& e) {
    std::cerr << "dctsim: " << e.what() << "\n";
    const bool usage =
        e.code() == dct::ErrorCode::kConfig || e.code() == dct::ErrorCode::kUnknownSuite;
    return usage ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "dctsim: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
