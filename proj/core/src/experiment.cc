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
#include "dct/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dct/error.h"
#include "dct/wire.h"

namespace dct {

namespace {

std::string Num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double MeanOf(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

CompressionTally Combined(const CompressionTally& a, const CompressionTally& b) {
  CompressionTally c = a;
  c.messages += b.messages;
  c.dense_elements += b.dense_elements;
  c.kept_elements += b.kept_elements;
  c.dense_bytes += b.dense_bytes;
  c.wire_bytes += b.wire_bytes;
  return c;
}

}  // namespace

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrainTest LoadExperimentData(ExperimentConfig& cfg) {
  TrainTest data = MakeTrainTest(cfg.dataset);
  if (cfg.dataset.kind == DatasetKind::kCsv) cfg.dataset.dims = data.train.x.cols();
  if (data.train.x.cols() != cfg.dataset.dims) {
    throw Error(ErrorCode::kConfig, "dataset has " + std::to_string(data.train.x.cols()) +
                                        " features, config says " +
                                        std::to_string(cfg.dataset.dims));
  }
  return data;
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg, const TrainTest& data) {
  cfg.Validate();
  const TrainConfig tc = cfg.ToTrainConfig();
  ExperimentResult out;
  const auto start = std::chrono::steady_clock::now();
  out.run = cfg.mode == RunMode::kSync ? RunSync(tc, data.train)
                                       : RunAsync(tc, cfg.async, data.train);
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.train = Evaluate(tc, out.run.final_params, data.train);
  if (data.test.size() > 0) {
    out.test = Evaluate(tc, out.run.final_params, data.test);
    out.has_test = true;
  } else {
    out.test = {std::nan(""), std::nan("")};
  }
  return out;
}

ExperimentResult RunExperiment(ExperimentConfig cfg) {
  const TrainTest data = LoadExperimentData(cfg);
  return RunExperiment(cfg, data);
}

std::string SummaryText(const ExperimentConfig& cfg, const ExperimentResult& r) {
  const RunResult& run = r.run;
  std::ostringstream s;
  auto kv = [&](const std::string& k, const std::string& v) { s << k << ": " << v << "\n"; };

  kv("name", cfg.name);
  kv("seed", std::to_string(cfg.seed));
  kv("dataset", DatasetKindName(cfg.dataset.kind));
  kv("dataset_seed", std::to_string(cfg.dataset.seed));
  kv("mode", RunModeName(cfg.mode));
  kv("precision", std::to_string(PrecisionBits(cfg.precision)));
  kv("steps", std::to_string(cfg.steps));
  kv("batch_size", std::to_string(cfg.batch_size));
  kv("streams", std::to_string(run.streams));
  kv("parameters", std::to_string(run.final_params.ParameterCount()));
  kv("splits", std::to_string(run.splits));
  kv("mp_codec", CodecKindName(cfg.mp.kind));
  kv("mp_eta", Num(cfg.mp.kind == CodecKind::kNone ? 0.0 : cfg.mp.eta));
  kv("dp_codec", CodecKindName(cfg.dp.kind));
  kv("dp_eta", Num(cfg.dp.kind == CodecKind::kNone ? 0.0 : cfg.dp.eta));
  kv("dp_lifespan", std::to_string(cfg.dp.lifespan));

  kv("train_loss", Num(r.train.loss));
  kv("train_accuracy", Num(r.train.accuracy));
  kv("test_loss", Num(r.test.loss));
  kv("test_accuracy", Num(r.test.accuracy));
  std::vector<double> tail;
  const std::size_t window = std::max<std::size_t>(1, run.log.size() / 10);
  for (std::size_t i = run.log.size() - std::min(window, run.log.size()); i < run.log.size(); ++i) {
    tail.push_back(run.log[i].loss);
  }
  kv("final_batch_loss", Num(MeanOf(tail)));
  if (cfg.dataset.kind == DatasetKind::kSyntheticClassification) {
    kv("bayes_accuracy", Num(BayesAccuracy(cfg.dataset.separation)));
    kv("bayes_loss", Num(BayesCrossEntropy(cfg.dataset.separation)));
  }

  const CompressionTally mp = Combined(run.mp_forward, run.mp_backward);
  kv("mp_forward_element_ratio", Num(run.mp_forward.ElementRatio()));
  kv("mp_forward_byte_ratio", Num(run.mp_forward.ByteRatio()));
  kv("mp_backward_element_ratio", Num(run.mp_backward.ElementRatio()));
  kv("mp_backward_byte_ratio", Num(run.mp_backward.ByteRatio()));
  kv("mp_element_ratio", Num(mp.ElementRatio()));
  kv("mp_byte_ratio", Num(mp.ByteRatio()));
  kv("dp_element_ratio", Num(run.dp.ElementRatio()));
  kv("dp_byte_ratio", Num(run.dp.ByteRatio()));

  kv("total_bytes", std::to_string(run.meter.TotalBytes()));
  kv("activation_bytes", std::to_string(run.meter.TotalBytes(MessageKind::kActivationFwd)));
  kv("split_gradient_bytes", std::to_string(run.meter.TotalBytes(MessageKind::kGradBwd)));
  kv("param_grad_bytes", std::to_string(run.meter.TotalBytes(MessageKind::kParamGrad)));
  kv("model_bytes", std::to_string(run.meter.TotalBytes(MessageKind::kModelPull) +
                                   run.meter.TotalBytes(MessageKind::kModelPush)));
  kv("messages", std::to_string(run.meter.TotalMessages()));
  kv("meter_conserved", run.meter.Conserved() ? "true" : "false");
  kv("simulated_time_seconds", Num(run.simulated_time));
  kv("sort_count", std::to_string(run.sort_count));
  kv("drain_events", std::to_string(run.drain_events));
  kv("dropped_updates", std::to_string(run.dropped_updates));
  kv("error_buffer_mode", run.error_buffer_mode);

  if (!run.log.empty()) {
    const IterationRecord& last = run.log.back();
    for (std::size_t sp = 0; sp < last.split_tau.size(); ++sp) {
      kv("final_split_tau_" + std::to_string(sp), Num(last.split_tau[sp]));
      kv("final_split_density_" + std::to_string(sp), Num(last.split_density[sp]));
    }
  }
  if (!run.staleness_histogram.empty()) {
    std::uint64_t n = 0;
    double sum = 0.0;
    std::uint64_t max = 0;
    for (const auto& [st, count] : run.staleness_histogram) {
      n += count;
      sum += static_cast<double>(st * count);
      max = std::max(max, st);
    }
    kv("staleness_mean", Num(sum / static_cast<double>(n)));
    kv("staleness_max", std::to_string(max));
  }
  return s.str();
}

std::string MetricsCsv(const RunResult& run) {
  std::ostringstream s;
  s << "iteration,stream,loss,accuracy,staleness,error_max";
  for (const auto& link : run.link_names) s << ",bytes[" << link << "]";
  for (std::uint32_t id : run.tensor_ids) s << ",tau[" << id << "]";
  for (std::size_t sp = 0; sp < run.splits; ++sp) s << ",mp_tau[" << sp << "]";
  for (std::size_t sp = 0; sp < run.splits; ++sp) s << ",density[" << sp << "]";
  s << "\n";
  for (const IterationRecord& r : run.log) {
    s << r.iteration << "," << r.stream << "," << Num(r.loss) << "," << Num(r.accuracy) << ","
      << r.staleness << "," << Num(r.error_max);
    for (std::size_t i = 0; i < run.link_names.size(); ++i) {
      s << "," << (i < r.link_bytes.size() ? r.link_bytes[i] : 0);
    }
    for (double t : r.tensor_tau) s << "," << Num(t);
    for (double t : r.split_tau) s << "," << Num(t);
    for (double d : r.split_density) s << "," << Num(d);
    s << "\n";
  }
  return s.str();
}

std::string TimingText(const ExperimentResult& r) {
  std::ostringstream s;
  s << "wall_seconds: " << Num(r.wall_seconds) << "\n";
  s << "compress_cpu_seconds: " << Num(r.run.compress_cpu_seconds) << "\n";
  return s.str();
}

void WriteOutputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                  const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path d(dir);
  WriteFile((d / "metrics.csv").string(), MetricsCsv(result.run));
  WriteFile((d / "summary.txt").string(), SummaryText(cfg, result));
  WriteFile((d / "meter.csv").string(), result.run.meter.ToCsv());
  WriteFile((d / "timing.txt").string(), TimingText(result));
  WriteFile((d / "config.json").string(), SerializeConfig(cfg));
  if (cfg.audit) {
    const auto bytes = EncodeAuditLog(result.run.audit);
    WriteFile((d / "audit.bin").string(), std::string(bytes.begin(), bytes.end()));
  }
}

std::vector<SweepPoint> RunSweep(const ExperimentConfig& base) {
  if (base.sweep.empty()) throw Error(ErrorCode::kConfig, "sweep: no values to sweep");
  ExperimentConfig shaped = base;
  const TrainTest data = LoadExperimentData(shaped);
  std::vector<SweepPoint> out;
  auto run_one = [&](ExperimentConfig c, const std::string& tag) {
    c.name = base.name + "-" + tag;
    c.sweep = {};
    c.out_dir = (std::filesystem::path(base.out_dir) / c.name).string();
    SweepPoint p{c, RunExperiment(c, data)};
    WriteOutputs(p.cfg, p.result, p.cfg.out_dir);
    out.push_back(std::move(p));
  };
  for (std::uint64_t l : base.sweep.lifespans) {
    ExperimentConfig c = shaped;
    c.dp.lifespan = l;
    run_one(c, "L" + std::to_string(l));
  }
  for (double e : base.sweep.etas) {
    ExperimentConfig c = shaped;
    c.mp.eta = e;
    run_one(c, "eta" + Num(e));
  }
  std::filesystem::create_directories(base.out_dir);
  WriteFile((std::filesystem::path(base.out_dir) / "sweep.csv").string(), SweepCsv(out));
  return out;
}

std::string SweepCsv(const std::vector<SweepPoint>& points) {
  std::ostringstream s;
  s << "name,mp_eta,dp_lifespan,sort_count,compress_cpu_seconds,wall_seconds,train_loss,"
       "test_loss,total_bytes\n";
  for (const SweepPoint& p : points) {
    s << p.cfg.name << "," << Num(p.cfg.mp.eta) << "," << p.cfg.dp.lifespan << ","
      << p.result.run.sort_count << "," << Num(p.result.run.compress_cpu_seconds) << ","
      << Num(p.result.wall_seconds) << "," << Num(p.result.train.loss) << ","
      << Num(p.result.test.loss) << "," << p.result.run.meter.TotalBytes() << "\n";
  }
  return s.str();
}

}  // namespace dct
