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
// Acceptance suite. One PASS/FAIL line per criterion; `--only N` runs one.
// A criterion also fails when it exceeds its runtime budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dct/codec.h"
#include "dct/experiment.h"
#include "dct/nn.h"
#include "dct/probe.h"
#include "dct/runtime.h"
#include "dct/tasks.h"
#include "dct/wire.h"
#include "oracles.h"

namespace dct {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double RelDiff(double a, double b) { return std::abs(a - b) / std::abs(b); }

DenseMatrix Row(const std::vector<double>& x) {
  DenseMatrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.values().begin());
  return m;
}

// ---- 1. gradients

Outcome GradientCheck() {
  constexpr double kTol = 1e-4;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> width(1, 6);
  std::uniform_int_distribution<int> depth(1, 3);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int net_i = 0; net_i < 20; ++net_i) {
    const int layers = depth(rng);
    std::vector<std::size_t> widths;
    for (int i = 0; i + 1 < layers; ++i) widths.push_back(width(rng));
    const bool bce = coin(rng);
    widths.push_back(bce ? 1 : width(rng));
    const std::size_t in = width(rng);
    const LayerGraph g = LayerGraph::Mlp(
        in, widths, coin(rng) ? LayerKind::kRelu : LayerKind::kSigmoid,
        bce ? LayerKind::kSigmoid : LayerKind::kFullyConnected,
        bce ? LossKind::kBinaryCrossEntropy : LossKind::kMeanSquaredError);
    Network net(g);
    ModelParams p;
    Batch b{DenseMatrix(5, in), DenseMatrix(5, g.output_dim())};
    // Central differences are meaningless across a ReLU kink, so redraw until
    // every ReLU pre-activation is clear of zero. Biases are randomized too:
    // with zero biases a fully dead layer puts the next one exactly on a kink.
    for (int attempt = 0; attempt < 100; ++attempt) {
      p = net.InitParams(rng());
      for (auto& layer : p.layers) {
        for (double& v : layer.bias.values()) v = 0.5 * normal(rng);
      }
      for (double& v : b.inputs.values()) v = normal(rng);
      for (double& v : b.labels.values()) v = bce ? (coin(rng) ? 1.0 : 0.0) : normal(rng);
      const ForwardState fs = net.Forward(p, b);
      bool near_kink = false;
      for (std::size_t l = 0; l < g.layers.size(); ++l) {
        if (g.layers[l].kind != LayerKind::kRelu) continue;
        for (double z : fs.inputs[l].values()) near_kink = near_kink || std::abs(z) < 1e-3;
      }
      if (!near_kink) break;
    }
    const ModelParams grad = net.Backward(p, b, net.Forward(p, b)).gradients;

    ModelParams q = p;
    for (std::uint32_t id : TensorIds(p)) {
      DenseMatrix& t = TensorById(q, id);
      std::vector<double> flat(t.values().begin(), t.values().end());
      const auto numeric = oracle::CentralDifferences(flat, [&] {
        std::copy(flat.begin(), flat.end(), t.values().begin());
        return net.Loss(q, b);
      });
      std::copy(flat.begin(), flat.end(), t.values().begin());
      const DenseMatrix& gt = TensorById(grad, id);
      for (std::size_t i = 0; i < numeric.size(); ++i) {
        const double denom = std::max({std::abs(numeric[i]), std::abs(gt[i]), 1e-6});
        worst = std::max(worst, std::abs(numeric[i] - gt[i]) / denom);
      }
    }
  }
  return {worst < kTol, Fmt("20 nets, max relative error %.2e (tol %.0e)", worst, kTol)};
}

// ---- 2. contraction

Outcome Contraction() {
  constexpr double kEtas[] = {0.5, 0.9, 0.95};
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> len(1, 64);
  std::normal_distribution<double> normal(0.0, 1.0);
  int violations = 0;
  int mismatches = 0;
  int ties = 0;
  for (int i = 0; i < 10000; ++i) {
    const double eta = kEtas[i % 3];
    std::vector<double> x(len(rng));
    // Every fourth vector is quantized so magnitude ties occur.
    for (double& v : x) v = i % 4 == 3 ? std::round(2.0 * normal(rng)) / 2.0 : normal(rng);
    ThresholdState st;
    ErrorBuffer err(1, x.size());
    const SparseUpdate u = CompressDp(Row(x), st, err, eta, 1).update;
    const DenseMatrix w = u.ToDense();
    double resid = 0.0;
    double norm = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      resid += (x[j] - w[j]) * (x[j] - w[j]);
      norm += x[j] * x[j];
    }
    const double k = static_cast<double>(u.nnz());
    if (resid > (1.0 - k / static_cast<double>(x.size())) * norm * (1.0 + 1e-12)) ++violations;
    const auto expect = oracle::BruteForceKeep(x, eta);
    if (expect != u.indices) ++mismatches;
    const auto rank = static_cast<std::size_t>(std::floor(static_cast<double>(x.size()) * eta));
    if (rank >= 1 && expect.size() > x.size() - rank + 1) ++ties;
  }
  return {violations == 0 && mismatches == 0,
          Fmt("10000 vectors: %d bound violations, %d oracle mismatches, %d tie cases", violations,
              mismatches, ties)};
}

// ---- 3. error feedback

Outcome ErrorFeedback() {
  constexpr double kTol = 1e-6;
  LeastSquaresTask task = MakeLeastSquaresTask(1);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (std::size_t i = 0; i < task.data.size(); ++i) {
    rows.emplace_back(task.data.x.row(i).begin(), task.data.x.row(i).end());
    y.push_back(task.data.y[i]);
  }
  const std::vector<double> opt = oracle::CholeskyLeastSquares(rows, y);
  task.cfg.steps = 20000;
  const RunResult plain = RunSync(task.cfg, task.data);
  task.cfg.dp = {CodecKind::kDctDp, 0.99, 100};
  const RunResult dp = RunSync(task.cfg, task.data);
  const double d_plain = DistanceToOptimum(plain.final_params, opt);
  const double d_dp = DistanceToOptimum(dp.final_params, opt);
  return {d_dp < kTol && d_plain < kTol,
          Fmt("distance to optimum: dct-dp %.2e, uncompressed %.2e (tol %.0e)", d_dp, d_plain,
              kTol)};
}

// ---- 4. keep-all identity

Outcome KeepAllIdentity() {
  DatasetSpec spec;
  spec.dims = 6;
  spec.samples = 512;
  const Dataset data = GenerateSamples(spec);
  TrainConfig cfg;
  cfg.graph = LayerGraph::Mlp(6, {8, 8, 1}, LayerKind::kRelu, LayerKind::kSigmoid,
                              LossKind::kBinaryCrossEntropy);
  cfg.graph.splits = {2, 4};
  cfg.steps = 200;
  const BaselineResult base = RunBaseline(cfg, data);
  auto same = [&](const RunResult& r) {
    if (r.final_params != base.final_params || r.log.size() != base.losses.size()) return false;
    for (std::size_t i = 0; i < r.log.size(); ++i) {
      if (r.log[i].loss != base.losses[i]) return false;
    }
    return true;
  };
  TrainConfig mp = cfg;
  mp.mp = {CodecKind::kDctMp, 0.0};
  TrainConfig dp = cfg;
  dp.dp = {CodecKind::kDctDp, 0.01, 1};  // floor(N * 0.01) = 0 for every tensor here
  TrainConfig both = mp;
  both.dp = dp.dp;
  const bool a = same(RunSync(mp, data));
  const bool b = same(RunSync(dp, data));
  const bool c = same(RunSync(both, data));
  return {a && b && c, Fmt("bit-identical: dct-mp keep-all %s, dct-dp rank<1 %s, both %s",
                           a ? "yes" : "no", b ? "yes" : "no", c ? "yes" : "no")};
}

// ---- 5. threshold lifespan

Outcome Lifespan() {
  constexpr std::uint64_t kSteps = 10000;
  constexpr double kTol = 0.001;
  const ExperimentResult l1 = RunExperiment(LifespanTaskConfig(1, kSteps));
  const ExperimentResult l1000 = RunExperiment(LifespanTaskConfig(1000, kSteps));
  const std::size_t tensors = l1.run.tensor_ids.size();
  const bool sorts = l1.run.sort_count == tensors * 10000 && l1000.run.sort_count == tensors * 10;
  const double diff = RelDiff(l1000.train.loss, l1.train.loss);
  const bool cpu = l1000.run.compress_cpu_seconds < l1.run.compress_cpu_seconds;
  return {sorts && diff < kTol && cpu,
          Fmt("sorts/tensor %llu vs %llu; loss %.6f vs %.6f (rel diff %.4f%%, tol 0.1%%); "
              "compress cpu %.3fs vs %.3fs",
              static_cast<unsigned long long>(l1.run.sort_count / tensors),
              static_cast<unsigned long long>(l1000.run.sort_count / tensors), l1.train.loss,
              l1000.train.loss, 100 * diff, l1.run.compress_cpu_seconds,
              l1000.run.compress_cpu_seconds)};
}

// ---- 6. DLRM-shaped task

double DlrmTestLoss(const std::vector<std::size_t>& splits, CodecConfig mp) {
  return RunExperiment(DlrmTaskConfig(splits, mp)).test.loss;
}

Outcome DlrmTable() {
  constexpr double kWithin = 0.005;
  constexpr double kMeasurable = 0.0005;
  const double base = DlrmTestLoss({}, {});
  const double one95 = DlrmTestLoss({5}, {CodecKind::kDctMp, 0.95});
  const double two90 = DlrmTestLoss({5, 6}, {CodecKind::kDctMp, 0.9});
  const double two95 = DlrmTestLoss({5, 6}, {CodecKind::kDctMp, 0.95});
  const double d1 = (one95 - base) / base;
  const double d2 = (two90 - base) / base;
  const double order = (two95 - two90) / two90;
  return {d1 < kWithin && d2 < kWithin && order > kMeasurable,
          Fmt("test loss base %.5f; 1 split eta .95 %+.3f%%; 2 splits eta .9 %+.3f%%, "
              "eta .95 worse than .9 by %+.3f%% (need > %.2f%%)",
              base, 100 * d1, 100 * d2, 100 * order, 100 * kMeasurable)};
}

// ---- 7. second-order probe

Outcome Probe() {
  const double eps = 0.02;
  const ProbeInstance a = PerturbationInstance(eps);
  const ProbeInstance b = PerturbationInstance(eps / 2);
  const ProbeReport ra = TheoremProbe(a.graph, a.params, a.data, {});
  const ProbeReport rb = TheoremProbe(b.graph, b.params, b.data, {});
  const double resid = std::max(ra.assumption_residual, rb.assumption_residual);
  const double ratio = ra.discrepancy / rb.discrepancy;
  return {resid < 1e-10 && ratio >= 3.5 && ratio <= 4.5,
          Fmt("residual %.1e; discrepancy %.3e at eps=%.2f, %.3e at eps/2, ratio %.3f", resid,
              ra.discrepancy, eps, rb.discrepancy, ratio)};
}

// ---- 8. byte accounting

Outcome Bytes() {
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<std::size_t> dim(1, 40);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  int bad = 0;
  for (int i = 0; i < 100; ++i) {
    DenseMatrix m(dim(rng), dim(rng));
    for (double& v : m.values()) v = normal(rng);
    std::bernoulli_distribution keep(density(rng));
    std::vector<std::uint8_t> mask(m.size());
    for (auto& k : mask) k = keep(rng);
    const SparseUpdate bitmap = SparseUpdate::FromMask(m, mask, Encoding::kBitmap);
    const std::size_t nnz = bitmap.nnz();
    const auto frame = [&](const SparseUpdate& u) {
      return Encode({MessageKind::kActivationFwd, 1, 0, u}).size();
    };
    bad += frame(SparseUpdate::Dense(m)) != oracle::DenseFrame(m.rows(), m.cols());
    bad += frame(bitmap) != oracle::BitmapFrame(m.rows(), m.cols(), nnz);
    bad += frame(SparseUpdate::FromMask(m, mask, Encoding::kIndexList)) !=
           oracle::IndexListFrame(nnz);
  }

  constexpr std::size_t kD = 5120;
  std::vector<double> x(kD);
  for (double& v : x) v = normal(rng);
  const SparseUpdate mp = MaskForward(Row(x), 0.95).masked;
  const double mp_elem = static_cast<double>(kD) / static_cast<double>(mp.nnz());
  const double mp_byte = static_cast<double>(oracle::DenseFrame(1, kD)) /
                         static_cast<double>(FrameBytes(mp.encoding, 1, kD, mp.nnz()));
  ThresholdState st;
  ErrorBuffer err(1, kD);
  const SparseUpdate dp = CompressDp(Row(x), st, err, 0.99, 1).update;
  const double dp_elem = static_cast<double>(kD) / static_cast<double>(dp.nnz());
  const double dp_byte = static_cast<double>(oracle::DenseFrame(1, kD)) /
                         static_cast<double>(FrameBytes(dp.encoding, 1, kD, dp.nnz()));
  return {bad == 0 && mp_elem >= 20.0 && dp_elem >= 100.0,
          Fmt("%d/300 frame-size mismatches; d=%zu eta .95 mask: %zu kept, %.2fx elements "
              "(need 20x), %.2fx bytes; eta .99 dp: %zu kept, %.2fx elements (need 100x), "
              "%.2fx bytes",
              bad, kD, mp.nnz(), mp_elem, mp_byte, dp.nnz(), dp_elem, dp_byte)};
}

// ---- 9. negative baselines

Outcome NegativeBaselines() {
  CodecConfig sketch{CodecKind::kGaussianSketch};
  sketch.sketch_compression = 0.75;
  const double sk = DlrmTestLoss({5}, sketch);
  const double mp75 = DlrmTestLoss({5}, {CodecKind::kDctMp, 0.75});
  const double tk = DlrmTestLoss({5}, {CodecKind::kTopKGradEf, 0.9});
  const double mp90 = DlrmTestLoss({5}, {CodecKind::kDctMp, 0.9});
  return {sk > mp75 && tk > mp90,
          Fmt("test loss: sketch 75%% %.5f vs dct-mp %.5f; top-k+ef x_grad 90%% %.5f vs "
              "dct-mp %.5f",
              sk, mp75, tk, mp90)};
}

// ---- 10. threshold trace

Outcome ThresholdTrace() {
  CodecConfig measure{CodecKind::kDctMp, 0.9};
  measure.measure_only = true;
  const ExperimentResult masked = RunExperiment(DlrmTaskConfig({5}, {CodecKind::kDctMp, 0.9}));
  const ExperimentResult unmasked = RunExperiment(DlrmTaskConfig({5}, measure));
  const double a = masked.run.log.back().split_tau.at(0);
  const double b = unmasked.run.log.back().split_tau.at(0);
  return {a < b && masked.run.log.back().iteration == unmasked.run.log.back().iteration,
          Fmt("final mean per-row threshold: masked %.4f, unmasked measurement %.4f", a, b)};
}

// ---- 11. async

Outcome Async() {
  constexpr double kTol = 1e-4;
  LeastSquaresTask task = MakeLeastSquaresTask(1);
  const std::vector<double> opt = LeastSquaresOptimum(task.data);
  task.cfg.steps = 8000;
  task.cfg.dp = {CodecKind::kDctDp, 0.95, 1};
  AsyncConfig hog;
  hog.streams = 4;
  hog.shared_error_buffer = true;
  hog.drain = {DrainMode::kStochastic, 500};
  hog.staleness_bound = 1000;
  const double dist = DistanceToOptimum(RunAsync(task.cfg, hog, task.data).final_params, opt);

  AsyncConfig one;
  one.streams = 1;
  task.cfg.steps = 500;
  const RunResult s = RunSync(task.cfg, task.data);
  const RunResult a = RunAsync(task.cfg, one, task.data);
  bool same = a.final_params == s.final_params && a.log.size() == s.log.size();
  for (std::size_t i = 0; same && i < a.log.size(); ++i) same = a.log[i].loss == s.log[i].loss;
  return {dist < kTol && same, Fmt("4 streams: distance %.2e (tol %.0e); 1 stream == sync: %s",
                                   dist, kTol, same ? "yes" : "no")};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& Criteria() {
  static const std::vector<Criterion> all = {
      {1, "gradient correctness", 10, GradientCheck},
      {2, "contraction and top-k oracle", 10, Contraction},
      {3, "error-feedback convergence", 30, ErrorFeedback},
      {4, "keep-all identity", 30, KeepAllIdentity},
      {5, "threshold lifespan", 120, Lifespan},
      {6, "dlrm-shaped loss table", 300, DlrmTable},
      {7, "second-order probe", 30, Probe},
      {8, "byte accounting", 10, Bytes},
      {9, "sketch and top-k baselines", 300, NegativeBaselines},
      {10, "threshold trace", 300, ThresholdTrace},
      {11, "async hogwild", 60, Async},
  };
  return all;
}

int Run(int only) {
  int failures = 0;
  for (const Criterion& c : Criteria()) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s criterion %d (%s): %s [%.1fs, budget %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id,
                c.name, o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace dct

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }
  return dct::Run(only);
}
