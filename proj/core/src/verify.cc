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
#include "dct/verify.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "dct/codec.h"
#include "dct/error.h"
#include "dct/experiment.h"
#include "dct/nn.h"
#include "dct/probe.h"
#include "dct/runtime.h"
#include "dct/tasks.h"
#include "dct/wire.h"

namespace dct {

bool VerifyReport::passed() const {
  for (const VerifyCase& c : cases) {
    if (!c.pass) return false;
  }
  return !cases.empty();
}

std::string VerifyReport::ToString() const {
  std::ostringstream s;
  for (const VerifyCase& c : cases) {
    s << (c.pass ? "PASS " : "FAIL ") << suite << "/" << c.name;
    if (!c.detail.empty()) s << "  " << c.detail;
    s << "\n";
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s: %s (%zu cases, %.2fs)\n", suite.c_str(),
                passed() ? "ok" : "FAILED", cases.size(), seconds);
  s << buf;
  return s.str();
}

namespace {

std::string Sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

// Random vector; every fourth one is quantized to force magnitude ties.
std::vector<double> RandomVector(std::mt19937_64& rng, std::size_t n, bool ties) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = ties ? std::round(2.0 * normal(rng)) / 2.0 : normal(rng);
  return x;
}

constexpr double kEtas[] = {0.5, 0.9, 0.95};

DenseMatrix Row(const std::vector<double>& x) {
  DenseMatrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.values().begin());
  return m;
}

std::vector<VerifyCase> Contraction(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(1, 64);
  std::map<double, std::pair<int, double>> stats;  // eta -> (violations, worst slack)
  for (int i = 0; i < 10000; ++i) {
    const double eta = kEtas[i % 3];
    const auto x = RandomVector(rng, len(rng), i % 4 == 3);
    ThresholdState st;
    ErrorBuffer err(1, x.size());
    const SparseUpdate u = CompressDp(Row(x), st, err, eta, 1).update;
    const DenseMatrix w = u.ToDense();
    const std::size_t kept = u.nnz();
    double resid = 0.0;
    double norm = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      resid += (x[j] - w[j]) * (x[j] - w[j]);
      norm += x[j] * x[j];
    }
    const double bound =
        (1.0 - static_cast<double>(kept) / static_cast<double>(x.size())) * norm;
    auto& s = stats[eta];
    if (resid > bound * (1.0 + 1e-12)) ++s.first;
    s.second = std::max(s.second, resid - bound);
  }
  std::vector<VerifyCase> out;
  for (const auto& [eta, s] : stats) {
    char name[32];
    std::snprintf(name, sizeof(name), "eta=%.2f", eta);
    out.push_back({name, s.first == 0,
                   std::to_string(s.first) + " violations, max(lhs-rhs)=" + Sci(s.second)});
  }
  return out;
}

std::vector<VerifyCase> TopKOracle(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 1);
  std::uniform_int_distribution<std::size_t> len(1, 64);
  std::map<double, int> mismatches;
  int tie_cases = 0;
  for (int i = 0; i < 10000; ++i) {
    const double eta = kEtas[i % 3];
    const auto x = RandomVector(rng, len(rng), i % 4 == 3);
    const std::size_t n = x.size();
    ThresholdState st;
    ErrorBuffer err(1, n);
    const SparseUpdate u = CompressDp(Row(x), st, err, eta, 1).update;

    // Brute force: order by magnitude, descending; keep the top n - rank + 1
    // plus anything tied with the last kept magnitude.
    std::vector<double> mags(n);
    for (std::size_t j = 0; j < n; ++j) mags[j] = std::abs(x[j]);
    std::vector<double> desc = mags;
    std::sort(desc.begin(), desc.end(), std::greater<>());
    const std::size_t rank = static_cast<std::size_t>(std::floor(static_cast<double>(n) * eta));
    const std::size_t k = rank < 1 ? n : n - rank + 1;
    const double cut = rank < 1 ? 0.0 : desc[k - 1];
    std::vector<std::uint32_t> expect;
    for (std::size_t j = 0; j < n; ++j) {
      if (mags[j] >= cut) expect.push_back(static_cast<std::uint32_t>(j));
    }
    if (expect.size() > k) ++tie_cases;
    if (expect != u.indices || st.tau != cut) ++mismatches[eta];
  }
  std::vector<VerifyCase> out;
  for (double eta : kEtas) {
    char name[32];
    std::snprintf(name, sizeof(name), "eta=%.2f", eta);
    out.push_back({name, mismatches[eta] == 0,
                   std::to_string(mismatches[eta]) + " mismatches of 3334"});
  }
  out.push_back({"ties-exercised", tie_cases > 0, std::to_string(tie_cases) + " tie cases"});
  return out;
}

SparseUpdate RandomUpdate(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dim(1, 24);
  std::uniform_int_distribution<int> enc(0, 2);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 3.0);
  const std::size_t rows = dim(rng);
  const std::size_t cols = dim(rng);
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = normal(rng);
  const auto e = static_cast<Encoding>(enc(rng));
  if (e == Encoding::kDense) return SparseUpdate::Dense(m);
  const double p = density(rng);
  std::bernoulli_distribution keep(p);
  std::vector<std::uint8_t> mask(m.size());
  for (auto& b : mask) b = keep(rng);
  return SparseUpdate::FromMask(m, mask, e);
}

std::vector<VerifyCase> Roundtrip(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 2);
  int bad_roundtrip = 0;
  int bad_size = 0;
  int bad_reencode = 0;
  for (int i = 0; i < 1000; ++i) {
    WireMessage m;
    m.kind = static_cast<MessageKind>(i % 5);
    m.iteration = rng();
    m.tensor_id = static_cast<std::uint32_t>(rng() % 1000);
    m.payload = RandomUpdate(rng);
    const auto bytes = Encode(m);
    if (bytes.size() != FrameBytes(m.payload.encoding, m.payload.rows, m.payload.cols,
                                   m.payload.nnz())) {
      ++bad_size;
    }
    WireMessage want = m;
    want.payload = RoundToWire(m.payload);
    if (Decode(bytes) != want) ++bad_roundtrip;
    // Same kept set in every encoding.
    for (Encoding e : {Encoding::kBitmap, Encoding::kIndexList}) {
      if (Reencode(Reencode(m.payload, e), m.payload.encoding) != m.payload &&
          m.payload.encoding != Encoding::kDense) {
        ++bad_reencode;
      }
    }
  }
  std::vector<VerifyCase> out;
  out.push_back({"encode-decode", bad_roundtrip == 0, std::to_string(bad_roundtrip) + " of 1000"});
  out.push_back({"frame-size", bad_size == 0, std::to_string(bad_size) + " of 1000"});
  out.push_back({"reencode", bad_reencode == 0, std::to_string(bad_reencode) + " of 2000"});

  // Malformed frames map to distinct errors.
  WireMessage m{MessageKind::kParamGrad, 7, 3, RandomUpdate(rng)};
  m.payload = Reencode(m.payload, Encoding::kBitmap);
  const auto good = Encode(m);
  auto expect = [&](const char* name, std::vector<std::uint8_t> frame, ErrorCode code) {
    try {
      Decode(frame);
      out.push_back({name, false, "decoded without error"});
    } catch (const Error& e) {
      out.push_back({name, e.code() == code, std::string(ErrorCodeName(e.code()))});
    }
  };
  expect("truncated", {good.begin(), good.begin() + 20}, ErrorCode::kTruncatedFrame);
  auto bad = good;
  bad[0] = 'X';
  expect("bad-magic", bad, ErrorCode::kBadMagic);
  bad = good;
  bad[4] = 9;
  expect("bad-version", bad, ErrorCode::kBadVersion);
  bad = good;
  bad[6] = 7;
  expect("bad-encoding", bad, ErrorCode::kBadEncoding);
  bad = good;
  bad.push_back(0);
  expect("trailing-bytes", bad, ErrorCode::kTrailingBytes);
  return out;
}

// Central differences on every parameter of a random small network.
double GradcheckNetwork(std::mt19937_64& rng, std::string* what) {
  std::uniform_int_distribution<std::size_t> width(1, 6);
  std::uniform_int_distribution<int> depth(1, 3);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int layers = depth(rng);
  std::vector<std::size_t> widths;
  for (int i = 0; i + 1 < layers; ++i) widths.push_back(width(rng));
  const bool bce = coin(rng);
  widths.push_back(bce ? 1 : width(rng));
  const LayerKind hidden = coin(rng) ? LayerKind::kRelu : LayerKind::kSigmoid;
  const std::size_t in = width(rng);
  LayerGraph g = LayerGraph::Mlp(in, widths, hidden,
                                 bce ? LayerKind::kSigmoid
                                     : (coin(rng) ? LayerKind::kSigmoid : LayerKind::kFullyConnected),
                                 bce ? LossKind::kBinaryCrossEntropy : LossKind::kMeanSquaredError);
  *what = std::to_string(in);
  for (std::size_t w : widths) *what += "-" + std::to_string(w);
  *what += std::string(" ") + LayerKindName(hidden) + (bce ? " bce" : " mse");

  Network net(g);
  const ModelParams p = net.InitParams(rng());
  const std::size_t rows = 4;
  Batch b{DenseMatrix(rows, in), DenseMatrix(rows, g.output_dim())};
  // Resample inputs until no ReLU pre-activation sits near its kink.
  for (int attempt = 0; attempt < 100; ++attempt) {
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
  const ForwardState fs = net.Forward(p, b);
  const ModelParams grad = net.Backward(p, b, fs).gradients;

  constexpr double kStep = 1e-5;
  double worst = 0.0;
  ModelParams q = p;
  for (std::uint32_t id : TensorIds(p)) {
    DenseMatrix& t = TensorById(q, id);
    const DenseMatrix& gt = TensorById(grad, id);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double orig = t[i];
      t[i] = orig + kStep;
      const double up = net.Loss(q, b);
      t[i] = orig - kStep;
      const double down = net.Loss(q, b);
      t[i] = orig;
      const double numeric = (up - down) / (2.0 * kStep);
      const double denom = std::max({std::abs(numeric), std::abs(gt[i]), 1e-6});
      worst = std::max(worst, std::abs(numeric - gt[i]) / denom);
    }
  }
  return worst;
}

std::vector<VerifyCase> Gradcheck(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 3);
  std::vector<VerifyCase> out;
  for (int i = 0; i < 20; ++i) {
    std::string what;
    const double err = GradcheckNetwork(rng, &what);
    out.push_back({"net" + std::to_string(i), err < 1e-4, what + " max rel err " + Sci(err)});
  }
  return out;
}

std::vector<VerifyCase> TheoremProbeSuite(std::uint64_t seed) {
  std::vector<VerifyCase> out;
  {
    const ProbeInstance inst = DegenerateInstance(seed);
    const ProbeReport r = TheoremProbe(inst.graph, inst.params, inst.data, {0.5});
    out.push_back({"degenerate", r.discrepancy == 0.0 && r.upstream_discrepancy == 0.0,
                   "discrepancy " + Sci(r.discrepancy)});
  }
  {
    const ProbeInstance inst = PerturbationInstance(0.1, seed);
    const ProbeReport r = TheoremProbe(inst.graph, inst.params, inst.data, {0.0});
    out.push_back({"keep-all", r.discrepancy == 0.0 && r.upstream_discrepancy == 0.0,
                   "discrepancy " + Sci(r.discrepancy)});
  }
  {
    const double eps = 0.02;
    const ProbeInstance a = PerturbationInstance(eps, seed);
    const ProbeInstance b = PerturbationInstance(eps / 2, seed);
    const ProbeReport ra = TheoremProbe(a.graph, a.params, a.data, {0.5});
    const ProbeReport rb = TheoremProbe(b.graph, b.params, b.data, {0.5});
    const double ratio = ra.discrepancy / rb.discrepancy;
    const double resid = std::max(ra.assumption_residual, rb.assumption_residual);
    out.push_back({"assumption-residual", resid < 1e-10, "residual " + Sci(resid)});
    out.push_back({"second-order-decay", ratio >= 3.5 && ratio <= 4.5,
                   "d(eps)=" + Sci(ra.discrepancy) + " d(eps/2)=" + Sci(rb.discrepancy) +
                       " ratio " + std::to_string(ratio)});
  }
  return out;
}

std::vector<VerifyCase> EfConvergence(std::uint64_t seed) {
  LeastSquaresTask task = MakeLeastSquaresTask(seed);
  const std::vector<double> opt = LeastSquaresOptimum(task.data);
  task.cfg.steps = 20000;
  const RunResult plain = RunSync(task.cfg, task.data);
  task.cfg.dp = {CodecKind::kDctDp, 0.99, 100};
  const RunResult dp = RunSync(task.cfg, task.data);
  const double d_plain = DistanceToOptimum(plain.final_params, opt);
  const double d_dp = DistanceToOptimum(dp.final_params, opt);
  return {
      {"uncompressed", d_plain < 1e-6, "distance " + Sci(d_plain)},
      {"dct-dp eta=0.99 L=100", d_dp < 1e-6, "distance " + Sci(d_dp)},
  };
}

std::vector<VerifyCase> LifespanSweep(std::uint64_t seed) {
  constexpr std::uint64_t kSteps = 2000;
  std::vector<VerifyCase> out;
  for (std::uint64_t l : {1, 10, 1000}) {
    ExperimentConfig c = LifespanTaskConfig(l, kSteps);
    c.seed = seed;
    const ExperimentResult r = RunExperiment(c);
    const std::size_t tensors = r.run.tensor_ids.size();
    const std::uint64_t expect = tensors * ((kSteps + l - 1) / l);
    char detail[160];
    std::snprintf(detail, sizeof(detail), "sorts %llu (expect %llu), compress cpu %.3fs, loss %.6f",
                  static_cast<unsigned long long>(r.run.sort_count),
                  static_cast<unsigned long long>(expect), r.run.compress_cpu_seconds,
                  r.train.loss);
    out.push_back({"L=" + std::to_string(l), r.run.sort_count == expect, detail});
  }
  return out;
}

std::vector<VerifyCase> CodecBakeoff(std::uint64_t seed) {
  auto run = [&](CodecConfig mp) {
    // Half-width DLRM shape so four runs fit the suite budget.
    ExperimentConfig c = DlrmTaskConfig({5}, mp);
    c.model.widths = {256, 128, 32, 8, 256, 128, 64, 1};
    c.dataset.samples = 30000;
    c.steps = 1000;
    c.seed = seed;
    return RunExperiment(c).test.loss;
  };
  const double mp75 = run({CodecKind::kDctMp, 0.75});
  const double mp90 = run({CodecKind::kDctMp, 0.9});
  CodecConfig sketch{CodecKind::kGaussianSketch};
  sketch.sketch_compression = 0.75;
  sketch.sketch_seed = seed;
  const double sk = run(sketch);
  const double tk = run({CodecKind::kTopKGradEf, 0.9});
  return {
      {"sketch-75 vs dct-mp-0.75", sk > mp75,
       "test loss " + std::to_string(sk) + " vs " + std::to_string(mp75)},
      {"topk-xgrad-0.9 vs dct-mp-0.9", tk > mp90,
       "test loss " + std::to_string(tk) + " vs " + std::to_string(mp90)},
  };
}

using SuiteFn = std::function<std::vector<VerifyCase>(std::uint64_t)>;

const std::vector<std::pair<std::string, SuiteFn>>& Suites() {
  static const std::vector<std::pair<std::string, SuiteFn>> suites = {
      {"contraction", Contraction},     {"topk-oracle", TopKOracle},
      {"roundtrip", Roundtrip},         {"gradcheck", Gradcheck},
      {"theorem-probe", TheoremProbeSuite}, {"ef-convergence", EfConvergence},
      {"lifespan-sweep", LifespanSweep}, {"codec-bakeoff", CodecBakeoff},
  };
  return suites;
}

}  // namespace

std::vector<std::string> VerifySuiteNames() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : Suites()) names.push_back(name);
  return names;
}

VerifyReport RunVerifySuite(const std::string& suite, std::uint64_t seed) {
  for (const auto& [name, fn] : Suites()) {
    if (name != suite) continue;
    VerifyReport r;
    r.suite = suite;
    const auto start = std::chrono::steady_clock::now();
    r.cases = fn(seed);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }
  std::string known;
  for (const auto& n : VerifySuiteNames()) known += (known.empty() ? "" : ", ") + n;
  throw Error(ErrorCode::kUnknownSuite, "unknown suite '" + suite + "' (known: " + known + ")");
}

}  // namespace dct
