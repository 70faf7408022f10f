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
#include <random>

#include "benchmark/benchmark.h"
#include "dct/codec.h"
#include "dct/nn.h"
#include "dct/wire.h"

namespace {

dct::DenseMatrix RandomMatrix(std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  dct::DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

// DP compression of one tensor; range(1) is the threshold life-span, so the
// sort cost is amortized over L calls.
void BM_CompressDp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto lifespan = static_cast<std::uint64_t>(state.range(1));
  const dct::DenseMatrix g = RandomMatrix(1, n);
  dct::ThresholdState st;
  dct::ErrorBuffer err(1, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dct::CompressDp(g, st, err, 0.99, lifespan));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_CompressDp)->Args({1 << 16, 1})->Args({1 << 16, 10})->Args({1 << 16, 1000});

void BM_MaskForward(benchmark::State& state) {
  const dct::DenseMatrix a = RandomMatrix(32, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dct::MaskForward(a, 0.95));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(a.size()));
}
BENCHMARK(BM_MaskForward)->Arg(512)->Arg(5120);

void BM_EncodeDecode(benchmark::State& state) {
  const auto enc = static_cast<dct::Encoding>(state.range(0));
  const dct::MaskForwardResult r = dct::MaskForward(RandomMatrix(32, 5120), 0.95);
  const dct::WireMessage m{dct::MessageKind::kActivationFwd, 1, 0,
                           dct::Reencode(r.masked, enc)};
  for (auto _ : state) {
    const auto bytes = dct::Encode(m);
    benchmark::DoNotOptimize(dct::Decode(bytes));
    state.SetBytesProcessed(state.bytes_processed() + static_cast<std::int64_t>(bytes.size()));
  }
}
BENCHMARK(BM_EncodeDecode)->Arg(0)->Arg(1)->Arg(2);

void BM_DlrmForwardBackward(benchmark::State& state) {
  const dct::LayerGraph g = dct::LayerGraph::Mlp(
      13, {512, 256, 64, 16, 512, 256, 128, 1}, dct::LayerKind::kRelu,
      dct::LayerKind::kSigmoid, dct::LossKind::kBinaryCrossEntropy);
  dct::Network net(g);
  const dct::ModelParams p = net.InitParams(1);
  dct::Batch b{RandomMatrix(32, 13), dct::DenseMatrix(32, 1)};
  for (auto _ : state) {
    const dct::ForwardState fs = net.Forward(p, b);
    benchmark::DoNotOptimize(net.Backward(p, b, fs));
  }
}
BENCHMARK(BM_DlrmForwardBackward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
