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
#ifndef DCT_RUNTIME_H_
#define DCT_RUNTIME_H_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <memory>
#include <string>
#include <vector>

#include "dct/codec.h"
#include "dct/data.h"
#include "dct/nn.h"
#include "dct/transport.h"

namespace dct {

// --------------------------------------------------------------------------
// Topology

enum class NodeKind { kParameterServer, kMpWorker, kTrainerAggregator };

// Half-open layer range [begin, end) owned by one MP worker.
struct Partition {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Partition&, const Partition&) = default;
};

struct NodeRole {
  NodeKind kind = NodeKind::kMpWorker;
  std::string name;
  std::size_t trainer = 0;
  Partition partition;
  std::vector<std::string> peers;
};

// One partition per MP worker, cut at the graph's split positions.
std::vector<Partition> PartitionsFromSplits(const LayerGraph& graph);
// Partitions must tile the layer sequence with every split on a boundary.
void ValidatePartitions(const LayerGraph& graph, const std::vector<Partition>& partitions);
std::vector<NodeRole> BuildTopology(const LayerGraph& graph, std::size_t trainers);

std::string WorkerName(std::size_t trainer, std::size_t worker);
inline constexpr const char* kServerName = "ps";

// --------------------------------------------------------------------------
// Parameter server

/// params[kept indices] -= lr * values; every other entry untouched.
void ApplyUpdate(ModelParams& params, std::uint32_t tensor_id, const SparseUpdate& update,
                 double lr);

struct AuditEntry {
  std::uint64_t iteration = 0;
  std::size_t trainer = 0;
  std::uint32_t tensor_id = 0;
  SparseUpdate update;
};

// Folds every audited update into `initial`.
ModelParams ReplayAudit(const ModelParams& initial, const std::vector<AuditEntry>& log, double lr);
// Audit logs are stored as a sequence of param-grad wire frames.
std::vector<std::uint8_t> EncodeAuditLog(const std::vector<AuditEntry>& log);
std::vector<AuditEntry> DecodeAuditLog(std::span<const std::uint8_t> bytes);

/// Authoritative model. Apply() is safe to call from concurrent streams under
/// hogwild rules: element updates are atomic loads/stores, so concurrent
/// writers may lose updates but never tear a value.
class ParameterServer {
 public:
  explicit ParameterServer(const ModelParams& initial);

  ModelParams Snapshot() const;
  DenseMatrix Tensor(std::uint32_t tensor_id) const;
  void Apply(std::uint32_t tensor_id, const SparseUpdate& update, double lr);
  // Marks the end of one trainer push; returns the new version.
  std::uint64_t CommitPush() { return version_.fetch_add(1) + 1; }
  std::uint64_t version() const { return version_.load(); }

 private:
  struct Slot {
    std::uint32_t id = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::unique_ptr<std::atomic<double>[]> data;
  };
  const Slot& Find(std::uint32_t tensor_id) const;

  ModelParams shape_;
  std::vector<Slot> slots_;
  std::atomic<std::uint64_t> version_{0};
};

// --------------------------------------------------------------------------
// Training

enum class StalenessPolicy { kFail, kClamp };

struct AsyncConfig {
  std::size_t streams = 1;
  bool shared_error_buffer = true;
  DrainPolicy drain;
  std::uint64_t staleness_bound = 16;
  StalenessPolicy staleness_policy = StalenessPolicy::kFail;

  void Validate() const;
};

struct TrainConfig {
  LayerGraph graph;
  CodecConfig mp;  // Attached at every split.
  CodecConfig dp;  // Trainer -> server gradient path.
  double lr = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t steps = 100;
  std::uint64_t seed = 1;
  std::size_t trainers = 1;
  Precision precision = Precision::k64;
  TransportMode transport = TransportMode::kInProcess;
  CostModel cost;
  DrainPolicy drain;  // Error-buffer drain for synchronous runs.
  bool audit = false;
  bool track_error_norm = true;

  void Validate() const;
};

// Parameters every run starts from.
ModelParams InitialParams(const TrainConfig& cfg);

struct CompressionTally {
  std::uint64_t messages = 0;
  std::uint64_t dense_elements = 0;
  std::uint64_t kept_elements = 0;
  std::uint64_t dense_bytes = 0;  // Frame bytes had the tensor been sent dense.
  std::uint64_t wire_bytes = 0;   // Frame bytes actually sent.

  double ElementRatio() const;
  double ByteRatio() const;
  void Add(std::size_t rows, std::size_t cols, const SparseUpdate& sent);
};

struct IterationRecord {
  std::uint64_t iteration = 0;
  std::size_t stream = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::uint64_t> link_bytes;  // Cumulative, by LinkId.
  std::vector<double> tensor_tau;         // DP threshold per tensor.
  std::vector<double> split_tau;          // Mean per-row MP threshold per split.
  std::vector<double> split_density;      // Kept fraction per split.
  std::uint64_t staleness = 0;
  double error_max = 0.0;                 // L-infinity norm of DP error buffers.
};

struct RunResult {
  std::vector<IterationRecord> log;
  std::vector<std::string> link_names;
  std::vector<std::uint32_t> tensor_ids;
  std::size_t splits = 0;
  std::size_t streams = 1;
  ModelParams initial_params;
  ModelParams final_params;
  ChannelMeter meter;
  double simulated_time = 0.0;
  std::uint64_t sort_count = 0;
  double compress_cpu_seconds = 0.0;
  CompressionTally mp_forward;
  CompressionTally mp_backward;
  CompressionTally dp;
  std::vector<AuditEntry> audit;
  std::map<std::uint64_t, std::uint64_t> staleness_histogram;
  std::uint64_t dropped_updates = 0;
  std::uint64_t drain_events = 0;
  std::string error_buffer_mode;
};

/// Synchronous hybrid training: every iteration each trainer pulls the model,
/// runs the MP pipeline with split codecs, compresses its gradients and
/// pushes them to the server in trainer order.
RunResult RunSync(const TrainConfig& cfg, const Dataset& train);

/// Hogwild-style training with `async.streams` concurrent update streams
/// sharing the server and, optionally, the error buffers. `cfg.steps` counts
/// pushes across all streams.
RunResult RunAsync(const TrainConfig& cfg, const AsyncConfig& async, const Dataset& train);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Forward pass over `data` with the split codecs applied (no transport).
EvalResult Evaluate(const TrainConfig& cfg, const ModelParams& params, const Dataset& data);

struct BaselineResult {
  std::vector<double> losses;
  ModelParams final_params;
};

// Plain single-process SGD on the same batches and initial parameters.
BaselineResult RunBaseline(const TrainConfig& cfg, const Dataset& train);

}  // namespace dct

#endif  // DCT_RUNTIME_H_
