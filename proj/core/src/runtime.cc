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
#include "dct/runtime.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "dct/error.h"
#include "dct/wire.h"

namespace dct {

namespace {

constexpr std::uint64_t kTagInit = 21;
constexpr std::uint64_t kTagDrain = 22;
constexpr std::uint64_t kTagBatches = 23;
constexpr std::uint64_t kEvalIteration = std::numeric_limits<std::uint64_t>::max();

std::string LayerRange(const Partition& p) {
  return "[" + std::to_string(p.begin) + ", " + std::to_string(p.end) + ")";
}

}  // namespace

// --------------------------------------------------------------------------
// Topology

std::vector<Partition> PartitionsFromSplits(const LayerGraph& graph) {
  std::vector<Partition> out;
  std::size_t begin = 0;
  for (std::size_t s : graph.splits) {
    out.push_back({begin, s});
    begin = s;
  }
  out.push_back({begin, graph.layers.size()});
  return out;
}

void ValidatePartitions(const LayerGraph& graph, const std::vector<Partition>& partitions) {
  if (partitions.empty()) throw Error(ErrorCode::kPartitionMismatch, "no partitions");
  std::size_t expect = 0;
  for (const Partition& p : partitions) {
    if (p.begin != expect) {
      throw Error(ErrorCode::kPartitionMismatch,
                  "partition " + LayerRange(p) + " does not start at layer " +
                      std::to_string(expect));
    }
    if (p.end <= p.begin) {
      throw Error(ErrorCode::kPartitionMismatch, "partition " + LayerRange(p) + " is empty");
    }
    expect = p.end;
  }
  if (expect != graph.layers.size()) {
    throw Error(ErrorCode::kPartitionMismatch,
                "partitions cover " + std::to_string(expect) + " of " +
                    std::to_string(graph.layers.size()) + " layers");
  }
  for (std::size_t s : graph.splits) {
    bool on_boundary = false;
    for (const Partition& p : partitions) on_boundary = on_boundary || p.begin == s;
    if (!on_boundary) {
      throw Error(ErrorCode::kPartitionMismatch,
                  "split " + std::to_string(s) + " is inside a partition");
    }
  }
}

std::string WorkerName(std::size_t trainer, std::size_t worker) {
  return "t" + std::to_string(trainer) + ".w" + std::to_string(worker);
}

std::vector<NodeRole> BuildTopology(const LayerGraph& graph, std::size_t trainers) {
  graph.Validate();
  if (trainers == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one trainer");
  const std::vector<Partition> parts = PartitionsFromSplits(graph);
  ValidatePartitions(graph, parts);

  std::vector<NodeRole> nodes;
  NodeRole ps;
  ps.kind = NodeKind::kParameterServer;
  ps.name = kServerName;
  ps.partition = {0, graph.layers.size()};
  nodes.push_back(ps);
  for (std::size_t t = 0; t < trainers; ++t) {
    NodeRole agg;
    agg.kind = NodeKind::kTrainerAggregator;
    agg.name = "t" + std::to_string(t) + ".agg";
    agg.trainer = t;
    agg.partition = {0, graph.layers.size()};
    for (std::size_t w = 0; w < parts.size(); ++w) {
      NodeRole node;
      node.kind = NodeKind::kMpWorker;
      node.name = WorkerName(t, w);
      node.trainer = t;
      node.partition = parts[w];
      if (w > 0) node.peers.push_back(WorkerName(t, w - 1));
      if (w + 1 < parts.size()) node.peers.push_back(WorkerName(t, w + 1));
      node.peers.push_back(kServerName);
      nodes[0].peers.push_back(node.name);
      agg.peers.push_back(node.name);
      nodes.push_back(node);
    }
    nodes.push_back(agg);
  }
  return nodes;
}

// --------------------------------------------------------------------------
// Parameter server

namespace {

void CheckUpdateShape(std::uint32_t tensor_id, std::size_t rows, std::size_t cols,
                      const SparseUpdate& update) {
  if (update.rows != rows || update.cols != cols) {
    throw Error(ErrorCode::kShapeMismatch,
                "update for tensor " + std::to_string(tensor_id) + " is " +
                    std::to_string(update.rows) + "x" + std::to_string(update.cols) +
                    ", tensor is " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  update.Validate();
}

}  // namespace

void ApplyUpdate(ModelParams& params, std::uint32_t tensor_id, const SparseUpdate& update,
                 double lr) {
  DenseMatrix& t = TensorById(params, tensor_id);
  CheckUpdateShape(tensor_id, t.rows(), t.cols(), update);
  auto v = t.values();
  if (update.encoding == Encoding::kDense) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * update.values[i];
  } else {
    for (std::size_t j = 0; j < update.indices.size(); ++j) {
      v[update.indices[j]] -= lr * update.values[j];
    }
  }
}

ModelParams ReplayAudit(const ModelParams& initial, const std::vector<AuditEntry>& log,
                        double lr) {
  ModelParams p = initial;
  for (const AuditEntry& e : log) ApplyUpdate(p, e.tensor_id, e.update, lr);
  return p;
}

std::vector<std::uint8_t> EncodeAuditLog(const std::vector<AuditEntry>& log) {
  std::vector<std::uint8_t> out;
  for (const AuditEntry& e : log) {
    const auto frame = Encode({MessageKind::kParamGrad, e.iteration, e.tensor_id, e.update});
    out.insert(out.end(), frame.begin(), frame.end());
  }
  return out;
}

std::vector<AuditEntry> DecodeAuditLog(std::span<const std::uint8_t> bytes) {
  std::vector<AuditEntry> out;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t len = FrameLengthFromHeader(bytes.subspan(pos));
    if (pos + len > bytes.size()) {
      throw Error(ErrorCode::kTruncatedFrame,
                  "audit frame at byte " + std::to_string(pos) + " is truncated");
    }
    WireMessage m = Decode(bytes.subspan(pos, len));
    out.push_back({m.iteration, 0, m.tensor_id, std::move(m.payload)});
    pos += len;
  }
  return out;
}

ParameterServer::ParameterServer(const ModelParams& initial) : shape_(initial) {
  for (std::uint32_t id : TensorIds(initial)) {
    const DenseMatrix& t = TensorById(initial, id);
    Slot s;
    s.id = id;
    s.rows = t.rows();
    s.cols = t.cols();
    s.data = std::make_unique<std::atomic<double>[]>(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) s.data[i].store(t.values()[i]);
    slots_.push_back(std::move(s));
  }
}

const ParameterServer::Slot& ParameterServer::Find(std::uint32_t tensor_id) const {
  for (const Slot& s : slots_) {
    if (s.id == tensor_id) return s;
  }
  throw Error(ErrorCode::kUnknownLayer, "server has no tensor " + std::to_string(tensor_id));
}

DenseMatrix ParameterServer::Tensor(std::uint32_t tensor_id) const {
  const Slot& s = Find(tensor_id);
  DenseMatrix out(s.rows, s.cols);
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = s.data[i].load(std::memory_order_relaxed);
  return out;
}

ModelParams ParameterServer::Snapshot() const {
  ModelParams p = shape_;
  for (const Slot& s : slots_) TensorById(p, s.id) = Tensor(s.id);
  return p;
}

void ParameterServer::Apply(std::uint32_t tensor_id, const SparseUpdate& update, double lr) {
  const Slot& s = Find(tensor_id);
  CheckUpdateShape(tensor_id, s.rows, s.cols, update);
  auto step = [&](std::size_t i, double v) {
    auto& a = s.data[i];
    a.store(a.load(std::memory_order_relaxed) - lr * v, std::memory_order_relaxed);
  };
  if (update.encoding == Encoding::kDense) {
    for (std::size_t i = 0; i < update.values.size(); ++i) step(i, update.values[i]);
  } else {
    for (std::size_t j = 0; j < update.indices.size(); ++j) {
      step(update.indices[j], update.values[j]);
    }
  }
}

// --------------------------------------------------------------------------
// Configuration

void AsyncConfig::Validate() const {
  if (streams < 1) throw Error(ErrorCode::kInvalidArgument, "async: streams must be >= 1");
  if (drain.mode != DrainMode::kNever && drain.interval < 1) {
    throw Error(ErrorCode::kInvalidArgument, "async: drain interval must be >= 1");
  }
}

void TrainConfig::Validate() const {
  graph.Validate();
  ValidatePartitions(graph, PartitionsFromSplits(graph));
  mp.Validate();
  dp.Validate();
  if (mp.kind == CodecKind::kDctDp) {
    throw Error(ErrorCode::kInvalidArgument, "dct-dp cannot be attached to a split");
  }
  if (dp.kind != CodecKind::kNone && dp.kind != CodecKind::kDctDp) {
    throw Error(ErrorCode::kInvalidArgument,
                "codec '" + CodecKindName(dp.kind) + "' cannot compress parameter gradients");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be finite and >= 0");
  }
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "steps must be >= 1");
  if (trainers < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one trainer");
  if (drain.mode != DrainMode::kNever && drain.interval < 1) {
    throw Error(ErrorCode::kInvalidArgument, "drain interval must be >= 1");
  }
  if (transport == TransportMode::kLoopbackSocket && precision != Precision::k32) {
    throw Error(ErrorCode::kInvalidArgument, "socket transport requires 32-bit precision");
  }
}

ModelParams InitialParams(const TrainConfig& cfg) {
  return Network(cfg.graph).InitParams(DeriveSeed(cfg.seed, kTagInit));
}

double CompressionTally::ElementRatio() const {
  return kept_elements == 0 ? std::numeric_limits<double>::infinity()
                            : static_cast<double>(dense_elements) / static_cast<double>(kept_elements);
}

double CompressionTally::ByteRatio() const {
  return wire_bytes == 0 ? std::numeric_limits<double>::infinity()
                         : static_cast<double>(dense_bytes) / static_cast<double>(wire_bytes);
}

void CompressionTally::Add(std::size_t rows, std::size_t cols, const SparseUpdate& sent) {
  ++messages;
  dense_elements += rows * cols;
  kept_elements += sent.nnz();
  dense_bytes += FrameBytes(Encoding::kDense, rows, cols, rows * cols);
  wire_bytes += FrameBytes(sent.encoding, sent.rows, sent.cols, sent.nnz());
}

namespace {

CompressionTally& operator+=(CompressionTally& a, const CompressionTally& b) {
  a.messages += b.messages;
  a.dense_elements += b.dense_elements;
  a.kept_elements += b.kept_elements;
  a.dense_bytes += b.dense_bytes;
  a.wire_bytes += b.wire_bytes;
  return a;
}

// --------------------------------------------------------------------------
// Training internals

// Per-trainer (or per-stream) state: engine, codecs, links and counters.
struct Trainer {
  std::size_t index = 0;
  std::unique_ptr<Network> net;
  std::vector<std::unique_ptr<SplitCodec>> split_codecs;
  std::unique_ptr<GradientCodec> dp;
  DctDpCodec* dct_dp = nullptr;
  std::vector<LinkId> fwd, bwd;    // Per split.
  std::vector<LinkId> push, pull;  // Per worker.
  ModelParams local;
  CompressionTally mp_forward, mp_backward, dp_tally;
  std::mt19937_64 drain_rng;
  std::unique_ptr<BatchSchedule> schedule;
  std::uint64_t iteration = 0;
};

class TransportTap final : public SplitTap {
 public:
  TransportTap(Transport& transport, Trainer& trainer) : tr_(transport), t_(trainer) {}

  DenseMatrix Forward(std::size_t s, const DenseMatrix& a) override {
    SparseUpdate p = t_.split_codecs[s]->EncodeForward(a, {t_.iteration, s});
    t_.mp_forward.Add(a.rows(), a.cols(), p);
    tr_.Send(t_.fwd[s], {MessageKind::kActivationFwd, t_.iteration,
                         static_cast<std::uint32_t>(s), std::move(p)});
    WireMessage m = tr_.Recv(t_.fwd[s]);
    return t_.split_codecs[s]->DecodeForward(m.payload);
  }

  DenseMatrix Backward(std::size_t s, const DenseMatrix& g) override {
    SparseUpdate p = t_.split_codecs[s]->EncodeBackward(g, {t_.iteration, s});
    t_.mp_backward.Add(g.rows(), g.cols(), p);
    tr_.Send(t_.bwd[s], {MessageKind::kGradBwd, t_.iteration, static_cast<std::uint32_t>(s),
                         std::move(p)});
    WireMessage m = tr_.Recv(t_.bwd[s]);
    return t_.split_codecs[s]->DecodeBackward(m.payload);
  }

 private:
  Transport& tr_;
  Trainer& t_;
};

// Codec-only tap for evaluation: no transport, values rounded as the wire
// would round them.
class EvalTap final : public SplitTap {
 public:
  EvalTap(std::vector<std::unique_ptr<SplitCodec>>& codecs, Precision precision)
      : codecs_(codecs), precision_(precision) {}

  DenseMatrix Forward(std::size_t s, const DenseMatrix& a) override {
    SparseUpdate p = codecs_[s]->EncodeForward(a, {kEvalIteration, s});
    if (precision_ == Precision::k32) p = RoundToWire(std::move(p));
    return codecs_[s]->DecodeForward(p);
  }
  DenseMatrix Backward(std::size_t, const DenseMatrix& g) override { return g; }

 private:
  std::vector<std::unique_ptr<SplitCodec>>& codecs_;
  Precision precision_;
};

class Engine {
 public:
  Engine(const TrainConfig& cfg, const Dataset& train, std::size_t trainers)
      : cfg_(cfg),
        train_(train),
        transport_(cfg.transport, cfg.precision, cfg.cost),
        initial_(InitialParams(cfg)),
        server_(initial_),
        parts_(PartitionsFromSplits(cfg.graph)) {
    cfg_.Validate();
    if (train.size() < cfg.batch_size) {
      throw Error(ErrorCode::kEmptyInput, "training set has " + std::to_string(train.size()) +
                                              " rows, fewer than one batch of " +
                                              std::to_string(cfg.batch_size));
    }
    tensor_ids_ = TensorIds(initial_);
    for (std::uint32_t id : tensor_ids_) {
      const std::size_t layer = id / 2;
      for (std::size_t w = 0; w < parts_.size(); ++w) {
        if (layer >= parts_[w].begin && layer < parts_[w].end) owner_[id] = w;
      }
    }
    for (std::size_t j = 0; j < trainers; ++j) AddTrainer(j);
  }

  void AddTrainer(std::size_t j) {
    auto t = std::make_unique<Trainer>();
    t->index = j;
    t->net = std::make_unique<Network>(cfg_.graph);
    for (std::size_t s = 0; s < cfg_.graph.splits.size(); ++s) {
      t->split_codecs.push_back(MakeSplitCodec(cfg_.mp, s));
    }
    t->dp = MakeGradientCodec(cfg_.dp);
    t->dct_dp = dynamic_cast<DctDpCodec*>(t->dp.get());
    for (std::size_t s = 0; s < cfg_.graph.splits.size(); ++s) {
      t->fwd.push_back(transport_.Connect(WorkerName(j, s), WorkerName(j, s + 1)));
      t->bwd.push_back(transport_.Connect(WorkerName(j, s + 1), WorkerName(j, s)));
    }
    for (std::size_t w = 0; w < parts_.size(); ++w) {
      t->push.push_back(transport_.Connect(WorkerName(j, w), kServerName));
      t->pull.push_back(transport_.Connect(kServerName, WorkerName(j, w)));
    }
    t->drain_rng.seed(DeriveSeed(cfg_.seed, kTagDrain, j));
    t->schedule = std::make_unique<BatchSchedule>(train_.size(), cfg_.batch_size,
                                                  DeriveSeed(cfg_.seed, kTagBatches));
    trainers_.push_back(std::move(t));
  }

  // Error buffers shared by every trainer.
  void ShareErrorBuffers() {
    for (std::uint32_t id : tensor_ids_) {
      const DenseMatrix& shape = TensorById(initial_, id);
      auto buf = std::make_shared<ErrorBuffer>(shape.rows(), shape.cols());
      for (auto& t : trainers_) {
        if (t->dct_dp) t->dct_dp->AttachErrorBuffer(id, buf);
      }
    }
  }

  // Server -> workers transfer of every tensor each worker owns.
  void SendModel(Trainer& t, MessageKind kind, std::uint64_t iteration) {
    if (t.local.layers.empty()) t.local = initial_;
    for (std::uint32_t id : tensor_ids_) {
      const LinkId link = t.pull[owner_.at(id)];
      transport_.Send(link, {kind, iteration, id, SparseUpdate::Dense(server_.Tensor(id))});
      WireMessage m = transport_.Recv(link);
      TensorById(t.local, id) = m.payload.ToDense();
    }
  }

  struct StepOutput {
    double loss = 0.0;
    double accuracy = 0.0;
    ModelParams gradients;
  };

  StepOutput Compute(Trainer& t, std::uint64_t batch_index) {
    const Batch batch = t.schedule->Get(train_, batch_index);
    TransportTap tap(transport_, t);
    StepOutput out;
    ForwardState fs = t.net->Forward(t.local, batch, &tap);
    out.loss = fs.loss;
    out.accuracy = t.net->Accuracy(fs, batch);
    BackwardResult bw = t.net->Backward(t.local, batch, fs, &tap);
    out.gradients = std::move(bw.gradients);
    return out;
  }

  // Compress every tensor, ship it to the server and apply it there.
  void Push(Trainer& t, const ModelParams& gradients, std::uint64_t iteration) {
    for (std::uint32_t id : tensor_ids_) {
      const DenseMatrix& g = TensorById(gradients, id);
      const std::uint64_t refreshes = t.dp->refresh_count();
      SparseUpdate u = t.dp->Compress(id, g);
      if (t.dp->refresh_count() != refreshes) transport_.RecordSort(g.size());
      t.dp_tally.Add(g.rows(), g.cols(), u);
      const LinkId link = t.push[owner_.at(id)];
      transport_.Send(link, {MessageKind::kParamGrad, iteration, id, std::move(u)});
      WireMessage m = transport_.Recv(link);
      server_.Apply(id, m.payload, cfg_.lr);
      if (cfg_.audit) {
        std::lock_guard<std::mutex> lock(audit_mu_);
        audit_.push_back({iteration, t.index, id, std::move(m.payload)});
      }
    }
  }

  void DrainBuffers(Trainer& t) {
    if (!t.dct_dp) return;
    for (std::uint32_t id : tensor_ids_) t.dct_dp->error(id).Drain();
  }

  double ErrorMax(Trainer& t) {
    if (!t.dct_dp || !cfg_.track_error_norm) return 0.0;
    double m = 0.0;
    for (std::uint32_t id : tensor_ids_) m = std::max(m, t.dct_dp->error(id).MaxAbs());
    return m;
  }

  IterationRecord Record(Trainer& t, std::uint64_t iteration, const StepOutput& step) {
    IterationRecord r;
    r.iteration = iteration;
    r.stream = t.index;
    r.loss = step.loss;
    r.accuracy = step.accuracy;
    r.link_bytes = transport_.LinkBytes();
    for (std::uint32_t id : tensor_ids_) r.tensor_tau.push_back(t.dp->threshold(id));
    for (const auto& c : t.split_codecs) {
      r.split_tau.push_back(c->last_mean_threshold());
      r.split_density.push_back(c->last_density());
    }
    r.error_max = ErrorMax(t);
    return r;
  }

  RunResult Finish(std::vector<IterationRecord> log) {
    RunResult out;
    out.log = std::move(log);
    for (LinkId i = 0; i < transport_.link_count(); ++i) {
      out.link_names.push_back(transport_.LinkName(i));
    }
    out.tensor_ids = tensor_ids_;
    out.splits = cfg_.graph.splits.size();
    out.streams = trainers_.size();
    out.initial_params = initial_;
    out.final_params = server_.Snapshot();
    out.meter = transport_.Snapshot();
    out.simulated_time = transport_.SimulatedTime();
    for (const auto& t : trainers_) {
      out.sort_count += t->dp->refresh_count();
      out.compress_cpu_seconds += t->dp->compress_cpu_seconds();
      out.mp_forward += t->mp_forward;
      out.mp_backward += t->mp_backward;
      out.dp += t->dp_tally;
    }
    out.audit = std::move(audit_);
    return out;
  }

  const TrainConfig& cfg() const { return cfg_; }
  Transport& transport() { return transport_; }
  ParameterServer& server() { return server_; }
  std::vector<std::unique_ptr<Trainer>>& trainers() { return trainers_; }

 private:
  TrainConfig cfg_;
  const Dataset& train_;
  Transport transport_;
  ModelParams initial_;
  ParameterServer server_;
  std::vector<Partition> parts_;
  std::vector<std::uint32_t> tensor_ids_;
  std::map<std::uint32_t, std::size_t> owner_;
  std::vector<std::unique_ptr<Trainer>> trainers_;
  std::mutex audit_mu_;
  std::vector<AuditEntry> audit_;
};

[[noreturn]] void Rethrow(const Error& e, std::uint64_t iteration) {
  throw Error(e.code(), "iteration " + std::to_string(iteration) + ": " + e.message());
}

}  // namespace

RunResult RunSync(const TrainConfig& cfg, const Dataset& train) {
  Engine engine(cfg, train, cfg.trainers);
  auto& trainers = engine.trainers();
  for (auto& t : trainers) engine.SendModel(*t, MessageKind::kModelPush, 0);

  std::vector<IterationRecord> log;
  std::uint64_t drains = 0;
  const std::size_t n = trainers.size();
  for (std::uint64_t it = 0; it < cfg.steps; ++it) {
    try {
      std::vector<Engine::StepOutput> steps(n);
      for (std::size_t j = 0; j < n; ++j) {
        Trainer& t = *trainers[j];
        t.iteration = it;
        if (it > 0) engine.SendModel(t, MessageKind::kModelPull, it);
        steps[j] = engine.Compute(t, it * n + j);
      }
      for (std::size_t j = 0; j < n; ++j) {
        engine.Push(*trainers[j], steps[j].gradients, it);
        engine.server().CommitPush();
      }
      if (cfg.drain.ShouldDrain(it + 1, trainers[0]->drain_rng)) {
        for (auto& t : trainers) engine.DrainBuffers(*t);
        ++drains;
      }
      for (std::size_t j = 0; j < n; ++j) log.push_back(engine.Record(*trainers[j], it, steps[j]));
    } catch (const Error& e) {
      Rethrow(e, it);
    }
  }
  RunResult out = engine.Finish(std::move(log));
  out.drain_events = drains;
  out.error_buffer_mode = n > 1 ? "per-trainer" : "single";
  return out;
}

RunResult RunAsync(const TrainConfig& cfg, const AsyncConfig& async, const Dataset& train) {
  async.Validate();
  Engine engine(cfg, train, async.streams);
  if (async.shared_error_buffer) engine.ShareErrorBuffers();
  auto& trainers = engine.trainers();
  for (auto& t : trainers) engine.SendModel(*t, MessageKind::kModelPush, 0);

  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;  // Guards the fields below.
  std::vector<IterationRecord> log;
  std::map<std::uint64_t, std::uint64_t> histogram;
  std::uint64_t dropped = 0;
  std::uint64_t drains = 0;
  std::exception_ptr failure;

  auto stream = [&](Trainer& t) {
    std::uint64_t it = 0;
    try {
      while (!stop.load()) {
        it = next.fetch_add(1);
        if (it >= cfg.steps) break;
        t.iteration = it;
        for (;;) {
          const std::uint64_t pulled_at = engine.server().version();
          if (it > 0) engine.SendModel(t, MessageKind::kModelPull, it);
          Engine::StepOutput step = engine.Compute(t, it);
          const std::uint64_t staleness = engine.server().version() - pulled_at;
          if (staleness > async.staleness_bound) {
            if (async.staleness_policy == StalenessPolicy::kFail) {
              throw Error(ErrorCode::kStalenessExceeded,
                          "staleness " + std::to_string(staleness) + " exceeds bound " +
                              std::to_string(async.staleness_bound));
            }
            std::lock_guard<std::mutex> lock(mu);
            ++dropped;
            continue;
          }
          engine.Push(t, step.gradients, it);
          const std::uint64_t completed = engine.server().CommitPush();
          bool drained = false;
          if (async.drain.ShouldDrain(completed, t.drain_rng)) {
            if (async.shared_error_buffer) {
              engine.DrainBuffers(*trainers[0]);
            } else {
              engine.DrainBuffers(t);
            }
            drained = true;
          }
          IterationRecord rec = engine.Record(t, it, step);
          rec.staleness = staleness;
          std::lock_guard<std::mutex> lock(mu);
          ++histogram[staleness];
          drains += drained ? 1 : 0;
          log.push_back(std::move(rec));
          break;
        }
      }
    } catch (const Error& e) {
      std::lock_guard<std::mutex> lock(mu);
      if (!failure) {
        failure = std::make_exception_ptr(
            Error(e.code(), "stream " + std::to_string(t.index) + ", iteration " +
                                std::to_string(it) + ": " + e.message()));
      }
      stop.store(true);
    }
  };

  if (trainers.size() == 1) {
    stream(*trainers[0]);
  } else {
    std::vector<std::thread> threads;
    for (auto& t : trainers) threads.emplace_back(stream, std::ref(*t));
    for (auto& th : threads) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(log.begin(), log.end(), [](const IterationRecord& a, const IterationRecord& b) {
    return a.iteration < b.iteration;
  });
  RunResult out = engine.Finish(std::move(log));
  out.staleness_histogram = std::move(histogram);
  out.dropped_updates = dropped;
  out.drain_events = drains;
  out.error_buffer_mode =
      trainers.size() == 1 ? "single" : (async.shared_error_buffer ? "shared" : "per-stream");
  return out;
}

EvalResult Evaluate(const TrainConfig& cfg, const ModelParams& params, const Dataset& data) {
  if (data.size() == 0) throw Error(ErrorCode::kEmptyInput, "evaluation set is empty");
  Network net(cfg.graph);
  std::vector<std::unique_ptr<SplitCodec>> codecs;
  for (std::size_t s = 0; s < cfg.graph.splits.size(); ++s) {
    codecs.push_back(MakeSplitCodec(cfg.mp, s));
  }
  EvalTap tap(codecs, cfg.precision);
  constexpr std::size_t kChunk = 1024;
  double loss = 0.0;
  double correct = 0.0;
  for (std::size_t begin = 0; begin < data.size(); begin += kChunk) {
    const std::size_t end = std::min(data.size(), begin + kChunk);
    const Batch batch = data.Rows(begin, end);
    ForwardState fs = net.Forward(params, batch, &tap);
    const double rows = static_cast<double>(end - begin);
    loss += fs.loss * rows;
    correct += net.Accuracy(fs, batch) * rows;
  }
  const double n = static_cast<double>(data.size());
  return {loss / n, correct / n};
}

BaselineResult RunBaseline(const TrainConfig& cfg, const Dataset& train) {
  cfg.Validate();
  Network net(cfg.graph);
  BaselineResult out;
  out.final_params = InitialParams(cfg);
  BatchSchedule schedule(train.size(), cfg.batch_size, DeriveSeed(cfg.seed, kTagBatches));
  const std::size_t n = cfg.trainers;
  for (std::uint64_t it = 0; it < cfg.steps; ++it) {
    // Trainers see the same model within an iteration, then update in order.
    const ModelParams snapshot = out.final_params;
    for (std::size_t j = 0; j < n; ++j) {
      const Batch batch = schedule.Get(train, it * n + j);
      ForwardState fs = net.Forward(snapshot, batch);
      out.losses.push_back(fs.loss);
      SgdStep(out.final_params, net.Backward(snapshot, batch, fs).gradients, cfg.lr);
    }
  }
  return out;
}

}  // namespace dct
