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
#include "dct/config.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "dct/error.h"
#include "json.hpp"

namespace dct {

using nlohmann::json;

std::string RunModeName(RunMode mode) { return mode == RunMode::kSync ? "sync" : "async"; }

RunMode ParseRunMode(const std::string& name) {
  if (name == "sync") return RunMode::kSync;
  if (name == "async") return RunMode::kAsync;
  throw Error(ErrorCode::kConfig, "unknown mode '" + name + "' (expected sync or async)");
}

std::string DrainModeName(DrainMode mode) {
  switch (mode) {
    case DrainMode::kNever: return "never";
    case DrainMode::kDeterministic: return "deterministic";
    case DrainMode::kStochastic: return "stochastic";
  }
  return "?";
}

DrainMode ParseDrainMode(const std::string& name) {
  if (name == "never") return DrainMode::kNever;
  if (name == "deterministic") return DrainMode::kDeterministic;
  if (name == "stochastic") return DrainMode::kStochastic;
  throw Error(ErrorCode::kConfig, "unknown drain mode '" + name + "'");
}

int PrecisionBits(Precision p) { return p == Precision::k64 ? 64 : 32; }

Precision ParsePrecision(int bits) {
  if (bits == 64) return Precision::k64;
  if (bits == 32) return Precision::k32;
  throw Error(ErrorCode::kConfig, "precision must be 32 or 64, got " + std::to_string(bits));
}

namespace {

std::string TransportName(TransportMode m) {
  return m == TransportMode::kInProcess ? "in-process" : "loopback-socket";
}

TransportMode ParseTransport(const std::string& name) {
  if (name == "in-process") return TransportMode::kInProcess;
  if (name == "loopback-socket") return TransportMode::kLoopbackSocket;
  throw Error(ErrorCode::kConfig, "unknown transport '" + name + "'");
}

LayerKind ParseActivation(const std::string& name) {
  if (name == "relu") return LayerKind::kRelu;
  if (name == "sigmoid") return LayerKind::kSigmoid;
  throw Error(ErrorCode::kConfig, "unknown activation '" + name + "'");
}

std::string LossName(LossKind k) { return k == LossKind::kBinaryCrossEntropy ? "bce" : "mse"; }

LossKind ParseLoss(const std::string& name) {
  if (name == "bce") return LossKind::kBinaryCrossEntropy;
  if (name == "mse") return LossKind::kMeanSquaredError;
  throw Error(ErrorCode::kConfig, "unknown loss '" + name + "'");
}

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be rejected.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) Fail(path_.empty() ? "config" : path_, "expected an object");
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.count(key)) Fail(Path(key), "unknown key");
    }
  }

  bool Has(const std::string& key) const { return obj_.contains(key); }

  template <typename T>
  void Get(const std::string& key, T& out) {
    if (!obj_.contains(key)) return;
    used_.insert(key);
    const json& v = obj_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      Fail(Path(key), e.what());
    }
  }

  template <typename T>
  void GetList(const std::string& key, std::vector<T>& out) {
    if (!obj_.contains(key)) return;
    used_.insert(key);
    const json& v = obj_.at(key);
    if (!v.is_array()) Fail(Path(key), "expected an array");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const bool ok = std::is_unsigned_v<T> ? v[i].is_number_unsigned() : v[i].is_number();
      if (!ok) Fail(Path(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<T>());
    }
  }

  // Applies `fn` to a parse of the string field through the given parser.
  template <typename T, typename Parser>
  void GetEnum(const std::string& key, T& out, Parser parse) {
    std::string s;
    if (!obj_.contains(key)) return;
    Get(key, s);
    try {
      out = parse(s);
    } catch (const Error& e) {
      Fail(Path(key), e.message());
    }
  }

  template <typename Fn>
  void Object(const std::string& key, Fn fn) {
    if (!obj_.contains(key)) return;
    used_.insert(key);
    Reader sub(obj_.at(key), Path(key));
    fn(sub);
  }

  const json& Raw(const std::string& key) {
    used_.insert(key);
    return obj_.at(key);
  }

  std::string Path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  [[noreturn]] static void Fail(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::kConfig, where + ": " + what);
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

void ReadCodec(Reader& r, CodecConfig& c) {
  r.GetEnum("kind", c.kind, [](const std::string& s) {
    try {
      return ParseCodecKind(s);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, e.message());
    }
  });
  r.Get("eta", c.eta);
  r.Get("lifespan", c.lifespan);
  r.Get("measure_only", c.measure_only);
  r.Get("sketch_compression", c.sketch_compression);
  r.Get("sketch_seed", c.sketch_seed);
}

json WriteCodec(const CodecConfig& c) {
  return {{"kind", CodecKindName(c.kind)},
          {"eta", c.eta},
          {"lifespan", c.lifespan},
          {"measure_only", c.measure_only},
          {"sketch_compression", c.sketch_compression},
          {"sketch_seed", c.sketch_seed}};
}

void ReadDrain(Reader& r, DrainPolicy& d) {
  r.GetEnum("mode", d.mode, ParseDrainMode);
  r.Get("interval", d.interval);
}

json WriteDrain(const DrainPolicy& d) {
  return {{"mode", DrainModeName(d.mode)}, {"interval", d.interval}};
}

// Syntax errors carry a byte offset; turn it into line:column.
std::string LineColumn(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

std::string LineText(const std::string& text, std::size_t byte) {
  std::size_t begin = text.rfind('\n', byte == 0 ? 0 : byte - 1);
  begin = begin == std::string::npos ? 0 : begin + 1;
  std::size_t end = text.find('\n', begin);
  if (end == std::string::npos) end = text.size();
  return text.substr(begin, end - begin);
}

}  // namespace

ExperimentConfig ParseConfig(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t at = e.byte == 0 ? 0 : e.byte - 1;
    std::string msg = e.what();
    const std::size_t colon = msg.find("syntax error");
    if (colon != std::string::npos) msg = msg.substr(colon);
    throw Error(ErrorCode::kConfig, source + ":" + LineColumn(text, at) + ": " + msg +
                                        "\n  | " + LineText(text, at));
  }

  ExperimentConfig c;
  try {
    Reader r(root, "");
    r.Get("name", c.name);
    r.Get("seed", c.seed);
    r.Object("model", [&](Reader& m) {
      m.GetList("widths", c.model.widths);
      m.GetEnum("hidden_activation", c.model.hidden_activation, ParseActivation);
      m.GetEnum("loss", c.model.loss, ParseLoss);
      m.GetList("splits", c.model.splits);
    });
    r.Object("dataset", [&](Reader& d) {
      d.GetEnum("kind", c.dataset.kind, [](const std::string& s) {
        try {
          return ParseDatasetKind(s);
        } catch (const Error& e) {
          throw Error(ErrorCode::kConfig, e.message());
        }
      });
      d.Get("dims", c.dataset.dims);
      d.Get("samples", c.dataset.samples);
      d.Get("seed", c.dataset.seed);
      d.Get("test_fraction", c.dataset.test_fraction);
      d.Get("separation", c.dataset.separation);
      d.Get("noise", c.dataset.noise);
      d.Get("path", c.dataset.path);
    });
    r.Object("codecs", [&](Reader& k) {
      k.Object("mp", [&](Reader& m) { ReadCodec(m, c.mp); });
      k.Object("dp", [&](Reader& m) { ReadCodec(m, c.dp); });
    });
    r.Object("optimizer", [&](Reader& o) { o.Get("lr", c.lr); });
    r.Get("batch_size", c.batch_size);
    r.Get("steps", c.steps);
    r.Get("trainers", c.trainers);
    r.GetEnum("mode", c.mode, ParseRunMode);
    if (r.Has("precision")) {
      int bits = 64;
      r.Get("precision", bits);
      try {
        c.precision = ParsePrecision(bits);
      } catch (const Error& e) {
        Reader::Fail("precision", e.message());
      }
    }
    r.GetEnum("transport", c.transport, ParseTransport);
    r.Object("async", [&](Reader& a) {
      a.Get("streams", c.async.streams);
      a.Get("shared_error_buffer", c.async.shared_error_buffer);
      a.Object("drain", [&](Reader& d) { ReadDrain(d, c.async.drain); });
      a.Get("staleness_bound", c.async.staleness_bound);
      a.GetEnum("staleness_policy", c.async.staleness_policy, [](const std::string& s) {
        if (s == "fail") return StalenessPolicy::kFail;
        if (s == "clamp") return StalenessPolicy::kClamp;
        throw Error(ErrorCode::kConfig, "unknown staleness policy '" + s + "'");
      });
    });
    r.Object("drain", [&](Reader& d) { ReadDrain(d, c.drain); });
    r.Object("cost_model", [&](Reader& m) {
      m.Get("latency_seconds", c.cost.latency_seconds);
      if (m.Has("bandwidth_bytes_per_second")) {
        const json& v = m.Raw("bandwidth_bytes_per_second");
        if (v.is_null()) {
          c.cost.bandwidth_bytes_per_second = std::numeric_limits<double>::infinity();
        } else if (v.is_number()) {
          c.cost.bandwidth_bytes_per_second = v.get<double>();
        } else {
          Reader::Fail(m.Path("bandwidth_bytes_per_second"), "expected a number or null");
        }
      }
      m.Get("sort_seconds_per_element", c.cost.sort_seconds_per_element);
    });
    r.Object("output", [&](Reader& o) {
      o.Get("dir", c.out_dir);
      o.Get("audit", c.audit);
    });
    r.Object("sweep", [&](Reader& s) {
      s.GetList("lifespans", c.sweep.lifespans);
      s.GetList("etas", c.sweep.etas);
    });
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, source + ": " + e.message());
  }
  try {
    c.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, source + ": " + e.message());
  }
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), path);
}

std::string SerializeConfig(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["model"] = {{"widths", c.model.widths},
                {"hidden_activation", LayerKindName(c.model.hidden_activation)},
                {"loss", LossName(c.model.loss)},
                {"splits", c.model.splits}};
  j["dataset"] = {{"kind", DatasetKindName(c.dataset.kind)},
                  {"dims", c.dataset.dims},
                  {"samples", c.dataset.samples},
                  {"seed", c.dataset.seed},
                  {"test_fraction", c.dataset.test_fraction},
                  {"separation", c.dataset.separation},
                  {"noise", c.dataset.noise},
                  {"path", c.dataset.path}};
  j["codecs"] = {{"mp", WriteCodec(c.mp)}, {"dp", WriteCodec(c.dp)}};
  j["optimizer"] = {{"lr", c.lr}};
  j["batch_size"] = c.batch_size;
  j["steps"] = c.steps;
  j["trainers"] = c.trainers;
  j["mode"] = RunModeName(c.mode);
  j["precision"] = PrecisionBits(c.precision);
  j["transport"] = TransportName(c.transport);
  j["async"] = {{"streams", c.async.streams},
                {"shared_error_buffer", c.async.shared_error_buffer},
                {"drain", WriteDrain(c.async.drain)},
                {"staleness_bound", c.async.staleness_bound},
                {"staleness_policy",
                 c.async.staleness_policy == StalenessPolicy::kFail ? "fail" : "clamp"}};
  j["drain"] = WriteDrain(c.drain);
  json bw = nullptr;
  if (std::isfinite(c.cost.bandwidth_bytes_per_second)) bw = c.cost.bandwidth_bytes_per_second;
  j["cost_model"] = {{"latency_seconds", c.cost.latency_seconds},
                     {"bandwidth_bytes_per_second", bw},
                     {"sort_seconds_per_element", c.cost.sort_seconds_per_element}};
  j["output"] = {{"dir", c.out_dir}, {"audit", c.audit}};
  j["sweep"] = {{"lifespans", c.sweep.lifespans}, {"etas", c.sweep.etas}};
  return j.dump(2) + "\n";
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return SerializeConfig(a) == SerializeConfig(b);
}

LayerGraph ExperimentConfig::Graph() const {
  const LayerKind out_act = model.loss == LossKind::kBinaryCrossEntropy
                                ? LayerKind::kSigmoid
                                : LayerKind::kFullyConnected;  // No output activation.
  LayerGraph g = LayerGraph::Mlp(dataset.dims, model.widths, model.hidden_activation, out_act,
                                 model.loss);
  // Block k ends after FC k and its activation.
  for (std::size_t k : model.splits) g.splits.push_back(2 * k);
  return g;
}

TrainConfig ExperimentConfig::ToTrainConfig() const {
  TrainConfig t;
  t.graph = Graph();
  t.mp = mp;
  t.dp = dp;
  t.lr = lr;
  t.batch_size = batch_size;
  t.steps = steps;
  t.seed = seed;
  t.trainers = trainers;
  t.precision = precision;
  t.transport = transport;
  t.cost = cost;
  t.drain = drain;
  t.audit = audit;
  return t;
}

void ExperimentConfig::Validate() const {
  auto fail = [](const std::string& where, const std::string& what) {
    throw Error(ErrorCode::kConfig, where + ": " + what);
  };
  if (model.widths.empty()) fail("model.widths", "at least one layer is required");
  for (std::size_t w : model.widths) {
    if (w == 0) fail("model.widths", "widths must be positive");
  }
  if (model.loss == LossKind::kBinaryCrossEntropy && model.widths.back() != 1) {
    fail("model.widths", "bce loss needs a final width of 1");
  }
  if (model.loss == LossKind::kMeanSquaredError && model.widths.back() != 1) {
    fail("model.widths", "regression targets are scalar; final width must be 1");
  }
  for (std::size_t i = 0; i < model.splits.size(); ++i) {
    const std::size_t k = model.splits[i];
    if (k < 1 || k >= model.widths.size()) {
      fail("model.splits", "split " + std::to_string(k) + " must lie between FC blocks 1.." +
                               std::to_string(model.widths.size() - 1));
    }
    if (i > 0 && k <= model.splits[i - 1]) fail("model.splits", "splits must be increasing");
  }
  if (dataset.dims == 0) fail("dataset.dims", "must be positive");
  if (dataset.kind == DatasetKind::kCsv && dataset.path.empty()) {
    fail("dataset.path", "csv datasets need a path");
  }
  if (!(dataset.test_fraction >= 0.0 && dataset.test_fraction < 1.0)) {
    fail("dataset.test_fraction", "must be in [0, 1)");
  }
  if (dataset.kind == DatasetKind::kSyntheticRegression &&
      model.loss != LossKind::kMeanSquaredError) {
    fail("model.loss", "regression data needs mse loss");
  }
  if (dataset.kind == DatasetKind::kSyntheticClassification &&
      model.loss != LossKind::kBinaryCrossEntropy) {
    fail("model.loss", "classification data needs bce loss");
  }
  try {
    mp.Validate();
  } catch (const Error& e) {
    fail("codecs.mp", e.message());
  }
  try {
    dp.Validate();
  } catch (const Error& e) {
    fail("codecs.dp", e.message());
  }
  if (mp.kind == CodecKind::kDctDp) fail("codecs.mp", "dct-dp cannot be attached to a split");
  if (dp.kind != CodecKind::kNone && dp.kind != CodecKind::kDctDp) {
    fail("codecs.dp", "codec '" + CodecKindName(dp.kind) + "' cannot compress gradients");
  }
  if (mp.kind != CodecKind::kNone && model.splits.empty()) {
    fail("codecs.mp", "a split codec is configured but the model has no splits");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("optimizer.lr", "must be finite and >= 0");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (steps < 1) fail("steps", "must be >= 1");
  if (trainers < 1) fail("trainers", "must be >= 1");
  if (mode == RunMode::kAsync && trainers != 1) {
    fail("trainers", "async runs use async.streams instead of trainers");
  }
  if (async.streams < 1) fail("async.streams", "must be >= 1");
  if (async.drain.mode != DrainMode::kNever && async.drain.interval < 1) {
    fail("async.drain.interval", "must be >= 1");
  }
  if (drain.mode != DrainMode::kNever && drain.interval < 1) {
    fail("drain.interval", "must be >= 1");
  }
  if (!(cost.latency_seconds >= 0.0)) fail("cost_model.latency_seconds", "must be >= 0");
  if (!(cost.bandwidth_bytes_per_second > 0.0)) {
    fail("cost_model.bandwidth_bytes_per_second", "must be positive (null for unlimited)");
  }
  if (!(cost.sort_seconds_per_element >= 0.0)) {
    fail("cost_model.sort_seconds_per_element", "must be >= 0");
  }
  if (transport == TransportMode::kLoopbackSocket && precision != Precision::k32) {
    fail("transport", "socket transport requires 32-bit precision");
  }
  if (!sweep.lifespans.empty() && !sweep.etas.empty()) {
    fail("sweep", "sweep either lifespans or etas, not both");
  }
  for (std::uint64_t l : sweep.lifespans) {
    if (l < 1) fail("sweep.lifespans", "life-spans must be >= 1");
  }
  for (double e : sweep.etas) {
    if (!(e >= 0.0 && e <= 1.0)) fail("sweep.etas", "eta must be in [0, 1]");
  }
  if (out_dir.empty()) fail("output.dir", "must not be empty");
}

ExperimentConfig DefaultConfig() {
  ExperimentConfig c;
  c.name = "dlrm-synthetic";
  c.model.widths = {512, 256, 64, 16, 512, 256, 128, 1};
  c.model.hidden_activation = LayerKind::kRelu;
  c.model.loss = LossKind::kBinaryCrossEntropy;
  c.dataset.kind = DatasetKind::kSyntheticClassification;
  c.dataset.dims = 13;
  c.dataset.samples = 10000;
  c.lr = 0.05;
  c.batch_size = 32;
  c.steps = 500;
  return c;
}

}  // namespace dct
