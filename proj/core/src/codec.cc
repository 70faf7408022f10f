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
#include "dct/codec.h"

#include <time.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dct/error.h"

namespace dct {

std::string CodecKindName(CodecKind kind) {
  switch (kind) {
    case CodecKind::kNone: return "none";
    case CodecKind::kDctDp: return "dct-dp";
    case CodecKind::kDctMp: return "dct-mp";
    case CodecKind::kGaussianSketch: return "sketch";
    case CodecKind::kTopKGradEf: return "topk-xgrad";
  }
  return "?";
}

CodecKind ParseCodecKind(const std::string& name) {
  if (name == "none") return CodecKind::kNone;
  if (name == "dct-dp") return CodecKind::kDctDp;
  if (name == "dct-mp") return CodecKind::kDctMp;
  if (name == "sketch") return CodecKind::kGaussianSketch;
  if (name == "topk-xgrad") return CodecKind::kTopKGradEf;
  throw Error(ErrorCode::kInvalidArgument, "unknown codec kind '" + name + "'");
}

void CodecConfig::Validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sparsity factor must lie in [0, 1]");
  }
  if (lifespan < 1) throw Error(ErrorCode::kInvalidArgument, "threshold life-span must be >= 1");
  if (!(sketch_compression >= 0.0 && sketch_compression < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sketch compression must lie in [0, 1)");
  }
}

std::size_t ThresholdRank(std::size_t n, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sparsity factor must lie in [0, 1]");
  }
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * eta));
}

double ThresholdFromSorted(std::span<const double> x, double eta) {
  if (x.empty()) throw Error(ErrorCode::kEmptyInput, "cannot threshold an empty vector");
  const std::size_t rank = ThresholdRank(x.size(), eta);
  if (rank < 1) return 0.0;
  std::vector<double> mags(x.size());
  std::transform(x.begin(), x.end(), mags.begin(), [](double v) { return std::abs(v); });
  std::sort(mags.begin(), mags.end());
  return mags[rank - 1];
}

std::size_t KeptCount(std::span<const double> x, double tau) {
  return static_cast<std::size_t>(
      std::count_if(x.begin(), x.end(), [tau](double v) { return std::abs(v) >= tau; }));
}

bool DrainPolicy::ShouldDrain(std::uint64_t completed, std::mt19937_64& rng) const {
  switch (mode) {
    case DrainMode::kNever:
      return false;
    case DrainMode::kDeterministic:
      return interval > 0 && completed % interval == 0;
    case DrainMode::kStochastic: {
      if (interval == 0) return false;
      std::uniform_real_distribution<double> u(0.0, 1.0);
      return u(rng) < 1.0 / static_cast<double>(interval);
    }
  }
  return false;
}

ErrorBuffer::ErrorBuffer(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(new std::atomic<double>[rows * cols]) {
  Drain();
}

ErrorBuffer::ErrorBuffer(const ErrorBuffer& other) : ErrorBuffer(other.rows_, other.cols_) {
  for (std::size_t i = 0; i < size(); ++i) Set(i, other.Get(i));
}

ErrorBuffer& ErrorBuffer::operator=(const ErrorBuffer& other) {
  if (this != &other) {
    ErrorBuffer copy(other);
    rows_ = copy.rows_;
    cols_ = copy.cols_;
    data_ = std::move(copy.data_);
  }
  return *this;
}

void ErrorBuffer::Drain() {
  for (std::size_t i = 0; i < size(); ++i) Set(i, 0.0);
}

double ErrorBuffer::MaxAbs() const {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m = std::max(m, std::abs(Get(i)));
  return m;
}

DenseMatrix ErrorBuffer::ToDense() const {
  DenseMatrix m(rows_, cols_);
  for (std::size_t i = 0; i < size(); ++i) m[i] = Get(i);
  return m;
}

std::string EncodingName(Encoding e) {
  switch (e) {
    case Encoding::kDense: return "dense";
    case Encoding::kBitmap: return "bitmap";
    case Encoding::kIndexList: return "index-list";
  }
  return "?";
}

DenseMatrix SparseUpdate::ToDense() const {
  Validate();
  if (encoding == Encoding::kDense) return DenseMatrix(rows, cols, values);
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < indices.size(); ++i) m[indices[i]] = values[i];
  return m;
}

void SparseUpdate::Validate() const {
  if (encoding == Encoding::kDense) {
    if (values.size() != size() || !indices.empty()) {
      throw Error(ErrorCode::kShapeMismatch, "dense update carries " +
                                                 std::to_string(values.size()) + " values for " +
                                                 std::to_string(size()) + " entries");
    }
    return;
  }
  if (indices.size() != values.size()) {
    throw Error(ErrorCode::kPopcountMismatch, "index count differs from value count");
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size() || (i > 0 && indices[i] <= indices[i - 1])) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "index " + std::to_string(indices[i]) + " out of range or out of order");
    }
  }
}

SparseUpdate SparseUpdate::Dense(const DenseMatrix& m) {
  SparseUpdate u;
  u.rows = m.rows();
  u.cols = m.cols();
  u.encoding = Encoding::kDense;
  u.values.assign(m.values().begin(), m.values().end());
  return u;
}

SparseUpdate SparseUpdate::FromMask(const DenseMatrix& x, std::span<const std::uint8_t> mask,
                                    Encoding encoding) {
  if (mask.size() != x.size()) {
    throw Error(ErrorCode::kShapeMismatch, "mask size differs from tensor size");
  }
  if (encoding == Encoding::kDense) {
    throw Error(ErrorCode::kBadEncoding, "FromMask requires a sparse encoding");
  }
  SparseUpdate u;
  u.rows = x.rows();
  u.cols = x.cols();
  u.encoding = encoding;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask[i] != 0) {
      u.indices.push_back(static_cast<std::uint32_t>(i));
      u.values.push_back(x[i]);
    }
  }
  return u;
}

DpResult CompressDp(const DenseMatrix& gradient, ThresholdState& state, ErrorBuffer& error,
                    double eta, std::uint64_t lifespan) {
  if (lifespan < 1) throw Error(ErrorCode::kInvalidArgument, "threshold life-span must be >= 1");
  if (gradient.rows() != error.rows() || gradient.cols() != error.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "error buffer " + std::to_string(error.rows()) + "x" +
                                               std::to_string(error.cols()) + " vs gradient " +
                                               gradient.ShapeString());
  }
  DenseMatrix fed(gradient.rows(), gradient.cols());
  for (std::size_t i = 0; i < fed.size(); ++i) {
    fed[i] = gradient[i] + error.Get(i);
    if (!std::isfinite(fed[i])) {
      throw Error(ErrorCode::kNumericOverflow, "non-finite gradient after error feedback");
    }
  }
  DpResult res;
  if (state.k % lifespan == 0) {
    state.tau = ThresholdFromSorted(fed.values(), eta);
    state.last_refresh = state.k;
    ++state.refresh_count;
    res.refreshed = true;
  }
  const double tau = state.tau;
  SparseUpdate& u = res.update;
  u.rows = fed.rows();
  u.cols = fed.cols();
  u.encoding = Encoding::kIndexList;
  for (std::size_t i = 0; i < fed.size(); ++i) {
    const double hat = std::abs(fed[i]) >= tau ? fed[i] : 0.0;
    if (std::abs(fed[i]) >= tau) {
      u.indices.push_back(static_cast<std::uint32_t>(i));
      u.values.push_back(hat);
    }
    error.Set(i, fed[i] - hat);
  }
  ++state.k;
  return res;
}

std::size_t MaskMatrix::KeptInRow(std::size_t r) const {
  return static_cast<std::size_t>(
      std::count(bits.begin() + static_cast<std::ptrdiff_t>(r * cols),
                 bits.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols), std::uint8_t{1}));
}

std::size_t MaskMatrix::Kept() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

double MaskMatrix::MeanThreshold() const {
  if (thresholds.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(thresholds.begin(), thresholds.end(), 0.0) /
         static_cast<double>(thresholds.size());
}

MaskForwardResult MaskForward(const DenseMatrix& activation, double eta,
                              const MaskProvenance& provenance) {
  if (activation.rows() == 0 || activation.cols() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "activation must be at least 1x1");
  }
  MaskForwardResult res;
  MaskMatrix& m = res.mask;
  m.rows = activation.rows();
  m.cols = activation.cols();
  m.bits.assign(activation.size(), 0);
  m.thresholds.resize(activation.rows());
  m.provenance = provenance;
  for (std::size_t r = 0; r < activation.rows(); ++r) {
    const auto row = activation.row(r);
    const double tau = ThresholdFromSorted(row, eta);
    m.thresholds[r] = tau;
    for (std::size_t c = 0; c < row.size(); ++c) {
      m.bits[r * m.cols + c] = std::abs(row[c]) >= tau ? 1 : 0;
    }
  }
  res.masked = SparseUpdate::FromMask(activation, m.bits, Encoding::kBitmap);
  return res;
}

SparseUpdate MaskBackward(const DenseMatrix& gradient, const MaskMatrix& mask) {
  if (gradient.rows() != mask.rows || gradient.cols() != mask.cols) {
    throw Error(ErrorCode::kShapeMismatch, "gradient " + gradient.ShapeString() + " vs mask " +
                                               std::to_string(mask.rows) + "x" +
                                               std::to_string(mask.cols));
  }
  return SparseUpdate::FromMask(gradient, mask.bits, Encoding::kBitmap);
}

SparseUpdate MaskBackward(const DenseMatrix& gradient, const MaskMatrix& mask,
                          const MaskProvenance& expected) {
  if (!(mask.provenance == expected)) {
    throw Error(ErrorCode::kInvalidArgument,
                "mask from iteration " + std::to_string(mask.provenance.iteration) + " split " +
                    std::to_string(mask.provenance.split) + " used for iteration " +
                    std::to_string(expected.iteration) + " split " +
                    std::to_string(expected.split));
  }
  return MaskBackward(gradient, mask);
}

MaskMatrix MaskFromUpdate(const SparseUpdate& update) {
  update.Validate();
  MaskMatrix m;
  m.rows = update.rows;
  m.cols = update.cols;
  if (update.encoding == Encoding::kDense) {
    m.bits.assign(update.size(), 1);
  } else {
    m.bits.assign(update.size(), 0);
    for (auto i : update.indices) m.bits[i] = 1;
  }
  return m;
}

std::size_t SketchWidth(std::size_t input_width, double compression) {
  const double k = std::round(static_cast<double>(input_width) * (1.0 - compression));
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

DenseMatrix GaussianSketchMatrix(const SketchConfig& cfg) {
  if (cfg.input_width == 0 || cfg.sketch_width == 0) {
    throw Error(ErrorCode::kShapeMismatch, "sketch dimensions must be positive");
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(cfg.sketch_width)));
  DenseMatrix s(cfg.input_width, cfg.sketch_width);
  for (double& v : s.values()) v = normal(rng);
  return s;
}

DenseMatrix SketchActivations(const DenseMatrix& activation, const DenseMatrix& sketch) {
  if (activation.cols() != sketch.rows()) {
    throw Error(ErrorCode::kShapeMismatch,
                "sketch " + sketch.ShapeString() + " for activation " + activation.ShapeString());
  }
  DenseMatrix out;
  MatMul(activation, sketch, out);
  return out;
}

DenseMatrix UnsketchActivations(const DenseMatrix& sketched, const DenseMatrix& sketch) {
  if (sketched.cols() != sketch.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                "sketch " + sketch.ShapeString() + " for payload " + sketched.ShapeString());
  }
  DenseMatrix out;
  MatMulTransB(sketched, sketch, out);
  return out;
}

SparseUpdate TopKGradWithEf(const DenseMatrix& gradient, double eta, ErrorBuffer& error) {
  ThresholdState fresh;
  return CompressDp(gradient, fresh, error, eta, 1).update;
}

double SplitCodec::last_mean_threshold() const { return std::numeric_limits<double>::quiet_NaN(); }
double SplitCodec::last_density() const { return std::numeric_limits<double>::quiet_NaN(); }

namespace {

class PassThroughSplitCodec final : public SplitCodec {
 public:
  SparseUpdate EncodeForward(const DenseMatrix& a, const MaskProvenance&) override {
    return SparseUpdate::Dense(a);
  }
  DenseMatrix DecodeForward(const SparseUpdate& p) override { return p.ToDense(); }
  SparseUpdate EncodeBackward(const DenseMatrix& g, const MaskProvenance&) override {
    return SparseUpdate::Dense(g);
  }
  DenseMatrix DecodeBackward(const SparseUpdate& p) override { return p.ToDense(); }
};

class DctMpSplitCodec final : public SplitCodec {
 public:
  DctMpSplitCodec(double eta, bool measure_only) : eta_(eta), measure_only_(measure_only) {}

  SparseUpdate EncodeForward(const DenseMatrix& a, const MaskProvenance& prov) override {
    MaskForwardResult r = MaskForward(a, eta_, prov);
    mean_tau_ = r.mask.MeanThreshold();
    density_ = static_cast<double>(r.mask.Kept()) / static_cast<double>(a.size());
    sender_mask_ = std::move(r.mask);
    if (measure_only_) return SparseUpdate::Dense(a);
    return std::move(r.masked);
  }

  DenseMatrix DecodeForward(const SparseUpdate& p) override {
    receiver_mask_ = MaskFromUpdate(p);
    receiver_mask_.provenance = sender_mask_.provenance;
    return p.ToDense();
  }

  SparseUpdate EncodeBackward(const DenseMatrix& g, const MaskProvenance& prov) override {
    if (measure_only_) return SparseUpdate::Dense(g);
    return MaskBackward(g, receiver_mask_, prov);
  }

  DenseMatrix DecodeBackward(const SparseUpdate& p) override { return p.ToDense(); }

  double last_mean_threshold() const override { return mean_tau_; }
  double last_density() const override { return measure_only_ ? 1.0 : density_; }

 private:
  double eta_;
  bool measure_only_;
  MaskMatrix sender_mask_;
  MaskMatrix receiver_mask_;
  double mean_tau_ = std::numeric_limits<double>::quiet_NaN();
  double density_ = std::numeric_limits<double>::quiet_NaN();
};

class SketchSplitCodec final : public SplitCodec {
 public:
  SketchSplitCodec(double compression, std::uint64_t seed, std::size_t split)
      : compression_(compression), seed_(seed), split_(split) {}

  SparseUpdate EncodeForward(const DenseMatrix& a, const MaskProvenance& prov) override {
    SketchConfig cfg;
    cfg.input_width = a.cols();
    cfg.sketch_width = SketchWidth(a.cols(), compression_);
    // A fresh sketch per (iteration, split), reproducible from the seed.
    cfg.seed = seed_ ^ (0x9E3779B97F4A7C15ULL * (prov.iteration * 1024 + split_ + 1));
    sketch_ = GaussianSketchMatrix(cfg);
    return SparseUpdate::Dense(SketchActivations(a, sketch_));
  }
  DenseMatrix DecodeForward(const SparseUpdate& p) override {
    return UnsketchActivations(p.ToDense(), sketch_);
  }
  // Gradients travel uncompressed and are handed straight to the upstream
  // partition.
  SparseUpdate EncodeBackward(const DenseMatrix& g, const MaskProvenance&) override {
    return SparseUpdate::Dense(g);
  }
  DenseMatrix DecodeBackward(const SparseUpdate& p) override { return p.ToDense(); }

 private:
  double compression_;
  std::uint64_t seed_;
  std::size_t split_;
  DenseMatrix sketch_;
};

class TopKGradSplitCodec final : public SplitCodec {
 public:
  explicit TopKGradSplitCodec(double eta) : eta_(eta) {}

  SparseUpdate EncodeForward(const DenseMatrix& a, const MaskProvenance&) override {
    return SparseUpdate::Dense(a);
  }
  DenseMatrix DecodeForward(const SparseUpdate& p) override { return p.ToDense(); }
  SparseUpdate EncodeBackward(const DenseMatrix& g, const MaskProvenance&) override {
    if (!error_) error_ = std::make_unique<ErrorBuffer>(g.rows(), g.cols());
    SparseUpdate u = TopKGradWithEf(g, eta_, *error_);
    density_ = static_cast<double>(u.nnz()) / static_cast<double>(g.size());
    return u;
  }
  DenseMatrix DecodeBackward(const SparseUpdate& p) override { return p.ToDense(); }
  double last_density() const override { return density_; }

 private:
  double eta_;
  std::unique_ptr<ErrorBuffer> error_;
  double density_ = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace

std::unique_ptr<SplitCodec> MakeSplitCodec(const CodecConfig& cfg, std::size_t split) {
  cfg.Validate();
  switch (cfg.kind) {
    case CodecKind::kNone: return std::make_unique<PassThroughSplitCodec>();
    case CodecKind::kDctMp: return std::make_unique<DctMpSplitCodec>(cfg.eta, cfg.measure_only);
    case CodecKind::kGaussianSketch:
      return std::make_unique<SketchSplitCodec>(cfg.sketch_compression, cfg.sketch_seed, split);
    case CodecKind::kTopKGradEf: return std::make_unique<TopKGradSplitCodec>(cfg.eta);
    case CodecKind::kDctDp: break;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "codec '" + CodecKindName(cfg.kind) + "' cannot be attached to a split");
}

double GradientCodec::threshold(std::uint32_t) const {
  return std::numeric_limits<double>::quiet_NaN();
}

SparseUpdate PassThroughGradientCodec::Compress(std::uint32_t, const DenseMatrix& gradient) {
  return SparseUpdate::Dense(gradient);
}

DctDpCodec::DctDpCodec(double eta, std::uint64_t lifespan) : eta_(eta), lifespan_(lifespan) {
  CodecConfig{CodecKind::kDctDp, eta, lifespan}.Validate();
}

void DctDpCodec::AttachErrorBuffer(std::uint32_t tensor_id, std::shared_ptr<ErrorBuffer> buffer) {
  buffers_[tensor_id] = std::move(buffer);
}

SparseUpdate DctDpCodec::Compress(std::uint32_t tensor_id, const DenseMatrix& gradient) {
  const double start = ThreadCpuSeconds();
  auto& buffer = buffers_[tensor_id];
  if (!buffer) buffer = std::make_shared<ErrorBuffer>(gradient.rows(), gradient.cols());
  DpResult r = CompressDp(gradient, states_[tensor_id], *buffer, eta_, lifespan_);
  cpu_seconds_ += ThreadCpuSeconds() - start;
  return std::move(r.update);
}

std::uint64_t DctDpCodec::refresh_count() const {
  std::uint64_t n = 0;
  for (const auto& [id, s] : states_) n += s.refresh_count;
  return n;
}

double DctDpCodec::threshold(std::uint32_t tensor_id) const {
  auto it = states_.find(tensor_id);
  return it == states_.end() ? std::numeric_limits<double>::quiet_NaN() : it->second.tau;
}

std::unique_ptr<GradientCodec> MakeGradientCodec(const CodecConfig& cfg) {
  cfg.Validate();
  switch (cfg.kind) {
    case CodecKind::kNone: return std::make_unique<PassThroughGradientCodec>();
    case CodecKind::kDctDp: return std::make_unique<DctDpCodec>(cfg.eta, cfg.lifespan);
    default: break;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "codec '" + CodecKindName(cfg.kind) + "' cannot compress parameter gradients");
}

double ThreadCpuSeconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

}  // namespace dct
