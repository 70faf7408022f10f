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
#ifndef DCT_CODEC_H_
#define DCT_CODEC_H_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dct/tensor.h"

namespace dct {

enum class CodecKind {
  kNone,            // Dense pass-through.
  kDctDp,           // Top-K with error feedback and threshold life-span.
  kDctMp,           // Per-row top-K mask reused for the backward gradient.
  kGaussianSketch,  // Baseline: X*S forward, uncompressed backward.
  kTopKGradEf,      // Baseline: top-K + error feedback on the split gradient.
};

std::string CodecKindName(CodecKind kind);
CodecKind ParseCodecKind(const std::string& name);

struct CodecConfig {
  CodecKind kind = CodecKind::kNone;
  double eta = 0.0;             // Fraction of entries zeroed, in [0, 1].
  std::uint64_t lifespan = 1;   // DP only: threshold refresh period L.
  bool measure_only = false;    // MP only: compute thresholds but send dense.
  double sketch_compression = 0.75;  // Sketch only: fraction of width removed.
  std::uint64_t sketch_seed = 0;

  void Validate() const;
};

// --------------------------------------------------------------------------
// Thresholding

// Rank (1-indexed) of the threshold element: floor(n * eta).
std::size_t ThresholdRank(std::size_t n, double eta);

/// Sorts |x| ascending and returns the floor(n*eta)-th smallest magnitude, or
/// 0 when that rank is below 1 (keep everything). Entries with |x| >= tau are
/// kept, so ties at tau are all kept.
double ThresholdFromSorted(std::span<const double> x, double eta);

// Number of entries with |x| >= tau.
std::size_t KeptCount(std::span<const double> x, double tau);

struct ThresholdState {
  double tau = 0.0;
  std::uint64_t last_refresh = 0;
  std::uint64_t k = 0;              // Calls made so far.
  std::uint64_t refresh_count = 0;  // Number of sorts performed.
};

// --------------------------------------------------------------------------
// Error feedback buffer

enum class DrainMode { kNever, kDeterministic, kStochastic };

struct DrainPolicy {
  DrainMode mode = DrainMode::kNever;
  std::uint64_t interval = 0;  // D

  // `completed` is the number of iterations finished so far (>= 1).
  // Deterministic mode fires at multiples of D; stochastic mode fires with
  // probability 1/D per call.
  bool ShouldDrain(std::uint64_t completed, std::mt19937_64& rng) const;
};

/// Residual of a compressed tensor. Storage is element-wise atomic so one
/// buffer may be shared by concurrent update streams: read-modify-write
/// sequences can lose updates but never tear a value.
class ErrorBuffer {
 public:
  ErrorBuffer() = default;
  ErrorBuffer(std::size_t rows, std::size_t cols);
  ErrorBuffer(const ErrorBuffer& other);
  ErrorBuffer& operator=(const ErrorBuffer& other);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }

  double Get(std::size_t i) const { return data_[i].load(std::memory_order_relaxed); }
  void Set(std::size_t i, double v) { data_[i].store(v, std::memory_order_relaxed); }

  void Drain();
  double MaxAbs() const;
  DenseMatrix ToDense() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::unique_ptr<std::atomic<double>[]> data_;
};

// --------------------------------------------------------------------------
// Sparse tensors

enum class Encoding : std::uint8_t { kDense = 0, kBitmap = 1, kIndexList = 2 };

std::string EncodingName(Encoding e);

/// A possibly-sparse tensor. Dense updates carry every value in row-major
/// order with no indices; sparse updates carry ascending flat row-major
/// indices and the value kept at each.
struct SparseUpdate {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Encoding encoding = Encoding::kDense;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t size() const { return rows * cols; }
  std::size_t nnz() const { return values.size(); }

  DenseMatrix ToDense() const;
  // Checks index bounds/order and value counts.
  void Validate() const;

  static SparseUpdate Dense(const DenseMatrix& m);
  // Keeps x[i] wherever mask[i] != 0.
  static SparseUpdate FromMask(const DenseMatrix& x, std::span<const std::uint8_t> mask,
                               Encoding encoding);

  friend bool operator==(const SparseUpdate&, const SparseUpdate&) = default;
};

// --------------------------------------------------------------------------
// DCT-DP

struct DpResult {
  SparseUpdate update;  // Index-list encoded.
  bool refreshed = false;
};

/// One DCT-DP step on a parameter gradient: feeds back the residual,
/// refreshes tau when lifespan divides k, masks, stores the new residual and
/// advances k.
DpResult CompressDp(const DenseMatrix& gradient, ThresholdState& state, ErrorBuffer& error,
                    double eta, std::uint64_t lifespan);

// --------------------------------------------------------------------------
// DCT-MP

struct MaskProvenance {
  std::uint64_t iteration = 0;
  std::size_t split = 0;
  friend bool operator==(const MaskProvenance&, const MaskProvenance&) = default;
};

struct MaskMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;   // rows*cols, 0/1, row-major
  std::vector<double> thresholds;   // tau_i per row
  MaskProvenance provenance;

  std::size_t KeptInRow(std::size_t r) const;
  std::size_t Kept() const;
  double MeanThreshold() const;
  friend bool operator==(const MaskMatrix&, const MaskMatrix&) = default;
};

struct MaskForwardResult {
  SparseUpdate masked;  // Bitmap encoded X_act (.) M.
  MaskMatrix mask;
};

MaskForwardResult MaskForward(const DenseMatrix& activation, double eta,
                              const MaskProvenance& provenance = {});

/// Applies a forward mask to the gradient of the same split and iteration.
SparseUpdate MaskBackward(const DenseMatrix& gradient, const MaskMatrix& mask,
                          const MaskProvenance& expected);
SparseUpdate MaskBackward(const DenseMatrix& gradient, const MaskMatrix& mask);

// Recovers the mask carried by a bitmap-encoded update.
MaskMatrix MaskFromUpdate(const SparseUpdate& update);

// --------------------------------------------------------------------------
// Baselines

struct SketchConfig {
  std::size_t input_width = 0;
  std::size_t sketch_width = 0;
  std::uint64_t seed = 0;
};

// Sketch width for a target compression factor (fraction of width removed).
std::size_t SketchWidth(std::size_t input_width, double compression);

// d x k matrix of i.i.d. N(0, 1/k) entries.
DenseMatrix GaussianSketchMatrix(const SketchConfig& cfg);
// X * S
DenseMatrix SketchActivations(const DenseMatrix& activation, const DenseMatrix& sketch);
// Y * S^T, the receiver's unbiased reconstruction.
DenseMatrix UnsketchActivations(const DenseMatrix& sketched, const DenseMatrix& sketch);

/// Top-K with error feedback applied to a split gradient; the threshold is
/// recomputed on every call.
SparseUpdate TopKGradWithEf(const DenseMatrix& gradient, double eta, ErrorBuffer& error);

// --------------------------------------------------------------------------
// Common codec interfaces

/// Codec attached to one split. The sender side produces the payload put on
/// the wire; the receiver side turns the payload into the matrix the next
/// partition consumes.
class SplitCodec {
 public:
  virtual ~SplitCodec() = default;
  virtual SparseUpdate EncodeForward(const DenseMatrix& activation,
                                     const MaskProvenance& provenance) = 0;
  virtual DenseMatrix DecodeForward(const SparseUpdate& payload) = 0;
  virtual SparseUpdate EncodeBackward(const DenseMatrix& gradient,
                                      const MaskProvenance& provenance) = 0;
  virtual DenseMatrix DecodeBackward(const SparseUpdate& payload) = 0;

  // Instrumentation from the last forward call. NaN when not applicable.
  virtual double last_mean_threshold() const;
  virtual double last_density() const;
};

std::unique_ptr<SplitCodec> MakeSplitCodec(const CodecConfig& cfg, std::size_t split);

/// Codec on the trainer -> parameter server gradient path. Holds per-tensor
/// threshold state; error buffers may be supplied externally for sharing.
class GradientCodec {
 public:
  virtual ~GradientCodec() = default;
  virtual SparseUpdate Compress(std::uint32_t tensor_id, const DenseMatrix& gradient) = 0;

  virtual std::uint64_t refresh_count() const { return 0; }
  virtual double compress_cpu_seconds() const { return 0.0; }
  virtual double threshold(std::uint32_t /*tensor_id*/) const;
};

class PassThroughGradientCodec final : public GradientCodec {
 public:
  SparseUpdate Compress(std::uint32_t tensor_id, const DenseMatrix& gradient) override;
};

class DctDpCodec final : public GradientCodec {
 public:
  DctDpCodec(double eta, std::uint64_t lifespan);

  // Uses `buffer` (owned elsewhere, possibly shared) for `tensor_id`.
  void AttachErrorBuffer(std::uint32_t tensor_id, std::shared_ptr<ErrorBuffer> buffer);

  SparseUpdate Compress(std::uint32_t tensor_id, const DenseMatrix& gradient) override;

  std::uint64_t refresh_count() const override;
  double compress_cpu_seconds() const override { return cpu_seconds_; }
  double threshold(std::uint32_t tensor_id) const override;

  const ThresholdState& state(std::uint32_t tensor_id) const { return states_.at(tensor_id); }
  ErrorBuffer& error(std::uint32_t tensor_id) { return *buffers_.at(tensor_id); }

 private:
  double eta_;
  std::uint64_t lifespan_;
  std::map<std::uint32_t, ThresholdState> states_;
  std::map<std::uint32_t, std::shared_ptr<ErrorBuffer>> buffers_;
  double cpu_seconds_ = 0.0;
};

std::unique_ptr<GradientCodec> MakeGradientCodec(const CodecConfig& cfg);

// CPU time consumed by the calling thread, in seconds.
double ThreadCpuSeconds();

}  // namespace dct

#endif  // DCT_CODEC_H_
