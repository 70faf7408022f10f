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
#include "dct/wire.h"

#include <algorithm>
#include <bit>
#include <cstring>

#include "dct/error.h"

namespace dct {

std::string MessageKindName(MessageKind kind) {
  switch (kind) {
    case MessageKind::kActivationFwd: return "activation-fwd";
    case MessageKind::kGradBwd: return "grad-bwd";
    case MessageKind::kParamGrad: return "param-grad";
    case MessageKind::kModelPull: return "model-pull";
    case MessageKind::kModelPush: return "model-push";
  }
  return "?";
}

std::size_t PayloadBytes(Encoding encoding, std::size_t rows, std::size_t cols, std::size_t nnz) {
  switch (encoding) {
    case Encoding::kDense: return kValueBytes * rows * cols;
    case Encoding::kBitmap: return (rows * cols + 7) / 8 + kValueBytes * nnz;
    case Encoding::kIndexList: return 4 + 4 * nnz + kValueBytes * nnz;
  }
  throw Error(ErrorCode::kBadEncoding, "unknown encoding");
}

SparseUpdate Reencode(const SparseUpdate& update, Encoding encoding) {
  update.Validate();
  if (update.encoding == encoding) return update;
  SparseUpdate out;
  out.rows = update.rows;
  out.cols = update.cols;
  out.encoding = encoding;
  if (encoding == Encoding::kDense) {
    const DenseMatrix dense = update.ToDense();
    out.values.assign(dense.values().begin(), dense.values().end());
    return out;
  }
  if (update.encoding == Encoding::kDense) {
    out.indices.resize(update.size());
    for (std::size_t i = 0; i < update.size(); ++i) out.indices[i] = static_cast<std::uint32_t>(i);
  } else {
    out.indices = update.indices;
  }
  out.values = update.values;
  return out;
}

namespace {

class Writer {
 public:
  explicit Writer(std::size_t reserve) { buf_.reserve(reserve); }
  void U8(std::uint8_t v) { buf_.push_back(v); }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void F32(double v) { U32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void Bytes(const std::vector<std::uint8_t>& b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> Take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t U8() { return b_[pos_++]; }
  std::uint32_t U32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t U64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  double F32() { return static_cast<double>(std::bit_cast<float>(U32())); }
  std::span<const std::uint8_t> Take(std::size_t n) {
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t CheckedU32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFull) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> Encode(const WireMessage& message) {
  const SparseUpdate& u = message.payload;
  u.Validate();
  Writer w(FrameBytes(u.encoding, u.rows, u.cols, u.nnz()));
  for (auto b : kWireMagic) w.U8(b);
  w.U8(kWireVersion);
  w.U8(static_cast<std::uint8_t>(message.kind));
  w.U8(static_cast<std::uint8_t>(u.encoding));
  w.U8(0);
  w.U64(message.iteration);
  w.U32(message.tensor_id);
  w.U32(CheckedU32(u.rows, "rows"));
  w.U32(CheckedU32(u.cols, "cols"));
  w.U32(CheckedU32(u.nnz(), "nnz"));
  switch (u.encoding) {
    case Encoding::kDense:
      break;
    case Encoding::kBitmap: {
      std::vector<std::uint8_t> bits((u.size() + 7) / 8, 0);
      for (auto i : u.indices) bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
      w.Bytes(bits);
      break;
    }
    case Encoding::kIndexList:
      w.U32(CheckedU32(u.nnz(), "kept count"));
      for (auto i : u.indices) w.U32(i);
      break;
  }
  for (double v : u.values) w.F32(v);
  return w.Take();
}

std::vector<std::uint8_t> EncodeSparse(const SparseUpdate& update, Encoding encoding,
                                       MessageKind kind, std::uint64_t iteration,
                                       std::uint32_t tensor_id) {
  if (encoding == Encoding::kDense) {
    throw Error(ErrorCode::kBadEncoding, "encode_sparse needs bitmap or index-list");
  }
  return Encode(WireMessage{kind, iteration, tensor_id, Reencode(update, encoding)});
}

std::size_t FrameLengthFromHeader(std::span<const std::uint8_t> header) {
  if (header.size() < kHeaderBytes) {
    throw Error(ErrorCode::kTruncatedFrame, "frame shorter than header");
  }
  if (!std::equal(kWireMagic.begin(), kWireMagic.end(), header.begin())) {
    throw Error(ErrorCode::kBadMagic, "frame does not start with DCTW");
  }
  Reader r(header);
  r.Take(4);
  const std::uint8_t version = r.U8();
  if (version != kWireVersion) {
    throw Error(ErrorCode::kBadVersion, "unsupported wire version " + std::to_string(version));
  }
  const std::uint8_t kind = r.U8();
  const std::uint8_t enc = r.U8();
  if (kind > static_cast<std::uint8_t>(MessageKind::kModelPush) ||
      enc > static_cast<std::uint8_t>(Encoding::kIndexList)) {
    throw Error(ErrorCode::kBadEncoding, "unknown message kind or encoding tag");
  }
  r.U8();
  r.U64();
  r.U32();
  const std::size_t rows = r.U32();
  const std::size_t cols = r.U32();
  const std::size_t nnz = r.U32();
  const auto encoding = static_cast<Encoding>(enc);
  if (encoding == Encoding::kDense && nnz != rows * cols) {
    throw Error(ErrorCode::kPopcountMismatch, "dense frame nnz differs from rows*cols");
  }
  if (nnz > rows * cols) {
    throw Error(ErrorCode::kPopcountMismatch, "nnz exceeds tensor size");
  }
  return FrameBytes(encoding, rows, cols, nnz);
}

WireMessage Decode(std::span<const std::uint8_t> frame) {
  const std::size_t expected = FrameLengthFromHeader(frame);
  if (frame.size() < expected) {
    throw Error(ErrorCode::kTruncatedFrame, "frame has " + std::to_string(frame.size()) +
                                                " bytes, header announces " +
                                                std::to_string(expected));
  }
  if (frame.size() > expected) {
    throw Error(ErrorCode::kTrailingBytes, "frame has " + std::to_string(frame.size() - expected) +
                                               " bytes past its payload");
  }
  Reader r(frame);
  r.Take(5);
  WireMessage m;
  m.kind = static_cast<MessageKind>(r.U8());
  SparseUpdate& u = m.payload;
  u.encoding = static_cast<Encoding>(r.U8());
  r.U8();
  m.iteration = r.U64();
  m.tensor_id = r.U32();
  u.rows = r.U32();
  u.cols = r.U32();
  const std::size_t nnz = r.U32();
  switch (u.encoding) {
    case Encoding::kDense:
      break;
    case Encoding::kBitmap: {
      auto bits = r.Take((u.size() + 7) / 8);
      for (std::size_t byte = 0; byte < bits.size(); ++byte) {
        for (unsigned bit = 0; bit < 8; ++bit) {
          if ((bits[byte] >> bit) & 1u) {
            const std::size_t idx = byte * 8 + bit;
            if (idx >= u.size()) {
              throw Error(ErrorCode::kIndexOutOfRange, "bitmap padding bit set");
            }
            u.indices.push_back(static_cast<std::uint32_t>(idx));
          }
        }
      }
      if (u.indices.size() != nnz) {
        throw Error(ErrorCode::kPopcountMismatch,
                    "bitmap popcount " + std::to_string(u.indices.size()) + " != value count " +
                        std::to_string(nnz));
      }
      break;
    }
    case Encoding::kIndexList: {
      const std::size_t kept = r.U32();
      if (kept != nnz) {
        throw Error(ErrorCode::kPopcountMismatch, "kept count " + std::to_string(kept) +
                                                      " != header nnz " + std::to_string(nnz));
      }
      u.indices.resize(nnz);
      for (std::size_t i = 0; i < nnz; ++i) {
        u.indices[i] = r.U32();
        if (u.indices[i] >= u.size() || (i > 0 && u.indices[i] <= u.indices[i - 1])) {
          throw Error(ErrorCode::kIndexOutOfRange,
                      "index " + std::to_string(u.indices[i]) + " out of range or not ascending");
        }
      }
      break;
    }
  }
  u.values.resize(nnz);
  for (std::size_t i = 0; i < nnz; ++i) u.values[i] = r.F32();
  return m;
}

SparseUpdate RoundToWire(SparseUpdate update) {
  for (double& v : update.values) v = static_cast<double>(static_cast<float>(v));
  return update;
}

}  // namespace dct
