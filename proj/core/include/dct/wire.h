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
#ifndef DCT_WIRE_H_
#define DCT_WIRE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dct/codec.h"

namespace dct {

enum class MessageKind : std::uint8_t {
  kActivationFwd = 0,
  kGradBwd = 1,
  kParamGrad = 2,
  kModelPull = 3,
  kModelPush = 4,
};

std::string MessageKindName(MessageKind kind);

struct WireMessage {
  MessageKind kind = MessageKind::kActivationFwd;
  std::uint64_t iteration = 0;
  std::uint32_t tensor_id = 0;  // Layer tensor id or split index.
  SparseUpdate payload;

  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

// Frame layout (all integers little-endian):
//   0  magic "DCTW"      4  version        5  kind     6  encoding  7  reserved
//   8  iteration (u64)  16  tensor id     20  rows    24  cols     28  nnz
// followed by the payload:
//   dense       nnz fp32 values
//   bitmap      ceil(rows*cols/8) mask bytes (row-major, LSB first), nnz fp32 values
//   index-list  kept count (u32), nnz u32 ascending indices, nnz fp32 values
inline constexpr std::array<std::uint8_t, 4> kWireMagic = {'D', 'C', 'T', 'W'};
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kHeaderBytes = 32;
inline constexpr std::size_t kValueBytes = 4;

std::size_t PayloadBytes(Encoding encoding, std::size_t rows, std::size_t cols, std::size_t nnz);
inline std::size_t FrameBytes(Encoding encoding, std::size_t rows, std::size_t cols,
                              std::size_t nnz) {
  return kHeaderBytes + PayloadBytes(encoding, rows, cols, nnz);
}
inline std::size_t PayloadBytes(const SparseUpdate& u) {
  return PayloadBytes(u.encoding, u.rows, u.cols, u.nnz());
}

// Rewrites the update in another encoding while keeping the same kept set
// (every entry of a dense update counts as kept).
SparseUpdate Reencode(const SparseUpdate& update, Encoding encoding);

// Values are narrowed to IEEE-754 binary32.
std::vector<std::uint8_t> Encode(const WireMessage& message);
std::vector<std::uint8_t> EncodeSparse(const SparseUpdate& update, Encoding encoding,
                                       MessageKind kind = MessageKind::kParamGrad,
                                       std::uint64_t iteration = 0, std::uint32_t tensor_id = 0);

WireMessage Decode(std::span<const std::uint8_t> frame);

// Total frame length announced by a header (needs kHeaderBytes bytes).
std::size_t FrameLengthFromHeader(std::span<const std::uint8_t> header);

// Rounds every value to binary32, matching what Decode(Encode(m)) yields.
SparseUpdate RoundToWire(SparseUpdate update);

}  // namespace dct

#endif  // DCT_WIRE_H_
