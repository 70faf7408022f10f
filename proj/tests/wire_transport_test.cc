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
#include <cmath>
#include <cstring>
#include <random>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "dct/codec.h"
#include "dct/error.h"
#include "dct/transport.h"
#include "dct/wire.h"
#include "oracles.h"

namespace dct {
namespace {

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no dct::Error thrown";
  return ErrorCode::kIo;
}

// Values already representable in binary32 so round trips are exact.
SparseUpdate RandomUpdate(std::mt19937_64& rng, Encoding enc) {
  std::uniform_int_distribution<std::size_t> dim(1, 40);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  std::normal_distribution<float> val;
  SparseUpdate u;
  u.rows = dim(rng);
  u.cols = dim(rng);
  u.encoding = enc;
  const double p = density(rng);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (enc == Encoding::kDense || std::bernoulli_distribution(p)(rng)) {
      if (enc != Encoding::kDense) u.indices.push_back(static_cast<std::uint32_t>(i));
      u.values.push_back(static_cast<double>(val(rng)));
    }
  }
  return u;
}

SparseUpdate BitmapWithKept(std::size_t d, std::size_t kept) {
  SparseUpdate u;
  u.rows = 1;
  u.cols = d;
  u.encoding = Encoding::kBitmap;
  for (std::size_t i = 0; i < kept; ++i) {
    u.indices.push_back(static_cast<std::uint32_t>(i * (d / kept)));
    u.values.push_back(0.5 + static_cast<double>(i));
  }
  return u;
}

void PutU32(std::vector<std::uint8_t>& f, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) f[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

// ---- layout

TEST(WireLayoutTest, BitmapExampleIs172Bytes) {
  const SparseUpdate u = BitmapWithKept(512, 27);
  EXPECT_EQ(PayloadBytes(u), 172u);
  EXPECT_EQ(PayloadBytes(Encoding::kDense, 1, 512, 512), 2048u);
  EXPECT_NEAR(2048.0 / 172.0, 11.9, 0.01);
  const auto frame = Encode({MessageKind::kActivationFwd, 0, 0, u});
  EXPECT_EQ(frame.size(), kHeaderBytes + 172);
}

TEST(WireLayoutTest, HeaderFields) {
  const SparseUpdate u = BitmapWithKept(16, 2);
  const auto f = Encode({MessageKind::kGradBwd, 0x0102030405060708ULL, 7, u});
  ASSERT_GE(f.size(), kHeaderBytes);
  EXPECT_EQ(std::memcmp(f.data(), "DCTW", 4), 0);
  EXPECT_EQ(f[4], kWireVersion);
  EXPECT_EQ(f[5], static_cast<std::uint8_t>(MessageKind::kGradBwd));
  EXPECT_EQ(f[6], static_cast<std::uint8_t>(Encoding::kBitmap));
  EXPECT_EQ(f[8], 0x08);  // little-endian iteration
  EXPECT_EQ(f[15], 0x01);
  EXPECT_EQ(f[16], 7);
  EXPECT_EQ(f[20], 1);
  EXPECT_EQ(f[24], 16);
  EXPECT_EQ(f[28], 2);
  // Indices 0 and 8: LSB of bytes 0 and 1.
  EXPECT_EQ(f[32], 0x01);
  EXPECT_EQ(f[33], 0x01);
  float first;
  std::memcpy(&first, f.data() + 34, 4);
  EXPECT_EQ(first, 0.5f);
  EXPECT_EQ(FrameLengthFromHeader(f), f.size());
}

TEST(WireLayoutTest, IndexListLayout) {
  SparseUpdate u;
  u.rows = 3;
  u.cols = 3;
  u.encoding = Encoding::kIndexList;
  u.indices = {2, 7};
  u.values = {1.0, -2.0};
  const auto f = Encode({MessageKind::kParamGrad, 0, 0, u});
  EXPECT_EQ(f.size(), oracle::IndexListFrame(2));
  EXPECT_EQ(f[32], 2);  // kept count
  EXPECT_EQ(f[36], 2);
  EXPECT_EQ(f[40], 7);
}

TEST(WireLayoutTest, MeasuredBytesMatchClosedFormOnRandomShapes) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    for (Encoding enc : {Encoding::kDense, Encoding::kBitmap, Encoding::kIndexList}) {
      const SparseUpdate u = RandomUpdate(rng, enc);
      const std::size_t measured = Encode({MessageKind::kParamGrad, 0, 0, u}).size();
      const std::size_t expected = enc == Encoding::kDense
                                       ? oracle::DenseFrame(u.rows, u.cols)
                                   : enc == Encoding::kBitmap
                                       ? oracle::BitmapFrame(u.rows, u.cols, u.nnz())
                                       : oracle::IndexListFrame(u.nnz());
      EXPECT_EQ(measured, expected);
      EXPECT_EQ(measured, FrameBytes(enc, u.rows, u.cols, u.nnz()));
    }
  }
}

// ---- round trip

TEST(WireRoundTripTest, RandomUpdatesAreBitIdentical) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 1000; ++i) {
    const Encoding enc = static_cast<Encoding>(i % 3);
    const WireMessage m{static_cast<MessageKind>(i % 5), rng(),
                        static_cast<std::uint32_t>(rng() % 100), RandomUpdate(rng, enc)};
    EXPECT_EQ(Decode(Encode(m)), m) << "case " << i;
  }
}

TEST(WireRoundTripTest, EmptyBitmapDecodesToZeros) {
  SparseUpdate u;
  u.rows = 2;
  u.cols = 5;
  u.encoding = Encoding::kBitmap;
  const auto f = Encode({MessageKind::kActivationFwd, 0, 0, u});
  EXPECT_EQ(f.size(), kHeaderBytes + 2);
  for (std::size_t i = kHeaderBytes; i < f.size(); ++i) EXPECT_EQ(f[i], 0);
  EXPECT_EQ(Decode(f).payload.ToDense(), DenseMatrix(2, 5));
}

TEST(WireRoundTripTest, ValuesNarrowToBinary32) {
  SparseUpdate u = SparseUpdate::Dense(DenseMatrix::FromRows({{0.1, 1.0 / 3.0}}));
  const WireMessage back = Decode(Encode({MessageKind::kModelPush, 0, 0, u}));
  EXPECT_EQ(back.payload.values[0], static_cast<double>(0.1f));
  EXPECT_EQ(back.payload, RoundToWire(u));
}

TEST(WireRoundTripTest, EncodeSparseReencodes) {
  const SparseUpdate dense = SparseUpdate::Dense(DenseMatrix::FromRows({{1, 0, 2}}));
  const WireMessage m = Decode(EncodeSparse(dense, Encoding::kIndexList));
  EXPECT_EQ(m.payload.encoding, Encoding::kIndexList);
  EXPECT_EQ(m.payload.nnz(), 3u);
  EXPECT_EQ(m.payload.ToDense(), dense.ToDense());
  EXPECT_EQ(CodeOf([&] { EncodeSparse(dense, Encoding::kDense); }), ErrorCode::kBadEncoding);
  EXPECT_EQ(Reencode(m.payload, Encoding::kDense), dense);
}

// ---- malformed frames

class MalformedFrameTest : public ::testing::Test {
 protected:
  std::vector<std::uint8_t> Bitmap() {
    SparseUpdate u = BitmapWithKept(32, 4);
    return Encode({MessageKind::kActivationFwd, 3, 1, u});
  }
};

TEST_F(MalformedFrameTest, TruncatedByOneByte) {
  auto f = Bitmap();
  f.pop_back();
  EXPECT_EQ(CodeOf([&] { Decode(f); }), ErrorCode::kTruncatedFrame);
  EXPECT_EQ(CodeOf([&] { Decode(std::span(f).first(10)); }), ErrorCode::kTruncatedFrame);
}

TEST_F(MalformedFrameTest, DistinctCodes) {
  auto f = Bitmap();
  f[0] = 'X';
  EXPECT_EQ(CodeOf([&] { Decode(f); }), ErrorCode::kBadMagic);
  f = Bitmap();
  f[4] = 9;
  EXPECT_EQ(CodeOf([&] { Decode(f); }), ErrorCode::kBadVersion);
  f = Bitmap();
  f[6] = 7;
  EXPECT_EQ(CodeOf([&] { Decode(f); }), ErrorCode::kBadEncoding);
  f = Bitmap();
  f.push_back(0);
  EXPECT_EQ(CodeOf([&] { Decode(f); }), ErrorCode::kTrailingBytes);
}

TEST_F(MalformedFrameTest, PopcountDiffersFromValueCount) {
  auto f = Bitmap();
  // Set one extra mask bit while the header still announces 4 values.
  f[kHeaderBytes] |= 0x02;
  EXPECT_EQ(CodeOf([&] { Decode(f); }), ErrorCode::kPopcountMismatch);
}

TEST_F(MalformedFrameTest, IndexListCorruption) {
  SparseUpdate u;
  u.rows = 1;
  u.cols = 10;
  u.encoding = Encoding::kIndexList;
  u.indices = {1, 4};
  u.values = {1.0, 2.0};
  auto f = Encode({MessageKind::kParamGrad, 0, 0, u});
  auto g = f;
  PutU32(g, kHeaderBytes + 8, 10);
  EXPECT_EQ(CodeOf([&] { Decode(g); }), ErrorCode::kIndexOutOfRange);
  g = f;
  PutU32(g, kHeaderBytes, 3);
  EXPECT_EQ(CodeOf([&] { Decode(g); }), ErrorCode::kPopcountMismatch);
}

// ---- cost model

TEST(CostModelTest, FormulaAndAdditivity) {
  const CostModel ms{0.001, 1e6, 0.0};
  EXPECT_NEAR(ms.TransferSeconds(172), 0.001172, 1e-15);
  // One-second latency reproduces the 1.000172 s figure.
  const CostModel sec{1.0, 1e6, 0.0};
  EXPECT_NEAR(sec.TransferSeconds(172), 1.000172, 1e-12);
  const CostModel free_link{0.0, 1e6, 0.0};
  EXPECT_DOUBLE_EQ(free_link.TransferSeconds(344), 2.0 * free_link.TransferSeconds(172));
  EXPECT_EQ(CostModel{}.TransferSeconds(1 << 20), 0.0);
  EXPECT_DOUBLE_EQ(CostModel({0, 1, 2e-9}).SortSeconds(1000), 2e-6);
}

// ---- transport

TEST(TransportTest, ZeroMessagesZeroBytesZeroTime) {
  Transport t(TransportMode::kInProcess, Precision::k32, {0.001, 1e6, 0.0});
  t.Connect("a", "b");
  EXPECT_EQ(t.Snapshot().TotalBytes(), 0u);
  EXPECT_EQ(t.SimulatedTime(), 0.0);
  EXPECT_TRUE(t.Snapshot().Conserved());
}

TEST(TransportTest, SimulatedTimeCountsFramesAndSorts) {
  Transport t(TransportMode::kInProcess, Precision::k32, {0.001, 1e6, 1e-9});
  const LinkId l = t.Connect("a", "b");
  t.Send(l, {MessageKind::kActivationFwd, 0, 0, BitmapWithKept(512, 27)});
  EXPECT_NEAR(t.SimulatedTime(), 0.001 + 204e-6, 1e-15);
  t.RecordSort(1000);
  EXPECT_NEAR(t.SimulatedTime(), 0.001 + 204e-6 + 1e-6, 1e-15);
  EXPECT_NEAR(t.CommunicationTime(), 0.001 + 204e-6, 1e-15);
}

TEST(TransportTest, InOrderExactlyOnceWithConservation) {
  for (Precision p : {Precision::k64, Precision::k32}) {
    Transport t(TransportMode::kInProcess, p);
    const LinkId l = t.Connect("w0", "w1");
    EXPECT_EQ(t.Connect("w0", "w1"), l);
    EXPECT_EQ(t.LinkName(l), "w0->w1");
    std::mt19937_64 rng(5);
    std::vector<WireMessage> sent;
    for (int i = 0; i < 20; ++i) {
      sent.push_back({MessageKind::kParamGrad, static_cast<std::uint64_t>(i), 0,
                      RandomUpdate(rng, static_cast<Encoding>(i % 3))});
      t.Send(l, sent.back());
      EXPECT_FALSE(t.Snapshot().Conserved());
      EXPECT_EQ(t.Recv(l), sent.back());
    }
    const ChannelMeter m = t.Snapshot();
    EXPECT_TRUE(m.Conserved());
    EXPECT_EQ(m.TotalMessages(), 20u);
    std::uint64_t expected = 0;
    for (const auto& s : sent) expected += FrameBytes(s.payload.encoding, s.payload.rows,
                                                      s.payload.cols, s.payload.nnz());
    EXPECT_EQ(m.TotalBytes(), expected);
    EXPECT_EQ(m.TotalBytes(MessageKind::kParamGrad), expected);
    EXPECT_EQ(t.LinkBytes(), std::vector<std::uint64_t>{expected});
  }
}

TEST(TransportTest, ClosedLinkErrors) {
  Transport t;
  const LinkId l = t.Connect("a", "b");
  t.Send(l, {MessageKind::kModelPull, 0, 0, SparseUpdate::Dense(DenseMatrix(1, 1))});
  t.Close(l);
  EXPECT_EQ(CodeOf([&] { t.Send(l, {}); }), ErrorCode::kClosedLink);
  EXPECT_NO_THROW(t.Recv(l));  // Already queued messages still arrive.
  EXPECT_EQ(CodeOf([&] { t.Recv(l); }), ErrorCode::kClosedLink);
  EXPECT_EQ(CodeOf([&] { t.Recv(42); }), ErrorCode::kClosedLink);
}

TEST(TransportTest, SocketNeeds32Bit) {
  EXPECT_EQ(CodeOf([] { Transport t(TransportMode::kLoopbackSocket, Precision::k64); }),
            ErrorCode::kInvalidArgument);
}

// Loopback sockets deliver the same messages and the same meter readings.
TEST(TransportTest, LoopbackMatchesInProcess) {
  std::mt19937_64 rng(6);
  std::vector<WireMessage> msgs;
  for (int i = 0; i < 30; ++i) {
    msgs.push_back({static_cast<MessageKind>(i % 5), static_cast<std::uint64_t>(i), 1,
                    RandomUpdate(rng, static_cast<Encoding>(i % 3))});
  }
  auto run = [&](TransportMode mode) {
    Transport t(mode, Precision::k32, {1e-4, 1e8, 0});
    const LinkId a = t.Connect("t0.w0", "t0.w1");
    const LinkId b = t.Connect("t0.w1", "ps");
    std::vector<WireMessage> got;
    for (const auto& m : msgs) {
      t.Send(m.iteration % 2 ? a : b, m);
      got.push_back(t.Recv(m.iteration % 2 ? a : b));
    }
    return std::make_tuple(got, t.Snapshot().ToCsv(), t.SimulatedTime());
  };
  const auto in_process = run(TransportMode::kInProcess);
  const auto socket = run(TransportMode::kLoopbackSocket);
  EXPECT_EQ(std::get<0>(in_process), msgs);
  EXPECT_EQ(std::get<0>(socket), msgs);
  EXPECT_EQ(std::get<1>(in_process), std::get<1>(socket));
  EXPECT_EQ(std::get<2>(in_process), std::get<2>(socket));
}

// Meter snapshots taken while a producer and a consumer run concurrently
// never show more received than sent and never move backwards.
TEST(TransportTest, ConcurrentSnapshotsAreConsistent) {
  Transport t(TransportMode::kInProcess, Precision::k32);
  const LinkId l = t.Connect("a", "b");
  const int n = 2000;
  std::thread producer([&] {
    for (int i = 0; i < n; ++i) {
      t.Send(l, {MessageKind::kGradBwd, static_cast<std::uint64_t>(i), 0,
                 SparseUpdate::Dense(DenseMatrix(1, 4, 1.0))});
    }
  });
  std::thread consumer([&] {
    for (int i = 0; i < n; ++i) EXPECT_EQ(t.Recv(l).iteration, static_cast<std::uint64_t>(i));
  });
  std::uint64_t last_sent = 0;
  for (int i = 0; i < 500; ++i) {
    const MeterEntry e = t.Snapshot().entries[static_cast<std::size_t>(MessageKind::kGradBwd)];
    EXPECT_LE(e.received_messages, e.messages);
    EXPECT_GE(e.messages, last_sent);
    last_sent = e.messages;
  }
  producer.join();
  consumer.join();
  EXPECT_TRUE(t.Snapshot().Conserved());
}

TEST(ChannelMeterTest, CsvDump) {
  Transport t;
  const LinkId l = t.Connect("t0.w0", "ps");
  t.Send(l, {MessageKind::kParamGrad, 0, 0, SparseUpdate::Dense(DenseMatrix(1, 2))});
  t.Recv(l);
  EXPECT_EQ(t.Snapshot().ToCsv(),
            "link,kind,messages,bytes,payload_bytes,header_bytes\n"
            "t0.w0->ps,param-grad,1,40,8,32\n");
}

}  // namespace
}  // namespace dct
