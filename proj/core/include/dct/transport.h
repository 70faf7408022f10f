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
#ifndef DCT_TRANSPORT_H_
#define DCT_TRANSPORT_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "dct/wire.h"

namespace dct {

// 64-bit runs keep messages as in-memory objects; 32-bit runs put every
// message through the binary32 wire encoding.
enum class Precision { k64, k32 };

enum class TransportMode { kInProcess, kLoopbackSocket };

/// Latency/bandwidth model. Simulated time is additive:
///   sum over frames (latency + frame_bytes / bandwidth) + sort terms.
struct CostModel {
  double latency_seconds = 0.0;
  double bandwidth_bytes_per_second = std::numeric_limits<double>::infinity();
  double sort_seconds_per_element = 0.0;

  double TransferSeconds(std::size_t frame_bytes) const;
  double SortSeconds(std::uint64_t elements_sorted) const;
};

struct MeterEntry {
  std::string link;
  MessageKind kind = MessageKind::kActivationFwd;
  std::uint64_t messages = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t header_bytes = 0;
  std::uint64_t received_messages = 0;
  std::uint64_t received_payload_bytes = 0;
  std::uint64_t received_header_bytes = 0;

  std::uint64_t bytes() const { return payload_bytes + header_bytes; }
};

/// Snapshot of per-(link, kind) counters.
struct ChannelMeter {
  std::vector<MeterEntry> entries;

  bool Conserved() const;
  std::uint64_t TotalBytes() const;
  std::uint64_t TotalBytes(MessageKind kind) const;
  std::uint64_t TotalMessages() const;
  // link,kind,messages,bytes,payload_bytes,header_bytes
  std::string ToCsv() const;
};

using LinkId = std::size_t;

/// Reliable in-order channels between named simulated nodes. Each link is
/// single-producer single-consumer; different links may be used from
/// different threads. Meter reads are consistent snapshots.
class Transport {
 public:
  Transport(TransportMode mode = TransportMode::kInProcess, Precision precision = Precision::k64,
            CostModel cost = {});
  ~Transport();
  Transport(const Transport&) = delete;
  Transport& operator=(const Transport&) = delete;

  // Returns the existing link when `from -> to` is already connected.
  LinkId Connect(const std::string& from, const std::string& to);
  const std::string& LinkName(LinkId link) const;
  std::size_t link_count() const;

  void Send(LinkId link, const WireMessage& message);
  WireMessage Recv(LinkId link);
  void Close(LinkId link);

  // Adds the compute term for `elements` sorted values.
  void RecordSort(std::uint64_t elements);

  ChannelMeter Snapshot() const;
  double SimulatedTime() const;
  double CommunicationTime() const;
  // Bytes sent so far on each link, indexed by LinkId.
  std::vector<std::uint64_t> LinkBytes() const;

  Precision precision() const { return precision_; }
  TransportMode mode() const { return mode_; }
  const CostModel& cost() const { return cost_; }

 private:
  struct Link;
  Link& GetLink(LinkId id) const;
  void Meter(LinkId link, const WireMessage& m, bool sent);

  TransportMode mode_;
  Precision precision_;
  CostModel cost_;
  mutable std::mutex mu_;  // Guards links_ (structure) and meters.
  std::vector<std::unique_ptr<Link>> links_;
  std::vector<MeterEntry> meters_;  // links * 5 kinds
  double comm_seconds_ = 0.0;
  double compute_seconds_ = 0.0;
};

}  // namespace dct

#endif  // DCT_TRANSPORT_H_
