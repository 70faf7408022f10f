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
#include "dct/transport.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <sstream>
#include <thread>

#include "dct/error.h"

namespace dct {

namespace {

constexpr std::size_t kKinds = 5;

void WriteAll(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kClosedLink, std::string("socket send failed: ") + std::strerror(errno));
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

// Returns false on clean EOF before any byte was read.
bool ReadAll(int fd, std::uint8_t* data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r == 0) {
      if (got == 0) return false;
      throw Error(ErrorCode::kTruncatedFrame, "socket closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kClosedLink, std::string("socket recv failed: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void LoopbackPair(int& send_fd, int& recv_fd) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw Error(ErrorCode::kIo, "cannot create loopback socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  socklen_t len = sizeof(addr);
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listener, 1) != 0 ||
      ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    ::close(listener);
    throw Error(ErrorCode::kIo, std::string("loopback listen failed: ") + std::strerror(errno));
  }
  send_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (send_fd < 0 || ::connect(send_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(listener);
    throw Error(ErrorCode::kIo, std::string("loopback connect failed: ") + std::strerror(errno));
  }
  recv_fd = ::accept(listener, nullptr, nullptr);
  ::close(listener);
  if (recv_fd < 0) throw Error(ErrorCode::kIo, "loopback accept failed");
  int one = 1;
  ::setsockopt(send_fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

double CostModel::TransferSeconds(std::size_t frame_bytes) const {
  return latency_seconds + static_cast<double>(frame_bytes) / bandwidth_bytes_per_second;
}

double CostModel::SortSeconds(std::uint64_t elements_sorted) const {
  return sort_seconds_per_element * static_cast<double>(elements_sorted);
}

bool ChannelMeter::Conserved() const {
  for (const auto& e : entries) {
    if (e.messages != e.received_messages || e.payload_bytes != e.received_payload_bytes ||
        e.header_bytes != e.received_header_bytes) {
      return false;
    }
  }
  return true;
}

std::uint64_t ChannelMeter::TotalBytes() const {
  std::uint64_t n = 0;
  for (const auto& e : entries) n += e.bytes();
  return n;
}

std::uint64_t ChannelMeter::TotalBytes(MessageKind kind) const {
  std::uint64_t n = 0;
  for (const auto& e : entries) {
    if (e.kind == kind) n += e.bytes();
  }
  return n;
}

std::uint64_t ChannelMeter::TotalMessages() const {
  std::uint64_t n = 0;
  for (const auto& e : entries) n += e.messages;
  return n;
}

std::string ChannelMeter::ToCsv() const {
  std::ostringstream os;
  os << "link,kind,messages,bytes,payload_bytes,header_bytes\n";
  for (const auto& e : entries) {
    if (e.messages == 0) continue;
    os << e.link << ',' << MessageKindName(e.kind) << ',' << e.messages << ',' << e.bytes() << ','
       << e.payload_bytes << ',' << e.header_bytes << '\n';
  }
  return os.str();
}

struct Transport::Link {
  std::string name;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<WireMessage> messages;
  std::deque<std::vector<std::uint8_t>> frames;
  bool closed = false;
  int send_fd = -1;
  int recv_fd = -1;
  std::thread reader;
  bool reader_done = false;
  std::string reader_error;
};

Transport::Transport(TransportMode mode, Precision precision, CostModel cost)
    : mode_(mode), precision_(precision), cost_(cost) {
  if (mode_ == TransportMode::kLoopbackSocket && precision_ == Precision::k64) {
    throw Error(ErrorCode::kInvalidArgument, "socket transport needs 32-bit wire precision");
  }
}

Transport::~Transport() {
  for (auto& link : links_) {
    if (link->send_fd >= 0) ::shutdown(link->send_fd, SHUT_RDWR);
    if (link->recv_fd >= 0) ::shutdown(link->recv_fd, SHUT_RDWR);
    if (link->reader.joinable()) link->reader.join();
    if (link->send_fd >= 0) ::close(link->send_fd);
    if (link->recv_fd >= 0) ::close(link->recv_fd);
  }
}

LinkId Transport::Connect(const std::string& from, const std::string& to) {
  const std::string name = from + "->" + to;
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (links_[i]->name == name) return i;
  }
  auto link = std::make_unique<Link>();
  link->name = name;
  if (mode_ == TransportMode::kLoopbackSocket) {
    LoopbackPair(link->send_fd, link->recv_fd);
    Link* raw = link.get();
    link->reader = std::thread([raw] {
      try {
        std::vector<std::uint8_t> header(kHeaderBytes);
        while (ReadAll(raw->recv_fd, header.data(), header.size())) {
          std::vector<std::uint8_t> frame = header;
          frame.resize(FrameLengthFromHeader(header));
          if (frame.size() > kHeaderBytes) {
            ReadAll(raw->recv_fd, frame.data() + kHeaderBytes, frame.size() - kHeaderBytes);
          }
          std::lock_guard l(raw->mu);
          raw->frames.push_back(std::move(frame));
          raw->cv.notify_all();
        }
      } catch (const std::exception& e) {
        std::lock_guard l(raw->mu);
        raw->reader_error = e.what();
      }
      std::lock_guard l(raw->mu);
      raw->reader_done = true;
      raw->cv.notify_all();
    });
  }
  links_.push_back(std::move(link));
  for (std::size_t k = 0; k < kKinds; ++k) {
    MeterEntry e;
    e.link = name;
    e.kind = static_cast<MessageKind>(k);
    meters_.push_back(e);
  }
  return links_.size() - 1;
}

Transport::Link& Transport::GetLink(LinkId id) const {
  std::lock_guard lock(mu_);
  if (id >= links_.size()) throw Error(ErrorCode::kClosedLink, "link was never established");
  return *links_[id];
}

const std::string& Transport::LinkName(LinkId link) const { return GetLink(link).name; }

std::size_t Transport::link_count() const {
  std::lock_guard lock(mu_);
  return links_.size();
}

void Transport::Meter(LinkId link, const WireMessage& m, bool sent) {
  const std::size_t payload = PayloadBytes(m.payload);
  std::lock_guard lock(mu_);
  MeterEntry& e = meters_[link * kKinds + static_cast<std::size_t>(m.kind)];
  if (sent) {
    ++e.messages;
    e.payload_bytes += payload;
    e.header_bytes += kHeaderBytes;
    comm_seconds_ += cost_.TransferSeconds(kHeaderBytes + payload);
  } else {
    ++e.received_messages;
    e.received_payload_bytes += payload;
    e.received_header_bytes += kHeaderBytes;
  }
}

void Transport::Send(LinkId id, const WireMessage& message) {
  Link& link = GetLink(id);
  {
    std::lock_guard l(link.mu);
    if (link.closed) throw Error(ErrorCode::kClosedLink, link.name + " is closed");
  }
  // Sender-side counters move before the message becomes visible, so a
  // snapshot never shows more received than sent.
  if (precision_ == Precision::k64) {
    message.payload.Validate();
    Meter(id, message, true);
    std::lock_guard l(link.mu);
    link.messages.push_back(message);
  } else {
    std::vector<std::uint8_t> frame = Encode(message);
    Meter(id, message, true);
    if (mode_ == TransportMode::kLoopbackSocket) {
      WriteAll(link.send_fd, frame.data(), frame.size());
    } else {
      std::lock_guard l(link.mu);
      link.frames.push_back(std::move(frame));
    }
  }
  link.cv.notify_all();
}

WireMessage Transport::Recv(LinkId id) {
  Link& link = GetLink(id);
  WireMessage out;
  {
    std::unique_lock l(link.mu);
    link.cv.wait(l, [&] {
      if (!link.messages.empty() || !link.frames.empty()) return true;
      if (!link.closed) return false;
      return mode_ == TransportMode::kInProcess || link.reader_done;
    });
    if (!link.messages.empty()) {
      out = std::move(link.messages.front());
      link.messages.pop_front();
    } else if (!link.frames.empty()) {
      std::vector<std::uint8_t> frame = std::move(link.frames.front());
      link.frames.pop_front();
      l.unlock();
      out = Decode(frame);
    } else {
      throw Error(ErrorCode::kClosedLink,
                  link.name + " is closed" +
                      (link.reader_error.empty() ? "" : " (" + link.reader_error + ")"));
    }
  }
  Meter(id, out, false);
  return out;
}

void Transport::Close(LinkId id) {
  Link& link = GetLink(id);
  {
    std::lock_guard l(link.mu);
    link.closed = true;
  }
  if (link.send_fd >= 0) ::shutdown(link.send_fd, SHUT_WR);
  link.cv.notify_all();
}

void Transport::RecordSort(std::uint64_t elements) {
  std::lock_guard lock(mu_);
  compute_seconds_ += cost_.SortSeconds(elements);
}

ChannelMeter Transport::Snapshot() const {
  std::lock_guard lock(mu_);
  return ChannelMeter{meters_};
}

double Transport::SimulatedTime() const {
  std::lock_guard lock(mu_);
  return comm_seconds_ + compute_seconds_;
}

double Transport::CommunicationTime() const {
  std::lock_guard lock(mu_);
  return comm_seconds_;
}

std::vector<std::uint64_t> Transport::LinkBytes() const {
  std::lock_guard lock(mu_);
  std::vector<std::uint64_t> out(links_.size(), 0);
  for (std::size_t i = 0; i < meters_.size(); ++i) out[i / kKinds] += meters_[i].bytes();
  return out;
}

}  // namespace dct
