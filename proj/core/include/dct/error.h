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
#ifndef DCT_ERROR_H_
#define DCT_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dct {

// Every failure surfaced by the library carries one of these codes so callers
// (and the CLI exit-code mapping) can branch without parsing messages.
enum class ErrorCode {
  kShapeMismatch,
  kNumericOverflow,
  kInvalidArgument,
  kStaleForwardState,
  kEmptyInput,
  // Wire decoding.
  kTruncatedFrame,
  kBadMagic,
  kBadVersion,
  kBadEncoding,
  kPopcountMismatch,
  kIndexOutOfRange,
  kTrailingBytes,
  // Transport / runtime.
  kClosedLink,
  kUnknownLayer,
  kPartitionMismatch,
  kStalenessExceeded,
  kDatasetTooLarge,
  // Harness.
  kConfig,
  kIo,
  kUnknownSuite,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const { return code_; }
  // The message without the code prefix, for rewrapping with more context.
  const std::string& message() const { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace dct

#endif  // DCT_ERROR_H_
