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
#include "dct/error.h"

namespace dct {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kNumericOverflow: return "numeric overflow";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kStaleForwardState: return "stale forward state";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kTruncatedFrame: return "truncated frame";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kBadVersion: return "bad version";
    case ErrorCode::kBadEncoding: return "bad encoding";
    case ErrorCode::kPopcountMismatch: return "popcount mismatch";
    case ErrorCode::kIndexOutOfRange: return "index out of range";
    case ErrorCode::kTrailingBytes: return "trailing bytes";
    case ErrorCode::kClosedLink: return "closed link";
    case ErrorCode::kUnknownLayer: return "unknown layer";
    case ErrorCode::kPartitionMismatch: return "partition mismatch";
    case ErrorCode::kStalenessExceeded: return "staleness exceeded";
    case ErrorCode::kDatasetTooLarge: return "dataset too large";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kUnknownSuite: return "unknown suite";
  }
  return "unknown error";
}

}  // namespace dct
