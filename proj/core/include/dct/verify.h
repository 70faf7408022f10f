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
#ifndef DCT_VERIFY_H_
#define DCT_VERIFY_H_

#include <cstdint>
#include <string>
#include <vector>

namespace dct {

struct VerifyCase {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyCase> cases;
  double seconds = 0.0;

  bool passed() const;
  std::string ToString() const;
};

std::vector<std::string> VerifySuiteNames();

// Throws kUnknownSuite for names outside VerifySuiteNames().
VerifyReport RunVerifySuite(const std::string& suite, std::uint64_t seed = 1);

}  // namespace dct

#endif  // DCT_VERIFY_H_
