// Copyright 2026 The replearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace replearn {

// Bad arguments or violated preconditions. CLI exit code 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation would exceed a configured size limit. CLI exit code 2.
class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& what, std::uint64_t required_cap)
      : std::runtime_error(what), required_cap_(required_cap) {}

  // Smallest cap that would have let the computation proceed
  // (saturates at UINT64_MAX).
  std::uint64_t required_cap() const noexcept { return required_cap_; }

 private:
  std::uint64_t required_cap_;
};

// A checked mathematical property failed. CLI exit code 3.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace replearn
