// Copyright 2026 The ctiqa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace ctiqa {

/// Incremental SHA-256 (FIPS 180-4). Self-contained so cache keys and config
/// fingerprints do not depend on a crypto library being present.
class Sha256 {
 public:
  Sha256();

  void update(const void* data, std::size_t len);
  void update(std::string_view s) { update(s.data(), s.size()); }

  /// Finalizes and returns the 32-byte digest. The object must not be
  /// updated afterwards.
  std::array<std::uint8_t, 32> digest();

  /// Finalizes and returns the digest as 64 lowercase hex characters.
  std::string hex_digest();

 private:
  void process_block(const std::uint8_t* block);

  std::array<std::uint32_t, 8> state_;
  std::array<std::uint8_t, 64> buffer_;
  std::uint64_t bit_count_ = 0;
  std::size_t buffer_len_ = 0;
};

/// One-shot convenience wrapper.
std::string sha256_hex(std::string_view data);

}  // namespace ctiqa
