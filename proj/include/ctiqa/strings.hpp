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

#include <optional>
#include <string>
#include <string_view>

namespace ctiqa {

// Locale-independent numeric formatting (std::to_chars under the hood).
// Everything that ends up in manifests, prompts, or JSONL must format
// identically on every machine.

/// Shortest representation that round-trips the exact double.
std::string format_double(double v);

/// Fixed-point with exactly `decimals` fractional digits.
std::string format_fixed(double v, int decimals);

/// Locale-independent strtod-style parse of the full string; nullopt when
/// the string is not a complete finite number.
std::optional<double> parse_double(std::string_view s);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

}  // namespace ctiqa
