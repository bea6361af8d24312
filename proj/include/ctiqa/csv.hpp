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

#include <string>
#include <string_view>
#include <vector>

namespace ctiqa {

/// Splits one CSV record. Double quotes delimit fields containing commas,
/// quotes, or newlines; "" inside a quoted field is a literal quote.
std::vector<std::string> split_csv_record(std::string_view line);

/// Quotes a field only when needed.
std::string csv_escape(std::string_view field);

/// Splits text into records, honoring quoted newlines. A trailing newline
/// does not produce an empty record.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace ctiqa
