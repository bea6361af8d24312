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

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctiqa {

enum class Errc {
  // dataset
  missing_column,
  duplicate_id,
  score_out_of_range,
  invalid_value,
  decode_failure,
  unsupported_channel_count,
  // noise
  image_too_small,
  // prompt
  no_examples,
  missing_metadata,
  template_error,
  // gateway
  exhausted,
  auth_failure,
  timeout,
  no_score_found,
  // orchestrator
  not_enough_examples,
  // metrics / report
  length_mismatch,
  degenerate_input,
  // generic
  io_error,
  config_error,
};

std::string_view errc_name(Errc code);

/// Exception carrying a machine-checkable error code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace ctiqa
