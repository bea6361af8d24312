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

#include "ctiqa/errors.hpp"

namespace ctiqa {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::missing_column: return "MissingColumn";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::score_out_of_range: return "ScoreOutOfRange";
    case Errc::invalid_value: return "InvalidValue";
    case Errc::decode_failure: return "DecodeFailure";
    case Errc::unsupported_channel_count: return "UnsupportedChannelCount";
    case Errc::image_too_small: return "ImageTooSmall";
    case Errc::no_examples: return "NoExamples";
    case Errc::missing_metadata: return "MissingMetadata";
    case Errc::template_error: return "TemplateError";
    case Errc::exhausted: return "Exhausted";
    case Errc::auth_failure: return "AuthFailure";
    case Errc::timeout: return "Timeout";
    case Errc::no_score_found: return "NoScoreFound";
    case Errc::not_enough_examples: return "NotEnoughExamples";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::degenerate_input: return "DegenerateInput";
    case Errc::io_error: return "IoError";
    case Errc::config_error: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace ctiqa
