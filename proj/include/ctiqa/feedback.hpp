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

#include <cstddef>
#include <string>
#include <vector>

namespace ctiqa {

/// One scored-and-checked sample carried between inference steps: the true
/// score, the model's prediction, their absolute error, and the sample's
/// noise level.
struct FeedbackEntry {
  std::string id;
  double y = 0.0;      // true (radiologist) score, in [0, 4]
  double y_hat = 0.0;  // model prediction, in [0, 4]
  double e = 0.0;      // |y - y_hat|, exactly
  double n = 0.0;      // noise level of the sample, >= 0

  bool operator==(const FeedbackEntry&) const = default;
};

/// Appends an entry with e = |y - y_hat|; evicts the oldest entries (FIFO)
/// when the buffer would exceed `cap`.
std::vector<FeedbackEntry> update_feedback(std::vector<FeedbackEntry> buffer,
                                           const std::string& id, double y,
                                           double y_hat, double n,
                                           std::size_t cap);

}  // namespace ctiqa
