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

#include "ctiqa/feedback.hpp"

#include <cmath>

#include "ctiqa/errors.hpp"

namespace ctiqa {

std::vector<FeedbackEntry> update_feedback(std::vector<FeedbackEntry> buffer,
                                           const std::string& id, double y,
                                           double y_hat, double n,
                                           std::size_t cap) {
  if (y < 0.0 || y > 4.0 || y_hat < 0.0 || y_hat > 4.0) {
    throw Error(Errc::invalid_value,
                "feedback scores must lie in [0, 4] (id '" + id + "')");
  }
  FeedbackEntry entry;
  entry.id = id;
  entry.y = y;
  entry.y_hat = y_hat;
  entry.e = std::fabs(y - y_hat);
  entry.n = n;
  buffer.push_back(std::move(entry));
  while (cap > 0 && buffer.size() > cap) {
    buffer.erase(buffer.begin());
  }
  return buffer;
}

}  // namespace ctiqa
