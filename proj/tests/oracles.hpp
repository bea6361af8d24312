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

// Brute-force reference implementations the metric tests check against.
// These deliberately share no code with the library: naive two-pass Pearson,
// O(n^2) counting mid-ranks, and O(n^2) pair-by-pair tau-b.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline double pearson_naive(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// rank_i = (#smaller + 1 + #smaller + #equal) / 2, counted pair by pair.
inline std::vector<double> midranks_naive(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t smaller = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (values[j] < values[i]) ++smaller;
      if (values[j] == values[i]) ++equal;
    }
    ranks[i] = (double(smaller + 1) + double(smaller + equal)) / 2.0;
  }
  return ranks;
}

inline double spearman_naive(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson_naive(midranks_naive(x), midranks_naive(y));
}

/// Direct tau-b: classify every pair as concordant, discordant, tie in x
/// only, tie in y only, or tie in both (excluded everywhere).
inline double taub_naive(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double concordant = 0, discordant = 0, ties_x_only = 0, ties_y_only = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dx = x[i] - x[j];
      double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) {
        ++ties_x_only;
      } else if (dy == 0.0) {
        ++ties_y_only;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  double denom = std::sqrt((concordant + discordant + ties_x_only) *
                           (concordant + discordant + ties_y_only));
  return (concordant - discordant) / denom;
}

/// Tie-free Spearman per the textbook formula, valid only without ties.
inline double spearman_d2(const std::vector<double>& x, const std::vector<double>& y) {
  auto rx = midranks_naive(x);
  auto ry = midranks_naive(y);
  const double n = double(x.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  }
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace oracle
