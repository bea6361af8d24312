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
#include <span>
#include <vector>

namespace ctiqa {

/// Correlations between predictions and radiologist scores; the Overall
/// Score is their sum.
struct MetricReport {
  double plcc = 0.0;
  double srocc = 0.0;
  double krocc = 0.0;
  double overall = 0.0;
  std::size_t n = 0;
};

/// Pearson linear correlation. Requires equal lengths >= 3 and non-constant
/// inputs (LengthMismatch / DegenerateInput otherwise). Accumulators use
/// compensated summation.
double plcc(std::span<const double> truth, std::span<const double> pred);

/// Spearman rank correlation: Pearson over mid-ranks, which reduces to
/// 1 - 6*sum(d^2)/(n(n^2-1)) when there are no ties.
double srocc(std::span<const double> truth, std::span<const double> pred);

/// Kendall tau-b over all n(n-1)/2 pairs, computed by sort-and-merge
/// inversion counting in O(n log n). Pairs tied in both arguments are
/// excluded from concordant, discordant, and both tie terms.
double krocc(std::span<const double> truth, std::span<const double> pred);

/// The Overall Score: exact sum of the three coefficients.
double overall(double plcc_value, double srocc_value, double krocc_value);

MetricReport evaluate_metrics(std::span<const double> truth,
                              std::span<const double> pred);

/// Mid-ranks (average rank across each tied run), 1-based.
std::vector<double> midranks(std::span<const double> values);

}  // namespace ctiqa
