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

#include "ctiqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctiqa/errors.hpp"

namespace ctiqa {

namespace {

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double value) {
    double t = sum_ + value;
    if (std::fabs(sum_) >= std::fabs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

bool is_constant(std::span<const double> values) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] != values[0]) return false;
  }
  return true;
}

void validate_pair(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size()) {
    throw Error(Errc::length_mismatch,
                "truth has " + std::to_string(truth.size()) + " values, pred has " +
                    std::to_string(pred.size()));
  }
  if (truth.size() < 3) {
    throw Error(Errc::degenerate_input,
                "need at least 3 samples, got " + std::to_string(truth.size()));
  }
  if (is_constant(truth)) {
    throw Error(Errc::degenerate_input, "truth values are constant");
  }
  if (is_constant(pred)) {
    throw Error(Errc::degenerate_input, "pred values are constant");
  }
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < n; ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  const double mx = sx.value() / double(n);
  const double my = sy.value() / double(n);

  CompensatedSum sxy, sxx, syy;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx;
    double dy = y[i] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  double denom = std::sqrt(sxx.value()) * std::sqrt(syy.value());
  if (denom == 0.0) {
    throw Error(Errc::degenerate_input, "zero variance input");
  }
  return sxy.value() / denom;
}

/// Counts pairs (i < j) with y[i] > y[j] (strict inversions) by merge sort.
std::uint64_t count_inversions(std::vector<double>& values) {
  std::vector<double> scratch(values.size());
  std::uint64_t inversions = 0;

  const std::size_t n = values.size();
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
      std::size_t mid = lo + width;
      std::size_t hi = std::min(mid + width, n);
      std::size_t left = lo, right = mid, out = lo;
      while (left < mid && right < hi) {
        if (values[right] < values[left]) {
          inversions += mid - left;  // every remaining left element beats it
          scratch[out++] = values[right++];
        } else {
          scratch[out++] = values[left++];
        }
      }
      while (left < mid) scratch[out++] = values[left++];
      while (right < hi) scratch[out++] = values[right++];
      std::copy(scratch.begin() + lo, scratch.begin() + hi, values.begin() + lo);
    }
  }
  return inversions;
}

std::uint64_t tie_pair_count(std::vector<double> sorted_values) {
  std::uint64_t pairs = 0;
  std::size_t i = 0;
  const std::size_t n = sorted_values.size();
  while (i < n) {
    std::size_t j = i;
    while (j < n && sorted_values[j] == sorted_values[i]) ++j;
    std::uint64_t t = j - i;
    pairs += t * (t - 1) / 2;
    i = j;
  }
  return pairs;
}

}  // namespace

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    double average = (double(i + 1) + double(j)) / 2.0;  // 1-based
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = average;
    i = j;
  }
  return ranks;
}

double plcc(std::span<const double> truth, std::span<const double> pred) {
  validate_pair(truth, pred);
  return pearson(truth, pred);
}

double srocc(std::span<const double> truth, std::span<const double> pred) {
  validate_pair(truth, pred);
  auto rt = midranks(truth);
  auto rp = midranks(pred);
  return pearson(rt, rp);
}

double krocc(std::span<const double> truth, std::span<const double> pred) {
  validate_pair(truth, pred);
  const std::size_t n = truth.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (truth[a] != truth[b]) return truth[a] < truth[b];
    return pred[a] < pred[b];
  });

  // Knight's algorithm. With the data sorted by (truth, pred), discordant
  // pairs are exactly the strict inversions of the pred sequence; tie terms
  // come from run lengths.
  std::uint64_t n0 = std::uint64_t(n) * (n - 1) / 2;

  std::uint64_t ties_truth = 0;      // pairs tied in truth (incl. tied in both)
  std::uint64_t ties_both = 0;       // pairs tied in truth and pred
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && truth[order[j]] == truth[order[i]]) ++j;
    std::uint64_t t = j - i;
    ties_truth += t * (t - 1) / 2;
    std::size_t a = i;
    while (a < j) {
      std::size_t b = a;
      while (b < j && pred[order[b]] == pred[order[a]]) ++b;
      std::uint64_t u = b - a;
      ties_both += u * (u - 1) / 2;
      a = b;
    }
    i = j;
  }

  std::vector<double> pred_sorted(n);
  for (std::size_t t = 0; t < n; ++t) pred_sorted[t] = pred[order[t]];
  std::uint64_t discordant = count_inversions(pred_sorted);

  std::vector<double> pred_only(pred.begin(), pred.end());
  std::sort(pred_only.begin(), pred_only.end());
  std::uint64_t ties_pred = tie_pair_count(std::move(pred_only));

  // concordant - discordant = n0 - ties_truth - ties_pred + ties_both - 2*D
  double numerator = double(n0) - double(ties_truth) - double(ties_pred) +
                     double(ties_both) - 2.0 * double(discordant);
  double denom = std::sqrt(double(n0 - ties_truth)) * std::sqrt(double(n0 - ties_pred));
  if (denom == 0.0) {
    throw Error(Errc::degenerate_input, "all pairs tied");
  }
  return numerator / denom;
}

double overall(double plcc_value, double srocc_value, double krocc_value) {
  return plcc_value + srocc_value + krocc_value;
}

MetricReport evaluate_metrics(std::span<const double> truth,
                              std::span<const double> pred) {
  MetricReport report;
  report.n = truth.size();
  report.plcc = plcc(truth, pred);
  report.srocc = srocc(truth, pred);
  report.krocc = krocc(truth, pred);
  report.overall = overall(report.plcc, report.srocc, report.krocc);
  return report;
}

}  // namespace ctiqa
