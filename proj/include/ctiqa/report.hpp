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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctiqa/metrics.hpp"

namespace ctiqa {

/// One table row: how a (model, strategy) run scored.
struct RunSummary {
  std::string model_name;
  std::string strategy;
  MetricReport metrics;
  std::size_t failure_count = 0;
  std::optional<double> cache_hit_rate;  // telemetry; absent when re-deriving
  std::optional<double> wall_time_s;     // from persisted predictions alone
};

enum class TableFormat { csv, json, markdown };

/// Renders summaries sorted ascending by Overall Score, values to four
/// decimal places.
std::string emit_table(const std::vector<RunSummary>& summaries, TableFormat format);

/// Scatter of (truth, pred) pairs on fixed [0,4] x [0,4] axes with the
/// identity line; one marker per pair.
std::string emit_scatter(std::span<const double> truth, std::span<const double> pred);

/// Two overlaid histograms binned on [0, 4] with width 0.25 (16 bins, the
/// top bin right-closed), with a legend distinguishing the series.
std::string emit_histogram(std::span<const double> truth, std::span<const double> pred);

/// Bin counts used by emit_histogram; exposed so conservation is testable
/// without scraping SVG.
std::array<std::size_t, 16> histogram_counts(std::span<const double> values);

}  // namespace ctiqa
