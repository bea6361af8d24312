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

#include "ctiqa/report.hpp"

#include <algorithm>

#include <json.hpp>

#include "ctiqa/csv.hpp"
#include "ctiqa/errors.hpp"
#include "ctiqa/strings.hpp"

namespace ctiqa {

namespace {

constexpr double kAxisMax = 4.0;

std::vector<const RunSummary*> sorted_by_overall(const std::vector<RunSummary>& summaries) {
  std::vector<const RunSummary*> out;
  out.reserve(summaries.size());
  for (const auto& s : summaries) out.push_back(&s);
  std::stable_sort(out.begin(), out.end(), [](const RunSummary* l, const RunSummary* r) {
    return l->metrics.overall < r->metrics.overall;
  });
  return out;
}

std::string f4(double v) { return format_fixed(v, 4); }

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct PlotFrame {
  double margin = 56.0;
  double plot = 400.0;

  double width() const { return plot + 2 * margin; }
  double height() const { return plot + 2 * margin; }
  double x(double v) const { return margin + v / kAxisMax * plot; }
  double y(double v) const { return margin + plot - v / kAxisMax * plot; }
};

void append_axes(std::string& svg, const PlotFrame& f, const std::string& x_label,
                 const std::string& y_label) {
  svg += "<rect x=\"" + format_fixed(f.margin, 1) + "\" y=\"" +
         format_fixed(f.margin, 1) + "\" width=\"" + format_fixed(f.plot, 1) +
         "\" height=\"" + format_fixed(f.plot, 1) +
         "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    double px = f.x(tick);
    double py = f.y(tick);
    svg += "<line x1=\"" + format_fixed(px, 1) + "\" y1=\"" +
           format_fixed(f.margin + f.plot, 1) + "\" x2=\"" + format_fixed(px, 1) +
           "\" y2=\"" + format_fixed(f.margin + f.plot + 6, 1) +
           "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + format_fixed(px, 1) + "\" y=\"" +
           format_fixed(f.margin + f.plot + 20, 1) +
           "\" font-size=\"12\" text-anchor=\"middle\">" + std::to_string(tick) +
           "</text>\n";
    svg += "<line x1=\"" + format_fixed(f.margin - 6, 1) + "\" y1=\"" +
           format_fixed(py, 1) + "\" x2=\"" + format_fixed(f.margin, 1) +
           "\" y2=\"" + format_fixed(py, 1) +
           "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + format_fixed(f.margin - 10, 1) + "\" y=\"" +
           format_fixed(py + 4, 1) +
           "\" font-size=\"12\" text-anchor=\"end\">" + std::to_string(tick) +
           "</text>\n";
  }
  svg += "<text x=\"" + format_fixed(f.margin + f.plot / 2, 1) + "\" y=\"" +
         format_fixed(f.margin + f.plot + 40, 1) +
         "\" font-size=\"13\" text-anchor=\"middle\">" + xml_escape(x_label) +
         "</text>\n";
  svg += "<text x=\"16\" y=\"" + format_fixed(f.margin + f.plot / 2, 1) +
         "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         format_fixed(f.margin + f.plot / 2, 1) + ")\">" + xml_escape(y_label) +
         "</text>\n";
}

void check_pair_sizes(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size()) {
    throw Error(Errc::length_mismatch,
                "truth has " + std::to_string(truth.size()) + " values, pred has " +
                    std::to_string(pred.size()));
  }
  if (truth.empty()) {
    throw Error(Errc::length_mismatch, "no pairs to plot");
  }
}

}  // namespace

std::string emit_table(const std::vector<RunSummary>& summaries, TableFormat format) {
  if (summaries.empty()) {
    throw Error(Errc::invalid_value, "no run summaries to tabulate");
  }
  auto rows = sorted_by_overall(summaries);

  switch (format) {
    case TableFormat::csv: {
      std::string out =
          "model,strategy,plcc,srocc,krocc,overall,n,failures,cache_hit_rate,"
          "wall_time_s\n";
      for (const RunSummary* s : rows) {
        out += csv_escape(s->model_name) + "," + csv_escape(s->strategy) + "," +
               f4(s->metrics.plcc) + "," + f4(s->metrics.srocc) + "," +
               f4(s->metrics.krocc) + "," + f4(s->metrics.overall) + "," +
               std::to_string(s->metrics.n) + "," + std::to_string(s->failure_count) +
               "," + (s->cache_hit_rate ? f4(*s->cache_hit_rate) : "") + "," +
               (s->wall_time_s ? format_fixed(*s->wall_time_s, 3) : "") + "\n";
      }
      return out;
    }
    case TableFormat::json: {
      nlohmann::json doc = nlohmann::json::array();
      for (const RunSummary* s : rows) {
        nlohmann::json row{{"model", s->model_name},
                           {"strategy", s->strategy},
                           {"plcc", f4(s->metrics.plcc)},
                           {"srocc", f4(s->metrics.srocc)},
                           {"krocc", f4(s->metrics.krocc)},
                           {"overall", f4(s->metrics.overall)},
                           {"n", s->metrics.n},
                           {"failures", s->failure_count}};
        if (s->cache_hit_rate) row["cache_hit_rate"] = f4(*s->cache_hit_rate);
        if (s->wall_time_s) row["wall_time_s"] = format_fixed(*s->wall_time_s, 3);
        doc.push_back(std::move(row));
      }
      return doc.dump(2) + "\n";
    }
    case TableFormat::markdown: {
      std::string out =
          "| Model | Strategy | PLCC | SROCC | KROCC | Overall Score |\n"
          "|---|---|---|---|---|---|\n";
      for (const RunSummary* s : rows) {
        out += "| " + s->model_name + " | " + s->strategy + " | " +
               f4(s->metrics.plcc) + " | " + f4(s->metrics.srocc) + " | " +
               f4(s->metrics.krocc) + " | " + f4(s->metrics.overall) + " |\n";
      }
      return out;
    }
  }
  throw Error(Errc::invalid_value, "unknown table format");
}

std::string emit_scatter(std::span<const double> truth, std::span<const double> pred) {
  check_pair_sizes(truth, pred);
  PlotFrame f;
  std::string svg =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
      format_fixed(f.width(), 0) + "\" height=\"" + format_fixed(f.height(), 0) +
      "\" viewBox=\"0 0 " + format_fixed(f.width(), 0) + " " +
      format_fixed(f.height(), 0) + "\">\n";
  append_axes(svg, f, "Radiologist score", "Model score");
  // Identity line y = x.
  svg += "<line x1=\"" + format_fixed(f.x(0), 1) + "\" y1=\"" +
         format_fixed(f.y(0), 1) + "\" x2=\"" + format_fixed(f.x(4), 1) +
         "\" y2=\"" + format_fixed(f.y(4), 1) +
         "\" stroke=\"#888\" stroke-width=\"1\" stroke-dasharray=\"5 4\"/>\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    svg += "<circle class=\"pt\" cx=\"" + format_fixed(f.x(truth[i]), 2) +
           "\" cy=\"" + format_fixed(f.y(pred[i]), 2) +
           "\" r=\"4\" fill=\"#1f77b4\" fill-opacity=\"0.65\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::array<std::size_t, 16> histogram_counts(std::span<const double> values) {
  std::array<std::size_t, 16> counts{};
  for (double v : values) {
    double clamped = std::min(std::max(v, 0.0), 4.0);
    auto bin = static_cast<std::size_t>(clamped / 0.25);
    if (bin > 15) bin = 15;  // 4.0 belongs to the top bin
    ++counts[bin];
  }
  return counts;
}

std::string emit_histogram(std::span<const double> truth, std::span<const double> pred) {
  check_pair_sizes(truth, pred);
  auto truth_counts = histogram_counts(truth);
  auto pred_counts = histogram_counts(pred);
  std::size_t peak = 1;
  for (std::size_t i = 0; i < 16; ++i) {
    peak = std::max({peak, truth_counts[i], pred_counts[i]});
  }

  PlotFrame f;
  const double bin_width = f.plot / 16.0;
  auto bar_height = [&](std::size_t count) {
    return f.plot * double(count) / double(peak);
  };

  std::string svg =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
      format_fixed(f.width(), 0) + "\" height=\"" + format_fixed(f.height(), 0) +
      "\" viewBox=\"0 0 " + format_fixed(f.width(), 0) + " " +
      format_fixed(f.height(), 0) + "\">\n";

  auto append_series = [&](const std::array<std::size_t, 16>& counts,
                           const char* cls, const char* color) {
    for (std::size_t i = 0; i < 16; ++i) {
      double h = bar_height(counts[i]);
      svg += std::string("<rect class=\"") + cls + "\" x=\"" +
             format_fixed(f.margin + double(i) * bin_width, 2) + "\" y=\"" +
             format_fixed(f.margin + f.plot - h, 2) + "\" width=\"" +
             format_fixed(bin_width, 2) + "\" height=\"" + format_fixed(h, 2) +
             "\" fill=\"" + color + "\" fill-opacity=\"0.55\"/>\n";
    }
  };
  append_series(truth_counts, "bar-truth", "#1f77b4");
  append_series(pred_counts, "bar-pred", "#ff7f0e");

  // Axis frame drawn after the bars so the border stays visible.
  std::string x_axis_label = "Score";
  append_axes(svg, f, x_axis_label, "Count");

  // Legend.
  double lx = f.margin + 10, ly = f.margin + 12;
  svg += "<rect x=\"" + format_fixed(lx, 1) + "\" y=\"" + format_fixed(ly, 1) +
         "\" width=\"14\" height=\"14\" fill=\"#1f77b4\" fill-opacity=\"0.55\"/>\n";
  svg += "<text x=\"" + format_fixed(lx + 20, 1) + "\" y=\"" +
         format_fixed(ly + 12, 1) + "\" font-size=\"12\">Radiologist</text>\n";
  svg += "<rect x=\"" + format_fixed(lx, 1) + "\" y=\"" + format_fixed(ly + 20, 1) +
         "\" width=\"14\" height=\"14\" fill=\"#ff7f0e\" fill-opacity=\"0.55\"/>\n";
  svg += "<text x=\"" + format_fixed(lx + 20, 1) + "\" y=\"" +
         format_fixed(ly + 32, 1) + "\" font-size=\"12\">Model</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace ctiqa
