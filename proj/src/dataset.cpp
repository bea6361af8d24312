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

#include "ctiqa/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "ctiqa/csv.hpp"
#include "ctiqa/errors.hpp"
#include "ctiqa/strings.hpp"

namespace ctiqa {

std::string_view split_name(Split s) {
  return s == Split::train ? "train" : "test";
}

std::size_t Dataset::count(Split s) const {
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.split == s) ++n;
  }
  return n;
}

std::vector<const ImageRecord*> Dataset::split_records(Split s) const {
  std::vector<const ImageRecord*> out;
  for (const auto& r : records) {
    if (r.split == s) out.push_back(&r);
  }
  return out;
}

const ImageRecord* Dataset::find(std::string_view id) const {
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

Dataset load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();

  auto rows = parse_csv(text);
  if (rows.empty()) {
    throw Error(Errc::missing_column,
                "manifest " + path.string() + " has no header row");
  }

  // Header must match the schema exactly, in order.
  const std::vector<std::string> expected = {"id",    "path",   "split",
                                             "score", "region", "noise"};
  const auto& header = rows.front();
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= header.size() || std::string(trim(header[i])) != expected[i]) {
      throw Error(Errc::missing_column,
                  "manifest header column " + std::to_string(i + 1) +
                      " must be '" + expected[i] + "'" +
                      (i < header.size() ? ", got '" + header[i] + "'" : ""));
    }
  }
  if (header.size() != expected.size()) {
    throw Error(Errc::missing_column,
                "manifest header has " + std::to_string(header.size()) +
                    " columns, expected 6");
  }

  Dataset dataset;
  dataset.root = path.parent_path();
  std::unordered_set<std::string> seen_ids;

  for (std::size_t row_idx = 1; row_idx < rows.size(); ++row_idx) {
    const auto& row = rows[row_idx];
    const std::string row_label = "row " + std::to_string(row_idx);
    if (row.size() != expected.size()) {
      throw Error(Errc::missing_column,
                  row_label + " has " + std::to_string(row.size()) +
                      " fields, expected 6");
    }

    ImageRecord rec;
    rec.id = std::string(trim(row[0]));
    if (rec.id.empty()) {
      throw Error(Errc::invalid_value, row_label + " has an empty id");
    }
    if (!seen_ids.insert(rec.id).second) {
      throw Error(Errc::duplicate_id,
                  row_label + " repeats id '" + rec.id + "'");
    }
    rec.path = std::string(trim(row[1]));
    if (rec.path.empty()) {
      throw Error(Errc::invalid_value, row_label + " has an empty path");
    }

    std::string split = std::string(trim(row[2]));
    if (split == "train") {
      rec.split = Split::train;
    } else if (split == "test") {
      rec.split = Split::test;
    } else {
      throw Error(Errc::invalid_value,
                  row_label + " split must be 'train' or 'test', got '" +
                      split + "'");
    }

    if (!trim(row[3]).empty()) {
      auto score = parse_double(row[3]);
      if (!score) {
        throw Error(Errc::invalid_value,
                    row_label + " score '" + row[3] + "' is not a number");
      }
      if (*score < 0.0 || *score > 4.0) {
        throw Error(Errc::score_out_of_range,
                    row_label + " (id '" + rec.id + "') score " +
                        format_double(*score) + " lies outside [0, 4]");
      }
      rec.score = *score;
    }

    if (!trim(row[4]).empty()) rec.region = std::string(trim(row[4]));

    if (!trim(row[5]).empty()) {
      auto noise = parse_double(row[5]);
      if (!noise || *noise < 0.0) {
        throw Error(Errc::invalid_value,
                    row_label + " noise '" + row[5] +
                        "' must be a nonnegative number");
      }
      rec.noise = *noise;
    }

    dataset.records.push_back(std::move(rec));
  }
  return dataset;
}

std::string write_manifest(const Dataset& dataset) {
  std::string out(kManifestHeader);
  out.push_back('\n');
  for (const auto& r : dataset.records) {
    out += csv_escape(r.id);
    out.push_back(',');
    out += csv_escape(r.path.generic_string());
    out.push_back(',');
    out += split_name(r.split);
    out.push_back(',');
    if (r.score) out += format_double(*r.score);
    out.push_back(',');
    if (r.region) out += csv_escape(*r.region);
    out.push_back(',');
    if (r.noise) out += format_double(*r.noise);
    out.push_back('\n');
  }
  return out;
}

void write_manifest(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
  out << write_manifest(dataset);
  if (!out) throw Error(Errc::io_error, "short write to " + path.string());
}

ImageBuffer load_image(const Dataset& dataset, const ImageRecord& record) {
  std::filesystem::path p = record.path;
  if (p.is_relative()) p = dataset.root / p;
  return decode_png_gray(p);
}

Dataset rebase_dataset(Dataset dataset, const std::filesystem::path& new_root) {
  for (auto& rec : dataset.records) {
    std::filesystem::path absolute = rec.path;
    if (absolute.is_relative()) absolute = dataset.root / absolute;
    absolute = std::filesystem::weakly_canonical(absolute);
    std::error_code ec;
    std::filesystem::path relative = std::filesystem::relative(
        absolute, std::filesystem::weakly_canonical(new_root), ec);
    rec.path = (ec || relative.empty()) ? absolute : relative;
  }
  dataset.root = new_root;
  return dataset;
}

}  // namespace ctiqa
