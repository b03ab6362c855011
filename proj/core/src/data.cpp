/*
 * Copyright 2026 The unisel Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "unisel/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "unisel/error.hpp"
#include "unisel/random.hpp"

namespace unisel {

namespace {

std::vector<std::string_view> split_line(std::string_view line, char delimiter) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view cell, double& out) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ParsedTable {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Label> labels;
  bool has_label = false;
};

ParsedTable parse_table(std::string_view text, const DelimitedOptions& options, bool label_required) {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF) text.remove_prefix(3);  // BOM
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = pos + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();

  std::size_t first_data = 0;
  std::size_t label_col = std::string::npos;
  std::size_t width = 0;
  if (options.header) {
    require(!lines.empty(), ErrorCode::kDataError, "empty dataset");
    const auto names = split_line(lines[0], options.delimiter);
    width = names.size();
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (trim(names[c]) == options.label_column) {
        require(label_col == std::string::npos, ErrorCode::kDataError,
                "duplicate label column '" + options.label_column + "'");
        label_col = c;
      }
    }
    first_data = 1;
  } else {
    require(!lines.empty(), ErrorCode::kDataError, "empty dataset");
    width = split_line(lines[0], options.delimiter).size();
    label_col = width - 1;  // headerless files carry the label last
  }
  require(!label_required || label_col != std::string::npos, ErrorCode::kDataError,
          "missing label column '" + options.label_column + "'");

  ParsedTable table;
  table.has_label = label_col != std::string::npos;
  table.cols = table.has_label ? width - 1 : width;
  require(table.cols >= 1, ErrorCode::kDataError, "dataset has no feature columns");

  for (std::size_t li = first_data; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto cells = split_line(lines[li], options.delimiter);
    const std::size_t row_no = li + 1;  // 1-based line number
    require(cells.size() == width, ErrorCode::kDataError,
            "line " + std::to_string(row_no) + ": expected " + std::to_string(width) +
                " columns, found " + std::to_string(cells.size()));
    for (std::size_t c = 0; c < width; ++c) {
      double v = 0.0;
      const bool ok = parse_double(cells[c], v);
      if (!ok || !std::isfinite(v)) {
        fail(ErrorCode::kDataError, "line " + std::to_string(row_no) + ", column " +
                                        std::to_string(c + 1) + ": non-numeric or non-finite value '" +
                                        std::string(trim(cells[c])) + "'");
      }
      if (c == label_col) {
        require(v == 0.0 || v == 1.0, ErrorCode::kDataError,
                "line " + std::to_string(row_no) + ", column " + std::to_string(c + 1) +
                    ": label must be 0 or 1");
        table.labels.push_back(static_cast<Label>(v));
      } else {
        table.values.push_back(v);
      }
    }
    ++table.rows;
  }
  require(table.rows > 0, ErrorCode::kDataError, "empty dataset");
  return table;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset::Dataset(std::string name, Matrix features, std::vector<Label> labels)
    : name_(std::move(name)), features_(std::move(features)), labels_(std::move(labels)) {
  require(features_.rows() >= 1, ErrorCode::kDataError, "empty dataset");
  require(features_.cols() >= 1, ErrorCode::kDataError, "dataset has no feature columns");
  require(labels_.size() == features_.rows(), ErrorCode::kDataError,
          "label count does not match row count");
  require(features_.all_finite(), ErrorCode::kDataError, "dataset contains non-finite values");
  for (Label l : labels_) {
    require(l <= 1, ErrorCode::kDataError, "labels must be 0 or 1");
    outliers_ += l;
  }
}

Dataset parse_delimited(std::string_view text, std::string name, const DelimitedOptions& options) {
  auto table = parse_table(text, options, true);
  return Dataset(std::move(name), Matrix(table.rows, table.cols, std::move(table.values)),
                 std::move(table.labels));
}

Dataset load_delimited(const std::filesystem::path& path, const DelimitedOptions& options) {
  return parse_delimited(read_file(path), path.stem().string(), options);
}

FeatureTable load_feature_table(const std::filesystem::path& path, const DelimitedOptions& options) {
  auto table = parse_table(read_file(path), options, false);
  return {Matrix(table.rows, table.cols, std::move(table.values)), std::move(table.labels)};
}

std::string format_delimited(const Dataset& ds) {
  std::string out;
  for (std::size_t j = 0; j < ds.dimension(); ++j) {
    out += 'f';
    out += std::to_string(j);
    out += ',';
  }
  out += "label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.features().row(i)) {
      out += format_double(v);
      out += ',';
    }
    out += ds.labels()[i] ? '1' : '0';
    out += '\n';
  }
  return out;
}

void write_delimited(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + path.string());
  out << format_delimited(ds);
}

SplitIndices stratified_split(const std::vector<Label>& labels, double test_fraction,
                              std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0, ErrorCode::kInvalidArgument,
          "test_fraction must lie in (0, 1)");
  IndexList by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] <= 1, ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    by_class[labels[i]].push_back(i);
  }
  require(!by_class[0].empty() && !by_class[1].empty(), ErrorCode::kInvalidArgument,
          "stratified split needs both classes present");

  std::size_t test_count[2];
  for (int c = 0; c < 2; ++c) {
    test_count[c] = static_cast<std::size_t>(
        std::lround(static_cast<double>(by_class[c].size()) * test_fraction));
  }
  const auto target = static_cast<std::size_t>(
      std::lround(static_cast<double>(labels.size()) * test_fraction));
  const int majority = by_class[0].size() >= by_class[1].size() ? 0 : 1;
  const std::size_t total = test_count[0] + test_count[1];
  if (total < target && test_count[majority] < by_class[majority].size()) {
    ++test_count[majority];
  } else if (total > target && test_count[majority] > 0) {
    --test_count[majority];
  }

  require(test_count[0] + test_count[1] > 0, ErrorCode::kInvalidArgument,
          "stratified split: test_fraction " + std::to_string(test_fraction) + " leaves no test rows out of " +
              std::to_string(labels.size()));
  require(test_count[0] + test_count[1] < labels.size(), ErrorCode::kInvalidArgument,
          "stratified split: test_fraction leaves no training rows");

  Rng rng(seed);
  SplitIndices split;
  split.seed = seed;
  for (int c = 0; c < 2; ++c) {
    auto idx = by_class[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    split.test_indices.insert(split.test_indices.end(), idx.begin(),
                              idx.begin() + static_cast<std::ptrdiff_t>(test_count[c]));
    split.train_indices.insert(split.train_indices.end(),
                               idx.begin() + static_cast<std::ptrdiff_t>(test_count[c]), idx.end());
  }
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  return split;
}

SyntheticSpec parse_synthetic_spec(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("synthetic spec: ") + e.what());
  }
  SyntheticSpec spec;
  try {
    spec.n_normal = j.at("n_normal").get<std::size_t>();
    spec.n_outlier = j.at("n_outlier").get<std::size_t>();
    spec.dimension = j.at("d").get<std::size_t>();
    spec.cluster_centers = j.value("cluster_centers", std::vector<std::vector<double>>{});
    if (j.contains("cluster_spread") && j["cluster_spread"].is_number()) {
      spec.cluster_spread.assign(spec.cluster_centers.size(), j["cluster_spread"].get<double>());
    } else {
      spec.cluster_spread = j.value("cluster_spread", std::vector<double>{});
    }
    spec.outlier_center = j.at("outlier_center").get<std::vector<double>>();
    spec.outlier_spread = j.at("outlier_spread").get<double>();
    spec.name = j.value("name", std::string("synthetic"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("synthetic spec: ") + e.what());
  }
  return spec;
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  const std::size_t d = spec.dimension;
  require(d >= 1, ErrorCode::kInvalidArgument, "synthetic spec: d must be >= 1");
  require(spec.n_normal + spec.n_outlier >= 1, ErrorCode::kInvalidArgument,
          "synthetic spec: no instances requested");
  require(spec.n_normal == 0 || !spec.cluster_centers.empty(), ErrorCode::kInvalidArgument,
          "synthetic spec: normals requested without cluster centers");
  require(spec.cluster_spread.size() == spec.cluster_centers.size(), ErrorCode::kInvalidArgument,
          "synthetic spec: one spread per cluster center required");
  for (const auto& c : spec.cluster_centers) {
    require(c.size() == d, ErrorCode::kInvalidArgument,
            "synthetic spec: cluster center dimension mismatch");
  }
  for (double s : spec.cluster_spread) {
    require(s > 0.0, ErrorCode::kInvalidArgument, "synthetic spec: spreads must be positive");
  }
  require(spec.outlier_center.size() == d, ErrorCode::kInvalidArgument,
          "synthetic spec: outlier center dimension mismatch");
  require(spec.outlier_spread > 0.0, ErrorCode::kInvalidArgument,
          "synthetic spec: spreads must be positive");

  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = spec.n_normal + spec.n_outlier;
  Matrix raw(n, d);
  std::vector<Label> raw_labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool outlier = i >= spec.n_normal;
    const auto& center = outlier ? spec.outlier_center
                                 : spec.cluster_centers[i % spec.cluster_centers.size()];
    const double spread = outlier ? spec.outlier_spread
                                  : spec.cluster_spread[i % spec.cluster_centers.size()];
    auto r = raw.row(i);
    for (std::size_t j = 0; j < d; ++j) r[j] = center[j] + spread * gauss(rng);
    raw_labels[i] = outlier ? 1 : 0;
  }
  IndexList order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = raw_labels[order[i]];
  return Dataset(spec.name, raw.select_rows(order), std::move(labels));
}

SyntheticSpec two_blob_outlier_spec(std::size_t n, double outlier_fraction, std::size_t dimension) {
  SyntheticSpec spec;
  spec.dimension = dimension;
  spec.n_outlier = static_cast<std::size_t>(std::lround(static_cast<double>(n) * outlier_fraction));
  spec.n_normal = n - spec.n_outlier;
  std::vector<double> a(dimension, 0.0), b(dimension, 0.0), o(dimension, 0.0);
  a[0] = -5.0;
  b[0] = 5.0;
  if (dimension > 1) o[1] = 15.0;
  else o[0] = 20.0;
  spec.cluster_centers = {a, b};
  spec.cluster_spread = {1.0, 1.0};
  spec.outlier_center = o;
  spec.outlier_spread = 0.5;
  spec.name = "blobs";
  return spec;
}

double outlier_to_normal_ratio(const std::vector<Label>& labels) {
  std::size_t ones = 0;
  for (Label l : labels) ones += l ? 1 : 0;
  const std::size_t zeros = labels.size() - ones;
  require(zeros > 0, ErrorCode::kInvalidArgument, "undefined ratio: no normal instances");
  return static_cast<double>(ones) / static_cast<double>(zeros);
}

Matrix standardize(const Matrix& features) {
  Matrix out = features;
  const std::size_t n = features.rows();
  if (n == 0) return out;
  for (std::size_t j = 0; j < features.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += features(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (features(i, j) - mean) * (features(i, j) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      out(i, j) = sd > 0.0 ? (features(i, j) - mean) / sd : features(i, j) - mean;
    }
  }
  return out;
}

}  // namespace unisel
