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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "unisel/matrix.hpp"

namespace unisel {

// Feature matrix with binary outlier labels (1 = outlier, 0 = normal).
// Construction validates shape, finiteness and label domain; instances are
// immutable afterwards and may be shared across threads.
class Dataset {
 public:
  Dataset(std::string name, Matrix features, std::vector<Label> labels);

  const std::string& name() const noexcept { return name_; }
  const Matrix& features() const noexcept { return features_; }
  const std::vector<Label>& labels() const noexcept { return labels_; }

  std::size_t size() const noexcept { return features_.rows(); }
  std::size_t dimension() const noexcept { return features_.cols(); }
  std::size_t outlier_count() const noexcept { return outliers_; }
  std::size_t normal_count() const noexcept { return size() - outliers_; }

 private:
  std::string name_;
  Matrix features_;
  std::vector<Label> labels_;
  std::size_t outliers_ = 0;
};

struct DelimitedOptions {
  char delimiter = ',';
  bool header = true;
  std::string label_column = "label";
};

// Reads a delimited file with a header row and a binary label column.
// The dataset name is the file stem.
Dataset load_delimited(const std::filesystem::path& path, const DelimitedOptions& options = {});
Dataset parse_delimited(std::string_view text, std::string name, const DelimitedOptions& options = {});

// Reads only the numeric feature columns; the label column is skipped when
// present. Used for unlabeled pools.
struct FeatureTable {
  Matrix features;
  std::vector<Label> labels;  // empty when the file has no label column
};
FeatureTable load_feature_table(const std::filesystem::path& path,
                                const DelimitedOptions& options = {});

// Writes header f0..f{d-1},label with shortest round-trip float formatting.
void write_delimited(const Dataset& ds, const std::filesystem::path& path);
std::string format_delimited(const Dataset& ds);

struct SplitIndices {
  IndexList train_indices;  // ascending
  IndexList test_indices;   // ascending
  std::uint64_t seed = 0;
};

// Stratified train/test partition. Per class the test count is
// round(count * fraction); if the total differs from round(n * fraction)
// the majority class absorbs the difference.
SplitIndices stratified_split(const std::vector<Label>& labels, double test_fraction,
                              std::uint64_t seed);
inline SplitIndices stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  return stratified_split(ds.labels(), test_fraction, seed);
}

struct SyntheticSpec {
  std::size_t n_normal = 0;
  std::size_t n_outlier = 0;
  std::size_t dimension = 0;
  std::vector<std::vector<double>> cluster_centers;
  std::vector<double> cluster_spread;
  std::vector<double> outlier_center;
  double outlier_spread = 1.0;
  std::string name = "synthetic";
};

// Parses a SyntheticSpec from a JSON document. Field names:
// n_normal, n_outlier, d, cluster_centers, cluster_spread, outlier_center,
// outlier_spread, and optional name. cluster_spread may be a scalar.
SyntheticSpec parse_synthetic_spec(std::string_view json_text);

// Isotropic Gaussian blobs. Normal instance i is drawn around
// cluster_centers[i % K]; rows are shuffled so outliers are interleaved.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Two normal clusters plus one distant outlier cluster.
SyntheticSpec two_blob_outlier_spec(std::size_t n, double outlier_fraction, std::size_t dimension = 2);

// outliers / normals; throws when there are no normals.
double outlier_to_normal_ratio(const std::vector<Label>& labels);

// Column-wise z-score. Constant columns are centered only. Not used by the
// default pipeline.
Matrix standardize(const Matrix& features);

}  // namespace unisel
