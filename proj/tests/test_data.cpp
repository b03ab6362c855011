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

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "unisel/error.hpp"

namespace unisel {
namespace {

using ::testing::HasSubstr;

std::vector<Label> class_labels(std::size_t normals, std::size_t outliers) {
  std::vector<Label> y(normals, 0);
  y.insert(y.end(), outliers, 1);
  return y;
}

std::string error_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(LoadDelimited, SmallFile) {
  const auto ds = parse_delimited("f0,f1,label\n1,2,0\n3,4,0\n5,6,1\n7,8.5,0\n", "small");
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.dimension(), 2u);
  EXPECT_EQ(ds.outlier_count(), 1u);
  EXPECT_EQ(ds.features()(3, 1), 8.5);
  EXPECT_EQ(ds.labels(), (std::vector<Label>{0, 0, 1, 0}));
}

TEST(LoadDelimited, LabelColumnMayBeAnywhere) {
  const auto ds = parse_delimited("label,a,b\n1,2,3\n0,4,5\n", "x");
  EXPECT_EQ(ds.dimension(), 2u);
  EXPECT_EQ(ds.features()(1, 0), 4.0);
  EXPECT_EQ(ds.labels(), (std::vector<Label>{1, 0}));
}

TEST(LoadDelimited, HeaderOnlyIsEmpty) {
  EXPECT_THAT(error_message([] { parse_delimited("f0,f1,label\n", "e"); }), HasSubstr("empty dataset"));
  EXPECT_THAT(error_message([] { parse_delimited("", "e"); }), HasSubstr("empty dataset"));
}

TEST(LoadDelimited, MissingLabelColumn) {
  EXPECT_THAT(error_message([] { parse_delimited("f0,f1\n1,2\n", "e"); }), HasSubstr("missing label column"));
}

TEST(LoadDelimited, ReportsRowAndColumnOfBadCell) {
  const auto msg = error_message([] { parse_delimited("f0,f1,label\n1,2,0\n3,nan,1\n", "e"); });
  EXPECT_THAT(msg, HasSubstr("line 3"));
  EXPECT_THAT(msg, HasSubstr("column 2"));
  EXPECT_THAT(error_message([] { parse_delimited("f0,label\nabc,0\n", "e"); }), HasSubstr("column 1"));
  EXPECT_THAT(error_message([] { parse_delimited("f0,label\n1,2\n", "e"); }), HasSubstr("label must be 0 or 1"));
  EXPECT_THAT(error_message([] { parse_delimited("f0,label\n1,0,3\n", "e"); }), HasSubstr("expected 2 columns"));
}

TEST(LoadDelimited, ReadsFileAndUsesStemAsName) {
  const auto path = std::filesystem::temp_directory_path() / "unisel_thyroidish.csv";
  {
    std::ofstream out(path);
    out << "f0,f1,label\r\n0.5,1,1\r\n2,3,0\r\n";
  }
  const auto ds = load_delimited(path);
  EXPECT_EQ(ds.name(), "unisel_thyroidish");
  EXPECT_EQ(ds.size(), 2u);
  std::filesystem::remove(path);
  EXPECT_THROW(load_delimited(path), Error);
}

TEST(LoadDelimited, RoundTripIsBitExact) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  std::vector<double> values;
  std::vector<Label> labels;
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 3; ++j) values.push_back(u(rng) / std::pow(10.0, i % 17));
    labels.push_back(i % 7 == 0);
  }
  values[0] = 5e-324;
  values[1] = -0.0;
  values[2] = 1.7976931348623157e308;
  const Dataset ds("rt", Matrix(200, 3, values), labels);
  const auto back = parse_delimited(format_delimited(ds), "rt");
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    EXPECT_EQ(std::signbit(back.features().values()[i]), std::signbit(values[i]));
    EXPECT_EQ(back.features().values()[i], values[i]);
  }
  EXPECT_EQ(back.labels(), labels);
}

TEST(Dataset, RejectsInvalidContents) {
  EXPECT_THROW(Dataset("x", Matrix(2, 1, {1.0, NAN}), {0, 1}), Error);
  EXPECT_THROW(Dataset("x", Matrix(2, 1, {1.0, 2.0}), {0, 2}), Error);
  EXPECT_THROW(Dataset("x", Matrix(2, 1, {1.0, 2.0}), {0}), Error);
}

TEST(StratifiedSplit, ExactProportions) {
  const auto split = stratified_split(class_labels(8, 2), 0.5, 3);
  std::size_t test_outliers = 0;
  for (auto i : split.test_indices) test_outliers += i >= 8;
  EXPECT_EQ(split.test_indices.size(), 5u);
  EXPECT_EQ(test_outliers, 1u);
}

TEST(StratifiedSplit, ThyroidCounts) {
  // round(93 * 0.1) = 9, round(3679 * 0.1) = 368, round(3772 * 0.1) = 377.
  const auto split = stratified_split(class_labels(3679, 93), 0.1, 11);
  std::size_t test_outliers = 0;
  for (auto i : split.test_indices) test_outliers += i >= 3679;
  EXPECT_EQ(split.test_indices.size(), 377u);
  EXPECT_EQ(test_outliers, 9u);
}

TEST(StratifiedSplit, DeterministicPerSeed) {
  const auto y = class_labels(500, 20);
  const auto a = stratified_split(y, 0.1, 99);
  const auto b = stratified_split(y, 0.1, 99);
  const auto c = stratified_split(y, 0.1, 100);
  EXPECT_EQ(a.train_indices, b.train_indices);
  EXPECT_EQ(a.test_indices, b.test_indices);
  EXPECT_NE(a.test_indices, c.test_indices);
}

TEST(StratifiedSplit, PartitionAndProportionProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 400;
    const std::size_t outliers = 1 + rng() % (n - 1);
    std::vector<Label> y = class_labels(n - outliers, outliers);
    std::shuffle(y.begin(), y.end(), rng);
    const double fraction = 0.02 + 0.96 * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto seed = rng();
    SplitIndices split;
    try {
      split = stratified_split(y, fraction, seed);
    } catch (const Error& e) {
      // Only legal when rounding leaves one side of the split empty.
      const auto raw = std::lround(static_cast<double>(n - outliers) * fraction) +
                       std::lround(static_cast<double>(outliers) * fraction);
      EXPECT_TRUE(raw <= 1 || raw + 1 >= static_cast<long>(n)) << e.what();
      continue;
    }

    std::set<std::size_t> all(split.train_indices.begin(), split.train_indices.end());
    for (auto i : split.test_indices) EXPECT_TRUE(all.insert(i).second) << "overlap at " << i;
    EXPECT_EQ(all.size(), n);
    EXPECT_EQ(*all.rbegin(), n - 1);

    std::size_t test_by_class[2] = {0, 0};
    for (auto i : split.test_indices) ++test_by_class[y[i]];
    const double expected[2] = {static_cast<double>(n - outliers) * fraction,
                                static_cast<double>(outliers) * fraction};
    for (int c = 0; c < 2; ++c) {
      EXPECT_LT(std::abs(static_cast<double>(test_by_class[c]) - expected[c]), 1.0)
          << "n=" << n << " outliers=" << outliers << " fraction=" << fraction;
    }
  }
}

TEST(StratifiedSplit, Errors) {
  EXPECT_THROW(stratified_split(class_labels(5, 0), 0.5, 1), Error);
  EXPECT_THROW(stratified_split(class_labels(5, 1), 0.0, 1), Error);
  EXPECT_THROW(stratified_split(class_labels(5, 1), 1.0, 1), Error);
  try {
    stratified_split(class_labels(2, 1), 0.1, 1);
    ADD_FAILURE() << "empty test set accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    EXPECT_THAT(e.what(), testing::HasSubstr("no test rows"));
  }
}

SyntheticSpec blobs_10_sigma() {
  SyntheticSpec spec;
  spec.n_normal = 600;
  spec.n_outlier = 20;
  spec.dimension = 3;
  spec.cluster_centers = {{0, 0, 0}, {4, 0, 0}};
  spec.cluster_spread = {1.0, 1.0};
  spec.outlier_center = {2, 14, 0};  // >= 14 sigma from both normal centres
  spec.outlier_spread = 1.0;
  return spec;
}

TEST(GenerateSynthetic, CountsAndDeterminism) {
  const auto spec = blobs_10_sigma();
  const auto a = generate_synthetic(spec, 42);
  const auto b = generate_synthetic(spec, 42);
  EXPECT_EQ(a.size(), 620u);
  EXPECT_EQ(a.outlier_count(), 20u);
  EXPECT_EQ(a.features(), b.features());
  EXPECT_EQ(a.labels(), b.labels());
  EXPECT_NE(generate_synthetic(spec, 43).features(), a.features());
}

TEST(GenerateSynthetic, OutliersOnly) {
  SyntheticSpec spec;
  spec.n_outlier = 5;
  spec.dimension = 2;
  spec.outlier_center = {1, 1};
  const auto ds = generate_synthetic(spec, 1);
  EXPECT_EQ(ds.size(), 5u);
  EXPECT_EQ(ds.outlier_count(), 5u);
}

TEST(GenerateSynthetic, FarOutlierBlobIsNearestCentreSeparable) {
  const auto spec = blobs_10_sigma();
  const auto ds = generate_synthetic(spec, 8);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.features().row(i);
    double nearest_normal = 1e300;
    for (const auto& c : spec.cluster_centers) nearest_normal = std::min(nearest_normal, squared_distance(x, c));
    const bool predicted_outlier = squared_distance(x, spec.outlier_center) < nearest_normal;
    errors += predicted_outlier != static_cast<bool>(ds.labels()[i]);
  }
  EXPECT_EQ(errors, 0u);
}

TEST(GenerateSynthetic, DimensionMismatch) {
  auto spec = blobs_10_sigma();
  spec.outlier_center = {1, 2};
  EXPECT_THROW(generate_synthetic(spec, 1), Error);
  spec = blobs_10_sigma();
  spec.cluster_centers[1] = {1};
  EXPECT_THROW(generate_synthetic(spec, 1), Error);
}

TEST(GenerateSynthetic, ParsesJsonSpec) {
  const auto spec = parse_synthetic_spec(R"({
    "n_normal": 40, "n_outlier": 2, "d": 2,
    "cluster_centers": [[0, 0], [5, 5]], "cluster_spread": 0.5,
    "outlier_center": [20, 20], "outlier_spread": 0.1, "name": "toy"})");
  EXPECT_EQ(spec.cluster_spread, (std::vector<double>{0.5, 0.5}));
  const auto ds = generate_synthetic(spec, 3);
  EXPECT_EQ(ds.name(), "toy");
  EXPECT_EQ(ds.outlier_count(), 2u);
  EXPECT_THROW(parse_synthetic_spec("{\"n_normal\": 1}"), Error);
}

TEST(OutlierToNormalRatio, Examples) {
  EXPECT_NEAR(outlier_to_normal_ratio(class_labels(3679, 93)), 93.0 / 3679.0, 0.0);
  EXPECT_NEAR(outlier_to_normal_ratio(class_labels(3679, 93)), 0.025278, 1e-6);
  EXPECT_EQ(outlier_to_normal_ratio(class_labels(10, 0)), 0.0);
  EXPECT_EQ(outlier_to_normal_ratio({1, 0}), 1.0);
  EXPECT_THAT(error_message([] { outlier_to_normal_ratio({1, 1}); }), HasSubstr("undefined ratio"));
}

TEST(Standardize, ZeroMeanUnitVariance) {
  const auto z = standardize(Matrix::from_rows({{1, 5}, {3, 5}, {5, 5}}));
  EXPECT_NEAR(z(0, 0) + z(1, 0) + z(2, 0), 0.0, 1e-12);
  EXPECT_NEAR(z(0, 0) * z(0, 0) + z(1, 0) * z(1, 0) + z(2, 0) * z(2, 0), 3.0, 1e-12);
  EXPECT_EQ(z(1, 1), 0.0);
}

}  // namespace
}  // namespace unisel
