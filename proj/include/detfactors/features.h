#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detfactors/io.h"
#include "detfactors/matching.h"
#include "detfactors/types.h"

namespace detfactors {

enum class ColumnKind { kNumeric, kCategorical, kOrdinal };

std::string_view to_string(ColumnKind k);

// For categorical columns `values` holds level indices into `levels`.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  std::vector<double> values;
  std::vector<std::string> levels;

  // Level name of row i; categorical columns only.
  const std::string& level_of(std::size_t row) const;
};

// Feature columns plus a binary label (1 = TP; 0 = FN or FP).
struct FeatureTable {
  std::vector<Column> columns;
  std::vector<int> label;
  // Rows removed by the missing-data policy while building.
  std::size_t dropped_rows = 0;

  std::size_t rows() const { return label.size(); }
  // Index of the named column, or -1.
  int find(std::string_view name) const;
  const Column& column(std::string_view name) const;
  std::vector<std::string> names() const;
  // Throws ContractError on ragged columns, NaNs or bad level indices.
  void check() const;
  // Rows `rows` of this table, in that order.
  FeatureTable subset(std::span<const std::size_t> rows) const;
};

namespace feature {
inline constexpr std::string_view kLocation = "location";
inline constexpr std::string_view kDaytime = "daytime";
inline constexpr std::string_view kMonth = "month";
inline constexpr std::string_view kRain = "rain";
inline constexpr std::string_view kDistance = "distance";
inline constexpr std::string_view kVelocity = "velocity";
inline constexpr std::string_view kYaw = "yaw";
inline constexpr std::string_view kWidth = "width";
inline constexpr std::string_view kHeight = "height";
inline constexpr std::string_view kLength = "length";
inline constexpr std::string_view kAngularVertical = "angular_size_vertical";
inline constexpr std::string_view kAngularHorizontal = "angular_size_horizontal";
inline constexpr std::string_view kVisibility = "visibility_bin";
inline constexpr std::string_view kCategory = "category";
inline constexpr std::string_view kAttribute = "attribute";
}  // namespace feature

struct AngularSize {
  double vertical_deg = 0.0;
  double horizontal_deg = 0.0;
};

// vertical = 2 atan(h / 2d), horizontal = 2 atan(max(w, l) / 2d), degrees.
// Throws DomainError unless bev_distance > 0.
AngularSize angular_sizes(const BoxSize& size, double bev_distance);

enum class MissingPolicy { kDropRow, kDropColumn };

struct TableOptions {
  MissingPolicy missing = MissingPolicy::kDropRow;
  // Weather columns are included when any frame carries a weather record.
  bool include_weather = true;
};

// One row per ground-truth object referenced by a TP/FN record: environment,
// object and derived angular-size columns. Label 1 for TP.
FeatureTable build_fn_table(std::span<const MatchRecord> records, const GroundTruthData& gt,
                            const TableOptions& options = {});

// One row per surviving detection (TP/FP record). Object columns come from the
// predicted box only: distance, width/height/length, yaw and angular sizes.
// Label 1 for TP, 0 for FP.
FeatureTable build_fp_table(std::span<const MatchRecord> records, std::span<const Detection> dets,
                            std::span<const FrameMeta> frames, const TableOptions& options = {});

enum class EncodingKind { kOneHot, kGlmm };

struct EncodingMap {
  EncodingKind kind = EncodingKind::kOneHot;
  std::string column;
  std::vector<std::string> levels;  // training-time levels
  std::vector<double> values;       // glmm: encoded value per level
  double fallback = 0.0;            // glmm: value for unseen levels
  double lambda = 0.0;              // glmm: shrinkage strength used
};

EncodingMap fit_one_hot(const FeatureTable& table, std::string_view column);

struct OneHotResult {
  FeatureTable table;
  // Rows whose level was not seen at fit time; they encode to all zeros.
  std::size_t unseen_rows = 0;
};

// Replaces the categorical column by one binary column per training level,
// named "<column>=<level>", at the original column position.
OneHotResult apply_one_hot(const FeatureTable& table, const EncodingMap& map);
OneHotResult encode_one_hot(const FeatureTable& table, std::string_view column);
// Inverse of apply_one_hot; all-zero rows decode to "".
std::vector<std::string> decode_one_hot(const FeatureTable& encoded, const EncodingMap& map);

inline constexpr double kGlmmMinLambda = 1.0;

// (n_j * mean_j + lambda * grand_mean) / (n_j + lambda)
double glmm_shrink(double n_j, double mean_j, double grand_mean, double lambda);

// Random-intercept target encoding fitted on `rows` of the table (all rows when
// empty). lambda = within-level variance / between-level variance by the
// one-way ANOVA method of moments, floored at kGlmmMinLambda; infinite
// (full shrinkage to the grand mean) when the between-level variance
// estimate is not positive.
EncodingMap fit_glmm_encoding(const FeatureTable& table, std::string_view column,
                              std::span<const std::size_t> rows = {});

// Encoded value per row; unseen levels take map.fallback.
std::vector<double> apply_glmm(const Column& column, const EncodingMap& map);

// Tab-separated export: header "name:kind ... label", categorical values as
// level names.
void write_table_tsv(std::ostream& out, const FeatureTable& table);

}  // namespace detfactors
