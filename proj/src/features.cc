#include "detfactors/features.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "detfactors/errors.h"

namespace detfactors {

std::string_view to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::kNumeric:
      return "numeric";
    case ColumnKind::kCategorical:
      return "categorical";
    case ColumnKind::kOrdinal:
      return "ordinal";
  }
  return "?";
}

const std::string& Column::level_of(std::size_t row) const {
  return levels.at(static_cast<std::size_t>(values.at(row)));
}

int FeatureTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const Column& FeatureTable::column(std::string_view name) const {
  const int i = find(name);
  if (i < 0) throw ContractError("no column named '" + std::string(name) + "'");
  return columns[static_cast<std::size_t>(i)];
}

std::vector<std::string> FeatureTable::names() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

void FeatureTable::check() const {
  for (const auto& c : columns) {
    if (c.values.size() != label.size()) {
      throw ContractError("column '" + c.name + "' has " + std::to_string(c.values.size()) +
                          " rows, label has " + std::to_string(label.size()));
    }
    for (double v : c.values) {
      if (std::isnan(v)) throw ContractError("column '" + c.name + "' contains NaN");
      if (c.kind == ColumnKind::kCategorical &&
          (v < 0.0 || v >= static_cast<double>(c.levels.size()) || v != std::floor(v))) {
        throw ContractError("column '" + c.name + "' holds an invalid level index");
      }
    }
  }
  for (int y : label) {
    if (y != 0 && y != 1) throw ContractError("label must be binary");
  }
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> rows) const {
  FeatureTable out;
  out.columns.reserve(columns.size());
  for (const auto& c : columns) {
    Column sub{c.name, c.kind, {}, c.levels};
    sub.values.reserve(rows.size());
    for (std::size_t r : rows) sub.values.push_back(c.values.at(r));
    out.columns.push_back(std::move(sub));
  }
  out.label.reserve(rows.size());
  for (std::size_t r : rows) out.label.push_back(label.at(r));
  return out;
}

AngularSize angular_sizes(const BoxSize& size, double bev_distance) {
  if (!(bev_distance > 0.0) || !std::isfinite(bev_distance)) {
    throw DomainError("angular size undefined for object at distance " +
                      std::to_string(bev_distance));
  }
  constexpr double kDeg = 180.0 / std::numbers::pi;
  const double horizontal_extent = std::max(size.width, size.length);
  return {2.0 * std::atan(size.height / (2.0 * bev_distance)) * kDeg,
          2.0 * std::atan(horizontal_extent / (2.0 * bev_distance)) * kDeg};
}

namespace {

// Accumulates rows before the missing-data policy is applied.
class TableBuilder {
 public:
  void add_numeric(std::string_view name, ColumnKind kind = ColumnKind::kNumeric) {
    Column c;
    c.name = std::string(name);
    c.kind = kind;
    columns_.push_back(std::move(c));
  }

  template <std::size_t N>
  void add_categorical(std::string_view name, const std::array<std::string_view, N>& levels) {
    Column c;
    c.name = std::string(name);
    c.kind = ColumnKind::kCategorical;
    for (auto l : levels) c.levels.emplace_back(l);
    columns_.push_back(std::move(c));
  }

  void push_row(std::span<const double> values, int label) {
    for (std::size_t i = 0; i < columns_.size(); ++i) columns_[i].values.push_back(values[i]);
    label_.push_back(label);
  }

  std::size_t width() const { return columns_.size(); }

  FeatureTable finish(MissingPolicy policy) && {
    FeatureTable t;
    const std::size_t n = label_.size();
    if (policy == MissingPolicy::kDropColumn) {
      for (auto& c : columns_) {
        if (std::none_of(c.values.begin(), c.values.end(), [](double v) { return std::isnan(v); })) {
          t.columns.push_back(std::move(c));
        }
      }
      t.label = std::move(label_);
    } else {
      std::vector<std::size_t> keep;
      for (std::size_t r = 0; r < n; ++r) {
        const bool complete = std::none_of(columns_.begin(), columns_.end(),
                                           [r](const Column& c) { return std::isnan(c.values[r]); });
        if (complete) keep.push_back(r);
      }
      t.dropped_rows = n - keep.size();
      for (auto& c : columns_) {
        Column kept{std::move(c.name), c.kind, {}, std::move(c.levels)};
        kept.values.reserve(keep.size());
        for (std::size_t r : keep) kept.values.push_back(c.values[r]);
        t.columns.push_back(std::move(kept));
      }
      for (std::size_t r : keep) t.label.push_back(label_[r]);
    }
    prune_levels(t);
    return t;
  }

 private:
  // Keep only observed levels, preserving canonical order.
  static void prune_levels(FeatureTable& t) {
    for (auto& c : t.columns) {
      if (c.kind != ColumnKind::kCategorical) continue;
      std::vector<bool> seen(c.levels.size(), false);
      for (double v : c.values) seen[static_cast<std::size_t>(v)] = true;
      std::vector<double> remap(c.levels.size(), -1.0);
      std::vector<std::string> kept;
      for (std::size_t l = 0; l < c.levels.size(); ++l) {
        if (!seen[l]) continue;
        remap[l] = static_cast<double>(kept.size());
        kept.push_back(c.levels[l]);
      }
      for (double& v : c.values) v = remap[static_cast<std::size_t>(v)];
      c.levels = std::move(kept);
    }
  }

  std::vector<Column> columns_;
  std::vector<int> label_;
};

std::size_t location_index(const std::string& location) {
  for (std::size_t i = 0; i < kLocations.size(); ++i) {
    if (kLocations[i] == location) return i;
  }
  throw ValidationError("frame", "location", "unknown district '" + location + "'");
}

bool any_weather(std::span<const FrameMeta> frames) {
  return std::any_of(frames.begin(), frames.end(),
                     [](const FrameMeta& f) { return f.weather.has_value(); });
}

void add_environment_columns(TableBuilder& b, bool weather) {
  b.add_categorical(feature::kLocation, kLocations);
  b.add_numeric(feature::kDaytime);
  b.add_numeric(feature::kMonth);
  b.add_numeric(feature::kRain, ColumnKind::kOrdinal);
  if (weather) {
    for (auto name : WeatherRecord::field_names()) b.add_numeric(name);
  }
}

void push_environment(std::vector<double>& row, const FrameMeta& f, bool weather) {
  row.push_back(static_cast<double>(location_index(f.location)));
  row.push_back(f.daytime);
  row.push_back(static_cast<double>(f.month));
  row.push_back(f.rain ? 1.0 : 0.0);
  if (weather) {
    const auto values = f.weather ? f.weather->values()
                                  : std::array<double, WeatherRecord::kFieldCount>{
                                        kMissing, kMissing, kMissing, kMissing,
                                        kMissing, kMissing, kMissing, kMissing,
                                        kMissing, kMissing, kMissing};
    row.insert(row.end(), values.begin(), values.end());
  }
}

std::unordered_map<std::string_view, const FrameMeta*> index_frames(
    std::span<const FrameMeta> frames) {
  std::unordered_map<std::string_view, const FrameMeta*> out;
  for (const auto& f : frames) out.emplace(f.frame_id, &f);
  return out;
}

const FrameMeta& lookup_frame(const std::unordered_map<std::string_view, const FrameMeta*>& idx,
                              const std::string& frame_id) {
  auto it = idx.find(frame_id);
  if (it == idx.end()) {
    throw ReferentialError("no frame metadata for frame_id '" + frame_id + "'");
  }
  return *it->second;
}

}  // namespace

FeatureTable build_fn_table(std::span<const MatchRecord> records, const GroundTruthData& gt,
                            const TableOptions& options) {
  const bool weather = options.include_weather && any_weather(gt.frames);
  const auto frames = index_frames(gt.frames);
  std::unordered_map<std::string_view, const GroundTruthObject*> objects;
  for (const auto& o : gt.objects) objects.emplace(o.object_id, &o);

  TableBuilder b;
  add_environment_columns(b, weather);
  b.add_numeric(feature::kDistance);
  b.add_numeric(feature::kVelocity);
  b.add_numeric(feature::kYaw);
  b.add_numeric(feature::kWidth);
  b.add_numeric(feature::kHeight);
  b.add_numeric(feature::kLength);
  b.add_numeric(feature::kAngularVertical);
  b.add_numeric(feature::kAngularHorizontal);
  b.add_numeric(feature::kVisibility, ColumnKind::kOrdinal);
  b.add_categorical(feature::kCategory, kCategoryNames);
  b.add_categorical(feature::kAttribute, kAttributeNames);

  std::vector<double> row;
  for (const auto& r : records) {
    if (r.verdict == Verdict::kFP || !r.gt_ref) continue;
    auto it = objects.find(*r.gt_ref);
    if (it == objects.end()) {
      throw ReferentialError("match record references unknown object '" + *r.gt_ref + "'");
    }
    const GroundTruthObject& o = *it->second;
    const FrameMeta& f = lookup_frame(frames, o.frame_id);
    const double d = bev_distance(o.center);
    const AngularSize a = angular_sizes(o.size, d);
    row.clear();
    push_environment(row, f, weather);
    row.insert(row.end(), {d, o.velocity, o.yaw_deg, o.size.width, o.size.height, o.size.length,
                           a.vertical_deg, a.horizontal_deg,
                           static_cast<double>(o.visibility_bin),
                           static_cast<double>(o.category), static_cast<double>(o.attribute)});
    b.push_row(row, r.verdict == Verdict::kTP ? 1 : 0);
  }
  return std::move(b).finish(options.missing);
}

FeatureTable build_fp_table(std::span<const MatchRecord> records, std::span<const Detection> dets,
                            std::span<const FrameMeta> frame_list, const TableOptions& options) {
  const bool weather = options.include_weather && any_weather(frame_list);
  const auto frames = index_frames(frame_list);

  TableBuilder b;
  add_environment_columns(b, weather);
  b.add_numeric(feature::kDistance);
  b.add_numeric(feature::kYaw);
  b.add_numeric(feature::kWidth);
  b.add_numeric(feature::kHeight);
  b.add_numeric(feature::kLength);
  b.add_numeric(feature::kAngularVertical);
  b.add_numeric(feature::kAngularHorizontal);

  std::vector<double> row;
  for (const auto& r : records) {
    if (r.verdict == Verdict::kFN || !r.det_ref) continue;
    if (*r.det_ref >= dets.size()) {
      throw ReferentialError("match record references detection " + std::to_string(*r.det_ref) +
                             " of " + std::to_string(dets.size()));
    }
    const Detection& det = dets[*r.det_ref];
    const FrameMeta& f = lookup_frame(frames, det.frame_id);
    const double d = bev_distance(det.center);
    const AngularSize a = angular_sizes(det.size, d);
    row.clear();
    push_environment(row, f, weather);
    row.insert(row.end(), {d, det.yaw_deg, det.size.width, det.size.height, det.size.length,
                           a.vertical_deg, a.horizontal_deg});
    b.push_row(row, r.verdict == Verdict::kTP ? 1 : 0);
  }
  return std::move(b).finish(options.missing);
}

EncodingMap fit_one_hot(const FeatureTable& table, std::string_view column) {
  const Column& c = table.column(column);
  if (c.kind != ColumnKind::kCategorical) {
    throw ContractError("one-hot encoding needs a categorical column, '" + c.name + "' is " +
                        std::string(to_string(c.kind)));
  }
  EncodingMap map;
  map.kind = EncodingKind::kOneHot;
  map.column = c.name;
  map.levels = c.levels;
  return map;
}

OneHotResult apply_one_hot(const FeatureTable& table, const EncodingMap& map) {
  if (map.kind != EncodingKind::kOneHot) throw ContractError("not a one-hot encoding map");
  const int pos = table.find(map.column);
  if (pos < 0) throw ContractError("no column named '" + map.column + "'");
  const Column& src = table.columns[static_cast<std::size_t>(pos)];

  std::unordered_map<std::string_view, std::size_t> slot;
  for (std::size_t i = 0; i < map.levels.size(); ++i) slot.emplace(map.levels[i], i);

  OneHotResult out;
  std::vector<Column> indicators(map.levels.size());
  for (std::size_t i = 0; i < map.levels.size(); ++i) {
    indicators[i].name = map.column + "=" + map.levels[i];
    indicators[i].kind = ColumnKind::kOrdinal;
    indicators[i].values.assign(table.rows(), 0.0);
  }
  for (std::size_t r = 0; r < table.rows(); ++r) {
    auto it = slot.find(src.level_of(r));
    if (it == slot.end()) {
      ++out.unseen_rows;
    } else {
      indicators[it->second].values[r] = 1.0;
    }
  }
  out.table.label = table.label;
  out.table.dropped_rows = table.dropped_rows;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (static_cast<int>(i) == pos) {
      for (auto& ind : indicators) out.table.columns.push_back(std::move(ind));
    } else {
      out.table.columns.push_back(table.columns[i]);
    }
  }
  return out;
}

OneHotResult encode_one_hot(const FeatureTable& table, std::string_view column) {
  return apply_one_hot(table, fit_one_hot(table, column));
}

std::vector<std::string> decode_one_hot(const FeatureTable& encoded, const EncodingMap& map) {
  std::vector<const Column*> cols;
  for (const auto& level : map.levels) cols.push_back(&encoded.column(map.column + "=" + level));
  std::vector<std::string> out(encoded.rows());
  for (std::size_t r = 0; r < encoded.rows(); ++r) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i]->values[r] == 1.0) {
        out[r] = map.levels[i];
        break;
      }
    }
  }
  return out;
}

double glmm_shrink(double n_j, double mean_j, double grand_mean, double lambda) {
  if (std::isinf(lambda)) return grand_mean;
  return (n_j * mean_j + lambda * grand_mean) / (n_j + lambda);
}

EncodingMap fit_glmm_encoding(const FeatureTable& table, std::string_view column,
                              std::span<const std::size_t> rows) {
  const Column& c = table.column(column);
  if (c.kind != ColumnKind::kCategorical) {
    throw ContractError("glmm encoding needs a categorical column, '" + c.name + "' is " +
                        std::string(to_string(c.kind)));
  }
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(table.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    rows = all;
  }
  if (rows.empty()) throw ContractError("glmm encoding needs at least one row");

  const std::size_t n_levels = c.levels.size();
  std::vector<double> count(n_levels, 0.0);
  std::vector<double> positives(n_levels, 0.0);
  for (std::size_t r : rows) {
    const auto l = static_cast<std::size_t>(c.values.at(r));
    count[l] += 1.0;
    positives[l] += table.label.at(r);
  }
  const double n = static_cast<double>(rows.size());
  double total_pos = 0.0;
  for (double p : positives) total_pos += p;
  const double grand = total_pos / n;

  EncodingMap map;
  map.kind = EncodingKind::kGlmm;
  map.column = c.name;
  map.fallback = grand;

  std::vector<std::size_t> present;
  for (std::size_t l = 0; l < n_levels; ++l) {
    if (count[l] > 0.0) present.push_back(l);
  }
  const double groups = static_cast<double>(present.size());

  // One-way ANOVA moments on the binary outcome.
  double within_ss = 0.0;
  double between_ss = 0.0;
  double sum_sq_counts = 0.0;
  for (std::size_t l : present) {
    const double mean = positives[l] / count[l];
    within_ss += count[l] * mean * (1.0 - mean);
    between_ss += count[l] * (mean - grand) * (mean - grand);
    sum_sq_counts += count[l] * count[l];
  }
  double lambda = std::numeric_limits<double>::infinity();
  if (groups >= 2.0) {
    const double within_var = n > groups ? within_ss / (n - groups) : 0.0;
    const double between_ms = between_ss / (groups - 1.0);
    const double n0 = (n - sum_sq_counts / n) / (groups - 1.0);
    const double between_var = n0 > 0.0 ? (between_ms - within_var) / n0 : 0.0;
    if (between_var > 0.0) lambda = std::max(kGlmmMinLambda, within_var / between_var);
  }
  map.lambda = lambda;
  for (std::size_t l : present) {
    map.levels.push_back(c.levels[l]);
    map.values.push_back(glmm_shrink(count[l], positives[l] / count[l], grand, lambda));
  }
  return map;
}

std::vector<double> apply_glmm(const Column& column, const EncodingMap& map) {
  if (map.kind != EncodingKind::kGlmm) throw ContractError("not a glmm encoding map");
  std::unordered_map<std::string_view, double> value;
  for (std::size_t i = 0; i < map.levels.size(); ++i) value.emplace(map.levels[i], map.values[i]);
  std::vector<double> out(column.values.size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    auto it = value.find(column.level_of(r));
    out[r] = it == value.end() ? map.fallback : it->second;
  }
  return out;
}

namespace {

void write_number(std::ostream& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

void write_table_tsv(std::ostream& out, const FeatureTable& table) {
  for (const auto& c : table.columns) out << c.name << ':' << to_string(c.kind) << '\t';
  out << "label\n";
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (const auto& c : table.columns) {
      if (c.kind == ColumnKind::kCategorical) {
        out << c.level_of(r);
      } else {
        write_number(out, c.values[r]);
      }
      out << '\t';
    }
    out << table.label[r] << '\n';
  }
}

}  // namespace detfactors
