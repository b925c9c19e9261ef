#include "detfactors/types.h"

#include <algorithm>
#include <cmath>

#include "detfactors/errors.h"

namespace detfactors {

std::string_view to_string(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

std::string_view to_string(Attribute a) { return kAttributeNames[static_cast<std::size_t>(a)]; }

std::optional<Category> parse_category(std::string_view s) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == s) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::optional<Attribute> parse_attribute(std::string_view s) {
  for (std::size_t i = 0; i < kAttributeNames.size(); ++i) {
    if (kAttributeNames[i] == s) return static_cast<Attribute>(i);
  }
  return std::nullopt;
}

bool is_known_location(std::string_view s) {
  return std::find(kLocations.begin(), kLocations.end(), s) != kLocations.end();
}

double normalize_yaw_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r > 180.0) r -= 360.0;
  if (r <= -180.0) r += 360.0;
  return r;
}

const std::array<std::string_view, WeatherRecord::kFieldCount>& WeatherRecord::field_names() {
  static const std::array<std::string_view, kFieldCount> names = {
      "temperature",        "dew_point",   "humidity",        "precipitation",
      "windspeed",          "wind_direction", "sea_level_pressure", "cloud_cover",
      "solar_radiation",    "visibility",  "uv_index"};
  return names;
}

std::array<double, WeatherRecord::kFieldCount> WeatherRecord::values() const {
  return {temperature, dew_point,   humidity,        precipitation, windspeed, wind_direction,
          sea_level_pressure, cloud_cover, solar_radiation, visibility, uv_index};
}

WeatherRecord WeatherRecord::from_values(const std::array<double, kFieldCount>& v) {
  WeatherRecord w;
  w.temperature = v[0];
  w.dew_point = v[1];
  w.humidity = v[2];
  w.precipitation = v[3];
  w.windspeed = v[4];
  w.wind_direction = v[5];
  w.sea_level_pressure = v[6];
  w.cloud_cover = v[7];
  w.solar_radiation = v[8];
  w.visibility = v[9];
  w.uv_index = v[10];
  return w;
}

bool WeatherRecord::complete() const {
  const auto v = values();
  return std::none_of(v.begin(), v.end(), [](double x) { return std::isnan(x); });
}

bool WeatherRecord::operator==(const WeatherRecord& o) const {
  const auto a = values();
  const auto b = o.values();
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    const bool na = std::isnan(a[i]);
    const bool nb = std::isnan(b[i]);
    if (na != nb || (!na && a[i] != b[i])) return false;
  }
  return true;
}

namespace {

void require(bool ok, const std::string& record, const char* field, const char* what) {
  if (!ok) throw ValidationError(record, field, what);
}

// Missing (NaN) values pass; present values must be finite and within [lo, hi].
void check_range(double v, double lo, double hi, const std::string& record, const char* field) {
  if (std::isnan(v)) return;
  require(std::isfinite(v) && v >= lo && v <= hi, record, field,
          ("must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]").c_str());
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

void validate(const WeatherRecord& w, const std::string& record) {
  check_range(w.temperature, -90.0, 60.0, record, "temperature");
  check_range(w.dew_point, -100.0, 60.0, record, "dew_point");
  check_range(w.humidity, 0.0, 100.0, record, "humidity");
  check_range(w.precipitation, 0.0, kInf, record, "precipitation");
  check_range(w.windspeed, 0.0, kInf, record, "windspeed");
  check_range(w.wind_direction, 0.0, 360.0, record, "wind_direction");
  require(std::isnan(w.wind_direction) || w.wind_direction < 360.0, record, "wind_direction",
          "must lie in [0, 360)");
  check_range(w.sea_level_pressure, 800.0, 1100.0, record, "sea_level_pressure");
  check_range(w.cloud_cover, 0.0, 100.0, record, "cloud_cover");
  check_range(w.solar_radiation, 0.0, kInf, record, "solar_radiation");
  check_range(w.visibility, 0.0, kInf, record, "visibility");
  check_range(w.uv_index, 0.0, kInf, record, "uv_index");
  if (!std::isnan(w.dew_point) && !std::isnan(w.temperature)) {
    // 0.5 deg tolerance for station noise.
    require(w.dew_point <= w.temperature + 0.5, record, "dew_point",
            "exceeds temperature by more than 0.5 degC");
  }
}

void validate(const FrameMeta& f) {
  const std::string record = "frame '" + f.frame_id + "'";
  require(!f.frame_id.empty(), record, "frame_id", "must not be empty");
  require(std::isfinite(f.timestamp), record, "timestamp", "must be finite");
  require(is_known_location(f.location), record, "location", "unknown district label");
  require(std::isfinite(f.lat) && f.lat >= -90.0 && f.lat <= 90.0, record, "lat",
          "must lie in [-90, 90]");
  require(std::isfinite(f.lon) && f.lon >= -180.0 && f.lon <= 180.0, record, "lon",
          "must lie in [-180, 180]");
  require(std::isfinite(f.daytime) && f.daytime >= 0.0 && f.daytime < 24.0, record, "daytime",
          "must lie in [0, 24)");
  require(f.month >= 1 && f.month <= 12, record, "month", "must lie in 1..12");
  if (f.weather) validate(*f.weather, record);
}

void validate(const GroundTruthObject& o) {
  const std::string record = "object '" + o.object_id + "'";
  require(!o.object_id.empty(), record, "object_id", "must not be empty");
  require(!o.frame_id.empty(), record, "frame_id", "must not be empty");
  require(std::isfinite(o.center.x) && std::isfinite(o.center.y) && std::isfinite(o.center.z),
          record, "center", "must be finite");
  require(std::isfinite(o.size.width) && o.size.width > 0.0, record, "size", "width must be > 0");
  require(std::isfinite(o.size.height) && o.size.height > 0.0, record, "size",
          "height must be > 0");
  require(std::isfinite(o.size.length) && o.size.length > 0.0, record, "size",
          "length must be > 0");
  require(std::isfinite(o.yaw_deg) && o.yaw_deg > -180.0 && o.yaw_deg <= 180.0, record, "yaw_deg",
          "must lie in (-180, 180]");
  require(std::isfinite(o.velocity) && o.velocity >= 0.0, record, "velocity", "must be >= 0");
  require(o.visibility_bin >= 1 && o.visibility_bin <= 4, record, "visibility_bin",
          "must be one of 1, 2, 3, 4");
}

void validate(const Detection& d, const std::string& record) {
  require(!d.frame_id.empty(), record, "frame_id", "must not be empty");
  require(std::isfinite(d.center.x) && std::isfinite(d.center.y) && std::isfinite(d.center.z),
          record, "center", "must be finite");
  require(std::isfinite(d.size.width) && d.size.width > 0.0, record, "size", "width must be > 0");
  require(std::isfinite(d.size.height) && d.size.height > 0.0, record, "size",
          "height must be > 0");
  require(std::isfinite(d.size.length) && d.size.length > 0.0, record, "size",
          "length must be > 0");
  require(std::isfinite(d.yaw_deg) && d.yaw_deg > -180.0 && d.yaw_deg <= 180.0, record, "yaw_deg",
          "must lie in (-180, 180]");
  require(!d.class_label.empty(), record, "class_label", "must not be empty");
  require(std::isfinite(d.score) && d.score >= 0.0 && d.score <= 1.0, record, "score",
          "must lie in [0, 1]");
}

}  // namespace detfactors
