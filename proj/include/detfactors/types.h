#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace detfactors {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline constexpr std::array<std::string_view, 4> kLocations = {
    "boston-seaport", "singapore-hollandvillage", "singapore-onenorth",
    "singapore-queenstown"};

// The only detection class that takes part in matching.
inline constexpr std::string_view kPedestrianClass = "pedestrian";

enum class Category { kAdult, kChild, kWorker, kPolice };
enum class Attribute { kMoving, kStanding, kSittingLying };

inline constexpr std::array<std::string_view, 4> kCategoryNames = {"adult", "child", "worker",
                                                                   "police"};
inline constexpr std::array<std::string_view, 3> kAttributeNames = {"moving", "standing",
                                                                    "sitting_lying"};

std::string_view to_string(Category c);
std::string_view to_string(Attribute a);
std::optional<Category> parse_category(std::string_view s);
std::optional<Attribute> parse_attribute(std::string_view s);
bool is_known_location(std::string_view s);

// Ego frame: x forward, y left, z up. Meters.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool operator==(const Vec3&) const = default;
};

struct BoxSize {
  double width = 0.0;
  double height = 0.0;
  double length = 0.0;
  bool operator==(const BoxSize&) const = default;
};

// Distance in the ground plane from the ego origin.
inline double bev_distance(const Vec3& c) { return std::hypot(c.x, c.y); }

inline double bev_distance(const Vec3& a, const Vec3& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Maps any finite angle in degrees onto (-180, 180].
double normalize_yaw_deg(double deg);

// Hourly station observation. Any field may be kMissing (NaN) when the source
// did not report it.
struct WeatherRecord {
  double temperature = kMissing;         // deg C
  double dew_point = kMissing;           // deg C
  double humidity = kMissing;            // percent
  double precipitation = kMissing;       // mm/h
  double windspeed = kMissing;           // km/h
  double wind_direction = kMissing;      // deg, direction the wind blows from
  double sea_level_pressure = kMissing;  // hPa
  double cloud_cover = kMissing;         // percent
  double solar_radiation = kMissing;     // W/m^2
  double visibility = kMissing;          // km
  double uv_index = kMissing;

  static constexpr std::size_t kFieldCount = 11;
  static const std::array<std::string_view, kFieldCount>& field_names();
  std::array<double, kFieldCount> values() const;
  static WeatherRecord from_values(const std::array<double, kFieldCount>& v);
  bool complete() const;
  bool operator==(const WeatherRecord& o) const;
};

struct FrameMeta {
  std::string frame_id;
  double timestamp = 0.0;  // UTC seconds
  std::string location;
  double lat = 0.0;
  double lon = 0.0;
  double daytime = 0.0;  // local hour of day in [0, 24)
  int month = 1;
  bool rain = false;
  std::optional<WeatherRecord> weather;
  bool operator==(const FrameMeta&) const = default;
};

struct GroundTruthObject {
  std::string object_id;
  std::string frame_id;
  Vec3 center;
  BoxSize size;
  double yaw_deg = 0.0;
  double velocity = 0.0;  // speed magnitude, m/s
  Category category = Category::kAdult;
  Attribute attribute = Attribute::kMoving;
  int visibility_bin = 4;  // 1 (mostly occluded) .. 4 (fully visible)
  bool operator==(const GroundTruthObject&) const = default;
};

struct Detection {
  std::string frame_id;
  Vec3 center;
  BoxSize size;
  double yaw_deg = 0.0;
  std::string class_label{kPedestrianClass};
  double score = 0.0;
  bool operator==(const Detection&) const = default;
};

// Invariant checks; throw ValidationError naming the record and field.
void validate(const WeatherRecord& w, const std::string& record);
void validate(const FrameMeta& f);
void validate(const GroundTruthObject& o);
void validate(const Detection& d, const std::string& record);

}  // namespace detfactors
