#include "detfactors/io.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "detfactors/errors.h"

namespace detfactors {

using nlohmann::json;

namespace {

constexpr std::string_view kGroundTruthSchema = "detfactors.groundtruth";
constexpr std::string_view kDetectionSchema = "detfactors.detections";
constexpr std::string_view kMatchSchema = "detfactors.matches";

struct Line {
  const std::string& source;
  std::size_t number;
  const json& obj;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source, number, what); }

  const json& at(const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing field '") + key + "'");
    return *it;
  }

  bool has(const char* key) const {
    auto it = obj.find(key);
    return it != obj.end() && !it->is_null();
  }

  double number_field(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
    return v.get<double>();
  }

  // null/absent -> kMissing
  double optional_number(const json& parent, const char* key) const {
    auto it = parent.find(key);
    if (it == parent.end() || it->is_null()) return kMissing;
    if (!it->is_number()) fail(std::string("field '") + key + "' must be a number or null");
    return it->get<double>();
  }

  long long integer_field(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
    return v.get<long long>();
  }

  std::string string_field(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }

  bool bool_field(const char* key) const {
    const json& v = at(key);
    if (!v.is_boolean()) fail(std::string("field '") + key + "' must be a boolean");
    return v.get<bool>();
  }

  std::array<double, 3> triple(const char* key) const {
    const json& v = at(key);
    if (!v.is_array() || v.size() != 3) fail(std::string("field '") + key + "' must be [a, b, c]");
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_number()) fail(std::string("field '") + key + "' must hold numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }
};

// Calls fn(Line) for every non-blank line; translates JSON errors to ParseError.
template <typename Fn>
void for_each_line(std::istream& in, const std::string& source, Fn&& fn) {
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(source, number, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(source, number, "line is not a JSON object");
    Line line{source, number, obj};
    try {
      fn(line, line.string_field("record"));
    } catch (const json::exception& e) {
      throw ParseError(source, number, e.what());
    }
  }
  if (in.bad()) throw ParseError(source, number, "read failure");
}

void check_header(const Line& line, std::string_view schema) {
  const std::string got = line.string_field("schema");
  if (got != schema) line.fail("schema '" + got + "' where '" + std::string(schema) + "' expected");
  const long long version = line.integer_field("version");
  if (version > kInterchangeVersion) {
    line.fail("unsupported schema version " + std::to_string(version));
  }
}

json header(std::string_view schema) {
  return json{{"record", "header"}, {"schema", schema}, {"version", kInterchangeVersion}};
}

json nullable(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

int utc_offset_hours(std::string_view location) {
  return location.starts_with("boston") ? -5 : 8;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

}  // namespace

double local_hour(double timestamp_utc, std::string_view location) {
  const double local = timestamp_utc + 3600.0 * utc_offset_hours(location);
  double h = std::fmod(local / 3600.0, 24.0);
  if (h < 0.0) h += 24.0;
  return h >= 24.0 ? 0.0 : h;
}

int local_month(double timestamp_utc, std::string_view location) {
  using namespace std::chrono;
  const double local = timestamp_utc + 3600.0 * utc_offset_hours(location);
  const sys_days day{days{static_cast<long long>(std::floor(local / 86400.0))}};
  return static_cast<int>(static_cast<unsigned>(year_month_day{day}.month()));
}

const FrameMeta* GroundTruthData::find_frame(std::string_view frame_id) const {
  for (const auto& f : frames) {
    if (f.frame_id == frame_id) return &f;
  }
  return nullptr;
}

GroundTruthData parse_ground_truth(std::istream& in, const std::string& source) {
  GroundTruthData data;
  std::vector<std::size_t> object_lines;
  for_each_line(in, source, [&](const Line& line, const std::string& kind) {
    if (kind == "header") {
      check_header(line, kGroundTruthSchema);
    } else if (kind == "frame") {
      FrameMeta f;
      f.frame_id = line.string_field("frame_id");
      f.timestamp = line.number_field("timestamp");
      f.location = line.string_field("location");
      f.lat = line.number_field("lat");
      f.lon = line.number_field("lon");
      f.rain = line.bool_field("rain_flag");
      f.daytime = line.has("daytime") || !std::isfinite(f.timestamp)
                      ? line.number_field("daytime")
                      : local_hour(f.timestamp, f.location);
      if (line.has("month")) {
        const long long m = line.integer_field("month");
        f.month = (m < 1 || m > 12) ? 0 : static_cast<int>(m);
      } else {
        f.month = std::isfinite(f.timestamp) ? local_month(f.timestamp, f.location) : 0;
      }
      if (line.has("weather")) {
        const json& w = line.at("weather");
        if (!w.is_object()) line.fail("field 'weather' must be an object");
        std::array<double, WeatherRecord::kFieldCount> values{};
        const auto& names = WeatherRecord::field_names();
        for (std::size_t i = 0; i < names.size(); ++i) {
          values[i] = line.optional_number(w, std::string(names[i]).c_str());
        }
        f.weather = WeatherRecord::from_values(values);
        if (!f.weather->complete()) ++data.incomplete_weather_frames;
      }
      validate(f);
      data.frames.push_back(std::move(f));
    } else if (kind == "object") {
      GroundTruthObject o;
      o.frame_id = line.string_field("frame_id");
      o.object_id = line.string_field("object_id");
      const auto c = line.triple("center");
      o.center = {c[0], c[1], c[2]};
      const auto s = line.triple("size");
      o.size = {s[0], s[1], s[2]};
      const double yaw = line.number_field("yaw_deg");
      o.yaw_deg = std::isfinite(yaw) ? normalize_yaw_deg(yaw) : yaw;
      o.velocity = line.number_field("velocity");
      const std::string category = line.string_field("category");
      const std::string attribute = line.string_field("attribute");
      const auto cat = parse_category(category);
      const auto att = parse_attribute(attribute);
      const std::string record = "object '" + o.object_id + "'";
      if (!cat) throw ValidationError(record, "category", "unknown value '" + category + "'");
      if (!att) throw ValidationError(record, "attribute", "unknown value '" + attribute + "'");
      o.category = *cat;
      o.attribute = *att;
      const long long bin = line.integer_field("visibility_bin");
      if (bin < 1 || bin > 4) {
        throw ValidationError(record, "visibility_bin", "must be one of 1, 2, 3, 4");
      }
      o.visibility_bin = static_cast<int>(bin);
      validate(o);
      data.objects.push_back(std::move(o));
      object_lines.push_back(line.number);
    } else {
      line.fail("unexpected record kind '" + kind + "' in ground-truth file");
    }
  });

  std::unordered_set<std::string> frame_ids;
  for (const auto& f : data.frames) {
    if (!frame_ids.insert(f.frame_id).second) {
      throw ReferentialError(source + ": duplicate frame_id '" + f.frame_id + "'");
    }
  }
  std::unordered_set<std::string> object_ids;
  for (std::size_t i = 0; i < data.objects.size(); ++i) {
    const auto& o = data.objects[i];
    if (!frame_ids.contains(o.frame_id)) {
      throw ReferentialError(source + ":" + std::to_string(object_lines[i]) + ": object '" +
                             o.object_id + "' references unknown frame_id '" + o.frame_id + "'");
    }
    if (!object_ids.insert(o.object_id).second) {
      throw ReferentialError(source + ":" + std::to_string(object_lines[i]) +
                             ": duplicate object_id '" + o.object_id + "'");
    }
  }
  return data;
}

GroundTruthData load_ground_truth(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_ground_truth(in, path.string());
}

void write_ground_truth(std::ostream& out, const GroundTruthData& data) {
  out << header(kGroundTruthSchema).dump() << '\n';
  for (const auto& f : data.frames) {
    json j{{"record", "frame"},   {"frame_id", f.frame_id}, {"timestamp", f.timestamp},
           {"location", f.location}, {"lat", f.lat},         {"lon", f.lon},
           {"rain_flag", f.rain},  {"daytime", f.daytime},  {"month", f.month}};
    if (f.weather) {
      json w = json::object();
      const auto values = f.weather->values();
      const auto& names = WeatherRecord::field_names();
      for (std::size_t i = 0; i < names.size(); ++i) w[std::string(names[i])] = nullable(values[i]);
      j["weather"] = std::move(w);
    }
    out << j.dump() << '\n';
  }
  for (const auto& o : data.objects) {
    json j{{"record", "object"},
           {"frame_id", o.frame_id},
           {"object_id", o.object_id},
           {"center", {o.center.x, o.center.y, o.center.z}},
           {"size", {o.size.width, o.size.height, o.size.length}},
           {"yaw_deg", o.yaw_deg},
           {"velocity", o.velocity},
           {"category", to_string(o.category)},
           {"attribute", to_string(o.attribute)},
           {"visibility_bin", o.visibility_bin}};
    out << j.dump() << '\n';
  }
}

void save_ground_truth(const std::filesystem::path& path, const GroundTruthData& data) {
  auto out = open_output(path);
  write_ground_truth(out, data);
}

std::vector<Detection> parse_detections(std::istream& in, const std::string& source) {
  std::vector<Detection> dets;
  for_each_line(in, source, [&](const Line& line, const std::string& kind) {
    if (kind == "header") {
      check_header(line, kDetectionSchema);
      return;
    }
    if (kind != "detection") line.fail("unexpected record kind '" + kind + "' in detection file");
    Detection d;
    d.frame_id = line.string_field("frame_id");
    const auto c = line.triple("center");
    d.center = {c[0], c[1], c[2]};
    const auto s = line.triple("size");
    d.size = {s[0], s[1], s[2]};
    const double yaw = line.number_field("yaw_deg");
    d.yaw_deg = std::isfinite(yaw) ? normalize_yaw_deg(yaw) : yaw;
    d.class_label = line.string_field("class_label");
    d.score = line.number_field("score");
    validate(d, source + ":" + std::to_string(line.number) + " detection");
    dets.push_back(std::move(d));
  });
  return dets;
}

std::vector<Detection> load_detections(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_detections(in, path.string());
}

void write_detections(std::ostream& out, std::span<const Detection> dets) {
  out << header(kDetectionSchema).dump() << '\n';
  for (const auto& d : dets) {
    json j{{"record", "detection"},
           {"frame_id", d.frame_id},
           {"center", {d.center.x, d.center.y, d.center.z}},
           {"size", {d.size.width, d.size.height, d.size.length}},
           {"yaw_deg", d.yaw_deg},
           {"class_label", d.class_label},
           {"score", d.score}};
    out << j.dump() << '\n';
  }
}

void save_detections(const std::filesystem::path& path, std::span<const Detection> dets) {
  auto out = open_output(path);
  write_detections(out, dets);
}

MatchFile parse_match_records(std::istream& in, const std::string& source) {
  MatchFile file;
  bool seen_header = false;
  for_each_line(in, source, [&](const Line& line, const std::string& kind) {
    if (kind == "header") {
      check_header(line, kMatchSchema);
      file.radius = line.number_field("radius");
      file.threshold = line.number_field("threshold");
      file.detector = line.has("detector") ? line.string_field("detector") : "";
      seen_header = true;
      return;
    }
    if (kind != "match") line.fail("unexpected record kind '" + kind + "' in match file");
    MatchRecord r;
    r.frame_id = line.string_field("frame_id");
    const std::string verdict = line.string_field("verdict");
    const auto v = parse_verdict(verdict);
    if (!v) line.fail("unknown verdict '" + verdict + "'");
    r.verdict = *v;
    if (line.has("gt_ref")) r.gt_ref = line.string_field("gt_ref");
    if (line.has("det_ref")) {
      const long long idx = line.integer_field("det_ref");
      if (idx < 0) line.fail("det_ref must be non-negative");
      r.det_ref = static_cast<std::size_t>(idx);
    }
    if (line.has("bev_distance")) r.bev_distance = line.number_field("bev_distance");
    const bool ok = (r.verdict == Verdict::kTP && r.gt_ref && r.det_ref && r.bev_distance) ||
                    (r.verdict == Verdict::kFN && r.gt_ref && !r.det_ref) ||
                    (r.verdict == Verdict::kFP && r.det_ref && !r.gt_ref);
    if (!ok) line.fail("references inconsistent with verdict " + verdict);
    file.records.push_back(std::move(r));
  });
  if (!seen_header) throw ParseError(source, 0, "match file lacks a header line");
  return file;
}

MatchFile load_match_records(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_match_records(in, path.string());
}

void write_match_records(std::ostream& out, const MatchFile& file) {
  json h = header(kMatchSchema);
  h["radius"] = file.radius;
  h["threshold"] = file.threshold;
  h["detector"] = file.detector;
  out << h.dump() << '\n';
  for (const auto& r : file.records) {
    json j{{"record", "match"}, {"frame_id", r.frame_id}, {"verdict", to_string(r.verdict)}};
    if (r.gt_ref) j["gt_ref"] = *r.gt_ref;
    if (r.det_ref) j["det_ref"] = *r.det_ref;
    if (r.bev_distance) j["bev_distance"] = *r.bev_distance;
    out << j.dump() << '\n';
  }
}

void save_match_records(const std::filesystem::path& path, const MatchFile& file) {
  auto out = open_output(path);
  write_match_records(out, file);
}

}  // namespace detfactors
