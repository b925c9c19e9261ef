#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detfactors/matching.h"
#include "detfactors/types.h"

namespace detfactors {

// Line-delimited JSON interchange (docs/interchange.md). Every line is one
// object with a "record" discriminator: "header", "frame", "object",
// "detection" or "match". Blank lines are skipped.
inline constexpr int kInterchangeVersion = 1;

struct GroundTruthData {
  std::vector<FrameMeta> frames;
  std::vector<GroundTruthObject> objects;
  // Frames whose weather record has at least one missing field.
  std::size_t incomplete_weather_frames = 0;

  const FrameMeta* find_frame(std::string_view frame_id) const;
};

GroundTruthData parse_ground_truth(std::istream& in, const std::string& source = "<stream>");
GroundTruthData load_ground_truth(const std::filesystem::path& path);
void write_ground_truth(std::ostream& out, const GroundTruthData& data);
void save_ground_truth(const std::filesystem::path& path, const GroundTruthData& data);

std::vector<Detection> parse_detections(std::istream& in, const std::string& source = "<stream>");
std::vector<Detection> load_detections(const std::filesystem::path& path);
void write_detections(std::ostream& out, std::span<const Detection> dets);
void save_detections(const std::filesystem::path& path, std::span<const Detection> dets);

// Match record files carry the radius and threshold in their header so that
// downstream analysis can consume them without re-matching.
struct MatchFile {
  double radius = kDefaultMatchRadius;
  double threshold = 0.0;
  std::string detector;
  std::vector<MatchRecord> records;
};

MatchFile parse_match_records(std::istream& in, const std::string& source = "<stream>");
MatchFile load_match_records(const std::filesystem::path& path);
void write_match_records(std::ostream& out, const MatchFile& file);
void save_match_records(const std::filesystem::path& path, const MatchFile& file);

// Local hour and month derived from a UTC timestamp shifted by the district's
// standard-time offset (Boston UTC-5, Singapore UTC+8).
double local_hour(double timestamp_utc, std::string_view location);
int local_month(double timestamp_utc, std::string_view location);

}  // namespace detfactors
