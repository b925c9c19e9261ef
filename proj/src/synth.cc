#include "detfactors/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <unordered_map>

#include "detfactors/errors.h"
#include "detfactors/parallel.h"

namespace detfactors {

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double DetectabilityLaw::logit(const GroundTruthObject& o, const FrameMeta& frame) const {
  return intercept + distance * bev_distance(o.center) +
         occlusion * static_cast<double>(4 - o.visibility_bin) + velocity * o.velocity +
         standing * (o.attribute == Attribute::kMoving ? 0.0 : 1.0) +
         rain * (frame.rain ? 1.0 : 0.0);
}

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw ContractError(std::string("synthetic config: ") + name +
                                             " must be finite");
}

struct District {
  std::string_view name;
  double lat;
  double lon;
  double mean_temperature;
  double temperature_sd;
};

constexpr std::array<District, 4> kDistricts = {{
    {"boston-seaport", 42.3523, -71.0447, 12.0, 8.0},
    {"singapore-hollandvillage", 1.3114, 103.7960, 28.0, 2.0},
    {"singapore-onenorth", 1.2995, 103.7872, 28.0, 2.0},
    {"singapore-queenstown", 1.2942, 103.8060, 28.0, 2.0},
}};

// 2018-01-01T00:00Z .. 2019-01-01T00:00Z
constexpr double kYearStart = 1514764800.0;
constexpr double kYearSeconds = 365.0 * 86400.0;

template <std::size_t N>
std::size_t draw_index(std::mt19937_64& rng, const std::array<double, N>& probs) {
  std::discrete_distribution<std::size_t> dist(probs.begin(), probs.end());
  return dist(rng);
}

double clamp_positive(double v, double floor) { return std::max(v, floor); }

WeatherRecord synth_weather(std::mt19937_64& rng, const District& d, const FrameMeta& f) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  WeatherRecord w;
  w.temperature = d.mean_temperature + d.temperature_sd * n01(rng);
  w.dew_point = w.temperature - std::abs(4.0 + 2.0 * n01(rng));
  w.humidity = std::clamp(70.0 + 12.0 * n01(rng), 5.0, 100.0);
  w.precipitation = f.rain ? std::exponential_distribution<double>(0.5)(rng) : 0.0;
  w.windspeed = std::abs(12.0 + 6.0 * n01(rng));
  w.wind_direction = std::fmod(360.0 * u01(rng), 360.0);
  w.sea_level_pressure = 1013.0 + 6.0 * n01(rng);
  w.cloud_cover = std::clamp(50.0 + 30.0 * n01(rng), 0.0, 100.0);
  const bool daylight = f.daytime >= 6.0 && f.daytime <= 18.0;
  w.solar_radiation =
      daylight ? std::max(0.0, 800.0 * std::sin(std::numbers::pi * (f.daytime - 6.0) / 12.0) *
                                   (1.0 - w.cloud_cover / 150.0))
               : 0.0;
  w.visibility = clamp_positive(15.0 + 5.0 * n01(rng), 0.5);
  w.uv_index = std::floor(w.solar_radiation / 100.0);
  return w;
}

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "f%06d", index);
  return buf;
}

}  // namespace

void validate(const SynthConfig& config) {
  const auto& s = config.scene;
  const auto& d = config.detector;
  for (auto [v, name] : {std::pair{d.detect.intercept, "detect.intercept"},
                         {d.detect.distance, "detect.distance"},
                         {d.detect.occlusion, "detect.occlusion"},
                         {d.detect.velocity, "detect.velocity"},
                         {d.detect.standing, "detect.standing"},
                         {d.detect.rain, "detect.rain"},
                         {d.ghost.intercept, "ghost.intercept"},
                         {d.ghost.distance, "ghost.distance"},
                         {d.ghosts_per_frame, "ghosts_per_frame"},
                         {d.position_noise, "position_noise"},
                         {d.size_noise, "size_noise"},
                         {d.yaw_noise, "yaw_noise"},
                         {d.true_score_logit, "true_score_logit"},
                         {d.ghost_score_logit, "ghost_score_logit"},
                         {d.score_logit_sd, "score_logit_sd"},
                         {s.pedestrians_per_frame, "pedestrians_per_frame"},
                         {s.min_distance, "min_distance"},
                         {s.max_distance, "max_distance"},
                         {s.rain_probability, "rain_probability"}}) {
    require_finite(v, name);
  }
  if (s.n_frames < 0) throw ContractError("synthetic config: n_frames must be >= 0");
  if (!(s.min_distance > 0.0 && s.max_distance >= s.min_distance)) {
    throw ContractError("synthetic config: need 0 < min_distance <= max_distance");
  }
  if (s.pedestrians_per_frame < 0.0 || d.ghosts_per_frame < 0.0) {
    throw ContractError("synthetic config: Poisson means must be >= 0");
  }
  if (s.rain_probability < 0.0 || s.rain_probability > 1.0) {
    throw ContractError("synthetic config: rain_probability must lie in [0, 1]");
  }
  if (d.position_noise < 0.0 || d.size_noise < 0.0 || d.yaw_noise < 0.0 ||
      d.score_logit_sd < 0.0) {
    throw ContractError("synthetic config: noise scales must be >= 0");
  }
}

GroundTruthData generate_scene(const SceneConfig& config, std::uint64_t seed) {
  validate(SynthConfig{config, DetectorConfig{}});
  std::mt19937_64 rng(derive_seed(seed, 0x5ce7e));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::poisson_distribution<int> crowd(config.pedestrians_per_frame);

  constexpr std::array<double, 4> kDistrictProbs = {0.55, 0.15, 0.15, 0.15};
  constexpr std::array<double, 4> kCategoryProbs = {0.80, 0.08, 0.08, 0.04};
  constexpr std::array<double, 3> kAttributeProbs = {0.55, 0.35, 0.10};
  constexpr std::array<double, 4> kVisibilityProbs = {0.15, 0.15, 0.20, 0.50};

  GroundTruthData data;
  for (int fi = 0; fi < config.n_frames; ++fi) {
    const District& district = kDistricts[draw_index(rng, kDistrictProbs)];
    FrameMeta f;
    f.frame_id = frame_name(fi);
    f.timestamp = std::floor(kYearStart + kYearSeconds * u01(rng));
    f.location = std::string(district.name);
    f.lat = district.lat + 0.005 * n01(rng);
    f.lon = district.lon + 0.005 * n01(rng);
    f.daytime = local_hour(f.timestamp, f.location);
    f.month = local_month(f.timestamp, f.location);
    f.rain = u01(rng) < config.rain_probability;
    if (config.with_weather) f.weather = synth_weather(rng, district, f);

    const int count = crowd(rng);
    for (int oi = 0; oi < count; ++oi) {
      GroundTruthObject o;
      o.frame_id = f.frame_id;
      char buf[48];
      std::snprintf(buf, sizeof buf, "%s-o%03d", f.frame_id.c_str(), oi);
      o.object_id = buf;
      const double dist =
          config.min_distance + (config.max_distance - config.min_distance) * u01(rng);
      const double azimuth = 2.0 * std::numbers::pi * u01(rng) - std::numbers::pi;
      o.category = static_cast<Category>(draw_index(rng, kCategoryProbs));
      o.attribute = static_cast<Attribute>(draw_index(rng, kAttributeProbs));
      const bool child = o.category == Category::kChild;
      o.size.width = clamp_positive((child ? 0.5 : 0.65) + 0.08 * n01(rng), 0.2);
      o.size.height = clamp_positive((child ? 1.2 : 1.75) + (child ? 0.15 : 0.1) * n01(rng), 0.5);
      o.size.length = clamp_positive((child ? 0.55 : 0.7) + 0.1 * n01(rng), 0.2);
      o.center = {dist * std::cos(azimuth), dist * std::sin(azimuth),
                  o.size.height / 2.0 - 1.8 + 0.1 * n01(rng)};
      o.yaw_deg = normalize_yaw_deg(360.0 * u01(rng) - 180.0);
      switch (o.attribute) {
        case Attribute::kMoving:
          o.velocity = std::abs(1.3 + 0.3 * n01(rng));
          break;
        case Attribute::kStanding:
          o.velocity = std::abs(0.05 * n01(rng));
          break;
        case Attribute::kSittingLying:
          o.velocity = 0.0;
          break;
      }
      o.visibility_bin = 1 + static_cast<int>(draw_index(rng, kVisibilityProbs));
      data.objects.push_back(std::move(o));
    }
    data.frames.push_back(std::move(f));
  }
  return data;
}

SimulatedDetections simulate_detector(const GroundTruthData& scene, const DetectorConfig& config,
                                      std::uint64_t seed) {
  SceneConfig scene_defaults;
  validate(SynthConfig{scene_defaults, config});
  std::mt19937_64 rng(derive_seed(seed, 0xde7ec7));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::poisson_distribution<int> ghosts(config.ghosts_per_frame);

  SimulatedDetections out;
  out.planted_detected.resize(scene.objects.size(), false);

  // Objects grouped by frame in frame order so ghosts interleave per frame.
  std::vector<std::vector<std::size_t>> by_frame(scene.frames.size());
  {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < scene.frames.size(); ++i) index[scene.frames[i].frame_id] = i;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
      by_frame[index.at(scene.objects[i].frame_id)].push_back(i);
    }
  }

  auto score = [&](double mean_logit) {
    return logistic(mean_logit + config.score_logit_sd * n01(rng));
  };
  auto jitter_size = [&](const BoxSize& s) {
    return BoxSize{clamp_positive(s.width * (1.0 + config.size_noise * n01(rng)), 0.05),
                   clamp_positive(s.height * (1.0 + config.size_noise * n01(rng)), 0.05),
                   clamp_positive(s.length * (1.0 + config.size_noise * n01(rng)), 0.05)};
  };

  for (std::size_t fi = 0; fi < scene.frames.size(); ++fi) {
    const FrameMeta& frame = scene.frames[fi];
    for (std::size_t oi : by_frame[fi]) {
      const GroundTruthObject& o = scene.objects[oi];
      const double p = logistic(config.detect.logit(o, frame));
      const bool detected = u01(rng) < p;
      out.planted_detected[oi] = detected;
      if (!detected) continue;
      Detection d;
      d.frame_id = o.frame_id;
      d.center = {o.center.x + config.position_noise * n01(rng),
                  o.center.y + config.position_noise * n01(rng),
                  o.center.z + config.position_noise * n01(rng)};
      d.size = jitter_size(o.size);
      d.yaw_deg = normalize_yaw_deg(o.yaw_deg + config.yaw_noise * n01(rng));
      d.score = score(config.true_score_logit);
      out.detections.push_back(std::move(d));
      out.is_ghost.push_back(false);
    }
    const int candidates = ghosts(rng);
    for (int g = 0; g < candidates; ++g) {
      const double dist = 2.0 + 58.0 * u01(rng);
      const double azimuth = 2.0 * std::numbers::pi * u01(rng) - std::numbers::pi;
      const bool emitted = u01(rng) < logistic(config.ghost.intercept + config.ghost.distance * dist);
      Detection d;
      d.frame_id = frame.frame_id;
      d.center = {dist * std::cos(azimuth), dist * std::sin(azimuth), -0.9 + 0.1 * n01(rng)};
      d.size = jitter_size(BoxSize{0.65, 1.75, 0.7});
      d.yaw_deg = normalize_yaw_deg(360.0 * u01(rng) - 180.0);
      d.score = score(config.ghost_score_logit);
      if (!emitted) continue;
      out.detections.push_back(std::move(d));
      out.is_ghost.push_back(true);
    }
  }
  return out;
}

SynthDataset generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  validate(config);
  SynthDataset ds;
  ds.ground_truth = generate_scene(config.scene, seed);
  ds.detector = simulate_detector(ds.ground_truth, config.detector, seed);
  return ds;
}

}  // namespace detfactors
