#pragma once

#include <cstdint>
#include <vector>

#include "detfactors/io.h"
#include "detfactors/types.h"

namespace detfactors {

double logistic(double z);

// Planted detectability law for real pedestrians:
//   P(detect) = logistic(intercept + distance * d + occlusion * (4 - visibility_bin)
//                        + velocity * v + standing * 1{not moving} + rain * 1{rain})
struct DetectabilityLaw {
  double intercept = 3.0;
  double distance = -0.08;
  double occlusion = -0.6;
  double velocity = 0.0;
  double standing = 0.0;
  double rain = 0.0;

  double logit(const GroundTruthObject& o, const FrameMeta& frame) const;
};

// Planted law for ghost (FP) candidates: a candidate placed at BEV distance d
// is emitted with probability logistic(intercept + distance * d).
struct GhostLaw {
  double intercept = -1.0;
  double distance = 0.03;
};

struct DetectorConfig {
  DetectabilityLaw detect;
  GhostLaw ghost;
  double ghosts_per_frame = 2.0;  // Poisson mean of ghost candidates
  double position_noise = 0.15;   // m, per axis
  double size_noise = 0.05;       // relative
  double yaw_noise = 5.0;         // deg
  double true_score_logit = 1.5;  // mean logit of real detections' scores
  double ghost_score_logit = -0.5;
  double score_logit_sd = 1.0;
};

struct SceneConfig {
  int n_frames = 200;
  double pedestrians_per_frame = 8.0;  // Poisson mean
  double min_distance = 2.0;
  double max_distance = 60.0;
  double rain_probability = 0.2;
  bool with_weather = true;
};

struct SynthConfig {
  SceneConfig scene;
  DetectorConfig detector;
};

struct SimulatedDetections {
  std::vector<Detection> detections;
  // Generator truth: per ground-truth object whether the planted law detected
  // it, and per detection whether it is a ghost.
  std::vector<bool> planted_detected;
  std::vector<bool> is_ghost;
};

struct SynthDataset {
  GroundTruthData ground_truth;
  SimulatedDetections detector;
};

// Throws ContractError on non-finite coefficients or invalid ranges.
void validate(const SynthConfig& config);

GroundTruthData generate_scene(const SceneConfig& config, std::uint64_t seed);
SimulatedDetections simulate_detector(const GroundTruthData& scene, const DetectorConfig& config,
                                      std::uint64_t seed);

// Deterministic for a fixed (config, seed).
SynthDataset generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace detfactors
