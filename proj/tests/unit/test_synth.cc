#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "detfactors/errors.h"
#include "detfactors/io.h"
#include "detfactors/synth.h"

namespace detfactors {
namespace {

TEST(Synth, DeterministicForSeed) {
  SynthConfig cfg;
  cfg.scene.n_frames = 50;
  const SynthDataset a = generate_synthetic(cfg, 42);
  const SynthDataset b = generate_synthetic(cfg, 42);
  const SynthDataset c = generate_synthetic(cfg, 43);
  auto dump = [](const SynthDataset& ds) {
    std::ostringstream out;
    write_ground_truth(out, ds.ground_truth);
    write_detections(out, ds.detector.detections);
    return out.str();
  };
  EXPECT_EQ(dump(a), dump(b));
  EXPECT_NE(dump(a), dump(c));
}

TEST(Synth, RecordsAreValid) {
  SynthConfig cfg;
  cfg.scene.n_frames = 100;
  const SynthDataset ds = generate_synthetic(cfg, 1);
  for (const auto& f : ds.ground_truth.frames) EXPECT_NO_THROW(validate(f));
  for (const auto& o : ds.ground_truth.objects) {
    EXPECT_NO_THROW(validate(o));
    const double d = bev_distance(o.center);
    EXPECT_GE(d, cfg.scene.min_distance);
    EXPECT_LE(d, cfg.scene.max_distance);
  }
  for (const auto& d : ds.detector.detections) EXPECT_NO_THROW(validate(d, "det"));
  EXPECT_EQ(ds.detector.planted_detected.size(), ds.ground_truth.objects.size());
  EXPECT_EQ(ds.detector.is_ghost.size(), ds.detector.detections.size());
}

// The empirical detection rate equals the mean planted probability within a
// few binomial standard errors.
TEST(Synth, DetectionRateFollowsPlantedLaw) {
  SynthConfig cfg;
  cfg.scene.n_frames = 1500;
  const SynthDataset ds = generate_synthetic(cfg, 7);
  const auto& gt = ds.ground_truth;
  double expected = 0, var = 0, hits = 0;
  double near_expected = 0, near_hits = 0, near_n = 0;
  for (std::size_t i = 0; i < gt.objects.size(); ++i) {
    const auto& o = gt.objects[i];
    const double p = logistic(cfg.detector.detect.logit(o, *gt.find_frame(o.frame_id)));
    expected += p;
    var += p * (1 - p);
    hits += ds.detector.planted_detected[i];
    if (bev_distance(o.center) < 15) {
      near_expected += p;
      near_hits += ds.detector.planted_detected[i];
      ++near_n;
    }
  }
  EXPECT_NEAR(hits, expected, 4 * std::sqrt(var));
  EXPECT_GT(near_hits / near_n, (hits / static_cast<double>(gt.objects.size())));
  EXPECT_NEAR(near_hits / near_n, near_expected / near_n, 0.03);
}

TEST(Synth, LogitMatchesFormula) {
  DetectabilityLaw law;
  law.velocity = 0.1;
  law.standing = -0.5;
  law.rain = -0.7;
  GroundTruthObject o;
  o.center = {3, 4, 0};
  o.visibility_bin = 2;
  o.velocity = 2;
  o.attribute = Attribute::kStanding;
  FrameMeta f;
  f.rain = true;
  EXPECT_DOUBLE_EQ(law.logit(o, f), 3.0 - 0.08 * 5 - 0.6 * 2 + 0.1 * 2 - 0.5 - 0.7);
  EXPECT_DOUBLE_EQ(logistic(0), 0.5);
}

TEST(Synth, InvalidConfigRejected) {
  SynthConfig cfg;
  cfg.detector.detect.distance = std::numeric_limits<double>::infinity();
  EXPECT_THROW(validate(cfg), ContractError);
  SynthConfig d;
  d.scene.min_distance = 10;
  d.scene.max_distance = 5;
  EXPECT_THROW(validate(d), ContractError);
  EXPECT_THROW(generate_synthetic(d, 1), ContractError);
}

}  // namespace
}  // namespace detfactors
