#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "detfactors/errors.h"
#include "detfactors/io.h"
#include "detfactors/synth.h"
#include "detfactors/types.h"

namespace detfactors {
namespace {

const char* kFrame =
    R"({"record":"frame","frame_id":"f1","timestamp":1538400000,"location":"singapore-onenorth","lat":1.29,"lon":103.79,"rain_flag":false})";
const char* kObject =
    R"({"record":"object","frame_id":"f1","object_id":"o1","center":[10,0,0],"size":[0.6,1.7,0.8],"yaw_deg":190,"velocity":1.2,"category":"adult","attribute":"moving","visibility_bin":4})";
const char* kGtHeader = R"({"record":"header","schema":"detfactors.groundtruth","version":1})";

GroundTruthData parse(const std::string& text) {
  std::istringstream in(text);
  return parse_ground_truth(in, "test");
}

TEST(Types, YawNormalization) {
  EXPECT_DOUBLE_EQ(normalize_yaw_deg(190.0), -170.0);
  EXPECT_DOUBLE_EQ(normalize_yaw_deg(-180.0), 180.0);
  EXPECT_DOUBLE_EQ(normalize_yaw_deg(180.0), 180.0);
  EXPECT_DOUBLE_EQ(normalize_yaw_deg(540.0), 180.0);
  EXPECT_DOUBLE_EQ(normalize_yaw_deg(-90.0), -90.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2000, 2000);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng);
    const double n = normalize_yaw_deg(a);
    EXPECT_GT(n, -180.0);
    EXPECT_LE(n, 180.0);
    EXPECT_NEAR(std::remainder(a - n, 360.0), 0.0, 1e-9);
  }
}

TEST(Types, BevDistanceIgnoresHeight) {
  EXPECT_DOUBLE_EQ(bev_distance(Vec3{3, 4, 100}), 5.0);
  EXPECT_DOUBLE_EQ(bev_distance(Vec3{1, 1, 0}, Vec3{4, 5, -3}), 5.0);
}

TEST(Types, WeatherValidation) {
  WeatherRecord w;
  EXPECT_NO_THROW(validate(w, "w"));  // all missing is allowed
  w.humidity = 120;
  EXPECT_THROW(validate(w, "w"), ValidationError);
  w.humidity = 50;
  w.temperature = 10;
  w.dew_point = 12;
  try {
    validate(w, "w");
    FAIL() << "dew point above temperature accepted";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "dew_point");
  }
  w.dew_point = 10.4;
  EXPECT_NO_THROW(validate(w, "w"));
  w.wind_direction = 360;
  EXPECT_THROW(validate(w, "w"), ValidationError);
}

TEST(Types, WeatherEqualityTreatsMissingAsEqual) {
  WeatherRecord a, b;
  EXPECT_EQ(a, b);
  a.temperature = 3;
  EXPECT_FALSE(a == b);
  b.temperature = 3;
  EXPECT_EQ(a, b);
}

TEST(Io, DerivesDaytimeAndMonthFromTimestamp) {
  // 2018-10-01 13:20 UTC is 21:20 local in Singapore (UTC+8).
  const auto gt = parse(std::string(kGtHeader) + "\n" + kFrame + "\n");
  ASSERT_EQ(gt.frames.size(), 1u);
  EXPECT_NEAR(gt.frames[0].daytime, 21.0 + 20.0 / 60.0, 1e-9);
  EXPECT_EQ(gt.frames[0].month, 10);
  EXPECT_FALSE(gt.frames[0].weather.has_value());
}

TEST(Io, LocalTimeCrossesMonthBoundary) {
  // 2018-11-01 02:00 UTC is 2018-10-31 21:00 in Boston (UTC-5).
  EXPECT_EQ(local_month(1541037600.0, "boston-seaport"), 10);
  EXPECT_NEAR(local_hour(1541037600.0, "boston-seaport"), 21.0, 1e-9);
  EXPECT_EQ(local_month(1541037600.0, "singapore-queenstown"), 11);
}

TEST(Io, YawNormalizedAtLoad) {
  const auto gt = parse(std::string(kGtHeader) + "\n" + kFrame + "\n" + kObject + "\n");
  ASSERT_EQ(gt.objects.size(), 1u);
  EXPECT_DOUBLE_EQ(gt.objects[0].yaw_deg, -170.0);
}

TEST(Io, ParseErrorCarriesLineNumber) {
  const std::string text = std::string(kGtHeader) + "\n" + kFrame + "\n{not json\n";
  try {
    parse(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Io, UnknownFrameIsReferentialError) {
  std::string obj = kObject;
  obj.replace(obj.find("\"f1\""), 4, "\"f9\"");
  EXPECT_THROW(parse(std::string(kGtHeader) + "\n" + kFrame + "\n" + obj + "\n"), ReferentialError);
}

TEST(Io, DuplicateObjectIsReferentialError) {
  EXPECT_THROW(parse(std::string(kGtHeader) + "\n" + kFrame + "\n" + kObject + "\n" + kObject + "\n"),
               ReferentialError);
}

TEST(Io, InvalidValuesAreValidationErrors) {
  std::string obj = kObject;
  obj.replace(obj.find("\"adult\""), 7, "\"robot\"");
  EXPECT_THROW(parse(std::string(kGtHeader) + "\n" + kFrame + "\n" + obj + "\n"), ValidationError);
  std::string frame = kFrame;
  frame.replace(frame.find("singapore-onenorth"), 18, "singapore-nowhere1");
  EXPECT_THROW(parse(std::string(kGtHeader) + "\n" + frame + "\n"), ValidationError);
}

TEST(Io, WrongSchemaRejected) {
  std::istringstream in(std::string(kGtHeader) + "\n");
  EXPECT_THROW(parse_detections(in, "test"), ParseError);
}

TEST(Io, GroundTruthRoundTrip) {
  SceneConfig sc;
  sc.n_frames = 30;
  const GroundTruthData gt = generate_scene(sc, 11);
  std::ostringstream out;
  write_ground_truth(out, gt);
  const GroundTruthData back = parse(out.str());
  EXPECT_EQ(back.frames, gt.frames);
  EXPECT_EQ(back.objects, gt.objects);
  std::ostringstream again;
  write_ground_truth(again, back);
  EXPECT_EQ(again.str(), out.str());
}

TEST(Io, MissingWeatherFieldsRoundTripAsNull) {
  SceneConfig sc;
  sc.n_frames = 3;
  GroundTruthData gt = generate_scene(sc, 5);
  gt.frames[1].weather->humidity = kMissing;
  std::ostringstream out;
  write_ground_truth(out, gt);
  EXPECT_NE(out.str().find("\"humidity\":null"), std::string::npos);
  const GroundTruthData back = parse(out.str());
  EXPECT_TRUE(std::isnan(back.frames[1].weather->humidity));
  EXPECT_EQ(back.incomplete_weather_frames, 1u);
}

TEST(Io, DetectionAndMatchRoundTrip) {
  SynthConfig cfg;
  cfg.scene.n_frames = 20;
  const SynthDataset ds = generate_synthetic(cfg, 9);
  std::ostringstream out;
  write_detections(out, ds.detector.detections);
  std::istringstream in(out.str());
  const auto dets = parse_detections(in, "dets");
  ASSERT_EQ(dets.size(), ds.detector.detections.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    EXPECT_EQ(dets[i].center, ds.detector.detections[i].center);
    EXPECT_EQ(dets[i].score, ds.detector.detections[i].score);
  }

  MatchFile mf;
  mf.radius = 2.0;
  mf.threshold = 0.25;
  mf.detector = "d";
  mf.records = match_dataset(ds.ground_truth.objects, dets, 2.0, 0.25);
  std::ostringstream mout;
  write_match_records(mout, mf);
  std::istringstream min(mout.str());
  const MatchFile back = parse_match_records(min, "m");
  EXPECT_EQ(back.records, mf.records);
  EXPECT_EQ(back.radius, 2.0);
  EXPECT_EQ(back.threshold, 0.25);
  EXPECT_EQ(back.detector, "d");
}

TEST(Io, MatchFileWithoutHeaderRejected) {
  std::istringstream in(R"({"record":"match","frame_id":"f","verdict":"FN","gt_ref":"o"})" "\n");
  EXPECT_THROW(parse_match_records(in, "m"), ParseError);
}

TEST(Io, InconsistentMatchRecordRejected) {
  std::istringstream in(
      R"({"record":"header","schema":"detfactors.matches","version":1,"radius":2,"threshold":0.5})"
      "\n"
      R"({"record":"match","frame_id":"f","verdict":"TP","gt_ref":"o"})"
      "\n");
  EXPECT_THROW(parse_match_records(in, "m"), ParseError);
}

// Random byte-level corruption of a valid file never escapes the library's
// error hierarchy.
TEST(Io, FuzzedInputOnlyRaisesLibraryErrors) {
  SceneConfig sc;
  sc.n_frames = 4;
  std::ostringstream out;
  write_ground_truth(out, generate_scene(sc, 2));
  const std::string base = out.str();
  std::mt19937_64 rng(77);
  const std::string alphabet = "{}[]\",:0123456789.-eEtrufalsn \n";
  int parsed = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text = base;
    const int edits = 1 + static_cast<int>(rng() % 4);
    for (int e = 0; e < edits; ++e) {
      const std::size_t pos = rng() % text.size();
      switch (rng() % 3) {
        case 0:
          text[pos] = alphabet[rng() % alphabet.size()];
          break;
        case 1:
          text.erase(pos, 1 + rng() % 5);
          break;
        default:
          text.insert(pos, 1, alphabet[rng() % alphabet.size()]);
      }
    }
    try {
      parse(text);
      ++parsed;
    } catch (const Error&) {
    }
  }
  SUCCEED() << parsed << " mutated files still parsed";
}

}  // namespace
}  // namespace detfactors
