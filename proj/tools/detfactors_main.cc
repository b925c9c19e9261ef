// detfactors command-line tool.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data or
// validation error, 3 weather service unavailable.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "detfactors/config.h"
#include "detfactors/errors.h"
#include "detfactors/io.h"
#include "detfactors/matching.h"
#include "detfactors/parallel.h"
#include "detfactors/pipeline.h"
#include "detfactors/report.h"
#include "detfactors/synth.h"
#include "detfactors/weather.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace detfactors;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    cmd->add_option("--set", assignments, "Override a configuration key (key=value); repeatable");
    cmd->add_option("--seed", seed, "Seed for every stochastic stage");
    cmd->add_option("--workers", workers, "Worker threads (does not change results)");
  }

  Config load() const {
    Config c = config_path.empty() ? Config{} : Config::load(config_path);
    for (const auto& a : assignments) c.set_assignment(a);
    if (seed) c.set("seed", std::to_string(*seed));
    if (workers) c.set("workers", std::to_string(*workers));
    return c;
  }
};

struct WeatherFlags {
  std::string source;
  std::string cache_dir;
  std::string fixture;
  std::string base_url;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--weather-source", source, "live, cache, fixture or off");
    cmd->add_option("--weather-cache", cache_dir, "Weather cache directory");
    cmd->add_option("--weather-fixture", fixture, "Weather fixture file (JSONL)");
    cmd->add_option("--weather-url", base_url, "Weather service base URL");
  }

  WeatherClientOptions options(const Config& c, const std::string& default_source) const {
    WeatherClientOptions o;
    o.source = parse_weather_source(source.empty() ? c.get_string("weather.source", default_source) : source);
    o.cache_dir = cache_dir.empty() ? c.get_string("weather.cache_dir", o.cache_dir.string()) : cache_dir;
    o.fixture_path = fixture.empty() ? c.get_string("weather.fixture", "") : fixture;
    o.base_url = base_url.empty() ? c.get_string("weather.base_url", o.base_url) : base_url;
    o.api_key = api_key_from_env();
    return o;
  }
};

void write_json_file(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << doc.dump(1) << '\n';
}

json summary_json(const std::string& detector, double radius, const MatchSummary& s) {
  return {{"schema", "detfactors.match_summary"},
          {"version", 1},
          {"tool_version", std::string(version())},
          {"detector", detector},
          {"radius", radius},
          {"threshold", s.threshold},
          {"tp", s.tp},
          {"fp", s.fp},
          {"fn", s.fn},
          {"precision", s.precision},
          {"recall", s.recall},
          {"f1", s.f1}};
}

std::string detector_name(int i) {
  std::string name = "synth-";
  name.push_back(static_cast<char>('a' + i % 26));
  if (i >= 26) name += std::to_string(i / 26);
  return name;
}

// Detector i is somewhat weaker and more distance-sensitive than detector i - 1.
DetectorConfig synth_detector(int i) {
  DetectorConfig d;
  d.detect.intercept -= 0.4 * i;
  d.detect.distance -= 0.015 * i;
  d.ghosts_per_frame += 0.5 * i;
  return d;
}

int cmd_synth(const Common& common, const std::string& out_dir, std::optional<int> frames,
              std::optional<double> pedestrians, std::optional<int> detectors, bool no_weather) {
  const Config c = common.load();
  SynthConfig sc;
  sc.scene.n_frames = frames.value_or(c.get_int("synth.frames", sc.scene.n_frames));
  sc.scene.pedestrians_per_frame =
      pedestrians.value_or(c.get_double("synth.pedestrians", sc.scene.pedestrians_per_frame));
  sc.scene.with_weather = !no_weather && c.get_bool("synth.weather", true);
  const int n_det = detectors.value_or(c.get_int("synth.detectors", 1));
  if (n_det < 1) throw ConfigError("synth.detectors must be >= 1");
  const std::uint64_t seed = c.get_u64("seed", 0);
  validate(sc);

  fs::create_directories(out_dir);
  const GroundTruthData gt = generate_scene(sc.scene, derive_seed(seed, 0x5ce));
  save_ground_truth(fs::path(out_dir) / "ground_truth.jsonl", gt);
  json planted = json::array();
  for (int i = 0; i < n_det; ++i) {
    const DetectorConfig dc = synth_detector(i);
    const SimulatedDetections sim = simulate_detector(gt, dc, derive_seed(seed, 0xde7, i));
    const std::string name = detector_name(i);
    save_detections(fs::path(out_dir) / ("detections_" + name + ".jsonl"), sim.detections);
    planted.push_back({{"detector", name},
                       {"detect", {{"intercept", dc.detect.intercept},
                                   {"distance", dc.detect.distance},
                                   {"occlusion", dc.detect.occlusion},
                                   {"velocity", dc.detect.velocity},
                                   {"standing", dc.detect.standing},
                                   {"rain", dc.detect.rain}}},
                       {"ghost", {{"intercept", dc.ghost.intercept}, {"distance", dc.ghost.distance}}},
                       {"ghosts_per_frame", dc.ghosts_per_frame},
                       {"detections", sim.detections.size()}});
  }
  write_json_file(fs::path(out_dir) / "planted.json",
                  {{"schema", "detfactors.planted"},
                   {"version", 1},
                   {"tool_version", std::string(version())},
                   {"seed", seed},
                   {"frames", gt.frames.size()},
                   {"objects", gt.objects.size()},
                   {"detectors", std::move(planted)}});
  std::cout << "wrote " << gt.frames.size() << " frames, " << gt.objects.size() << " objects and "
            << n_det << " detector file(s) to " << out_dir << '\n';
  return 0;
}

int cmd_match(const Common& common, const std::string& gt_path, const std::string& det_path,
              const std::string& out_path, std::string detector, std::optional<double> radius_flag,
              std::string threshold_flag, std::string summary_path) {
  const Config c = common.load();
  const GroundTruthData gt = load_ground_truth(gt_path);
  const std::vector<Detection> dets = load_detections(det_path);
  const double radius = radius_flag.value_or(c.get_double("match.radius", kDefaultMatchRadius));
  if (!(radius > 0)) throw ConfigError("match radius must be positive");
  const std::string threshold_spec =
      threshold_flag.empty() ? c.get_string("match.threshold", "auto") : threshold_flag;
  const int workers = c.get_int("workers", 1);

  double threshold = 0.0;
  if (threshold_spec == "auto") {
    const auto grid = default_threshold_grid(dets);
    threshold = optimize_threshold(gt.objects, dets, radius, grid, workers).threshold;
  } else {
    Config probe;
    probe.set("match.threshold", threshold_spec);
    threshold = probe.get_double("match.threshold", 0.0);
    if (!(threshold >= 0 && threshold <= 1)) throw ConfigError("match threshold must be in [0, 1] or auto");
  }
  if (detector.empty()) {
    detector = fs::path(det_path).stem().string();
    if (detector.rfind("detections_", 0) == 0) detector = detector.substr(11);
  }
  MatchFile mf;
  mf.radius = radius;
  mf.threshold = threshold;
  mf.detector = detector;
  mf.records = match_dataset(gt.objects, dets, radius, threshold, workers);
  save_match_records(out_path, mf);
  const MatchSummary s = summarize(mf.records, threshold);
  if (summary_path.empty()) summary_path = out_path + ".summary.json";
  write_json_file(summary_path, summary_json(detector, radius, s));
  std::cout << detector << ": threshold " << threshold << ", TP " << s.tp << ", FP " << s.fp << ", FN "
            << s.fn << ", F1 " << s.f1 << '\n';
  return 0;
}

int cmd_analyze(const Common& common, const WeatherFlags& weather, const std::string& gt_path,
                const std::string& det_path, const std::string& match_path, const std::string& out_path,
                const std::string& model_prefix) {
  const Config c = common.load();
  const AnalysisConfig ac = analysis_config(c);
  GroundTruthData gt = load_ground_truth(gt_path);
  const std::vector<Detection> dets = load_detections(det_path);
  const MatchFile mf = load_match_records(match_path);

  const WeatherClientOptions wo = weather.options(c, "off");
  if (wo.source != WeatherSource::kOff) {
    WeatherClient client(wo);
    enrich_frames(gt.frames, client, ac.workers);
  }
  const DetectorAnalysis a = analyze_detector(gt, dets, mf, ac);
  save_analysis(out_path, a, RunInfo{fingerprint(ac), ac.seed});
  if (!model_prefix.empty()) {
    for (const TableAnalysis* t : {&a.fn, &a.fp}) {
      if (!t->metamodel) continue;
      std::ofstream out(model_prefix + "_" + t->name + ".json", std::ios::trunc);
      if (!out) throw Error("cannot write model file");
      save_model(out, t->model);
    }
  }
  std::cout << "analysis of " << a.detector << ": FN table " << a.fn.rows << " rows, FP table " << a.fp.rows
            << " rows -> " << out_path << '\n';
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir, bool charts) {
  std::vector<AnalysisArtifact> artifacts;
  for (const auto& p : inputs) artifacts.push_back(load_analysis(p));
  const auto written = write_report(out_dir, artifacts, charts);
  std::cout << "wrote " << written.size() << " report files to " << out_dir << '\n';
  return 0;
}

int cmd_weather(const Common& common, const WeatherFlags& weather, const std::string& gt_path,
                const std::string& out_path, std::optional<double> lat, std::optional<double> lon,
                std::optional<double> timestamp) {
  const Config c = common.load();
  const WeatherClientOptions wo = weather.options(c, "cache");
  if (wo.source == WeatherSource::kOff) throw ConfigError("weather-fetch needs a weather source other than off");
  WeatherClient client(wo);
  if (!gt_path.empty()) {
    if (out_path.empty()) throw ConfigError("--out is required with --gt");
    GroundTruthData gt = load_ground_truth(gt_path);
    const std::size_t n = enrich_frames(gt.frames, client, c.get_int("workers", 1));
    save_ground_truth(out_path, gt);
    std::cout << "enriched " << n << " frames (" << client.upstream_calls() << " upstream calls, "
              << client.cache_hits() << " cache hits)\n";
    return 0;
  }
  if (!lat || !lon || !timestamp) throw ConfigError("give --gt or all of --lat, --lon and --timestamp");
  const WeatherQuery q = WeatherQuery::make(*lat, *lon, *timestamp);
  const WeatherRecord w = client.fetch(q);
  json rec = json::object();
  const auto values = w.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    rec[std::string(WeatherRecord::field_names()[i])] = std::isnan(values[i]) ? json(nullptr) : json(values[i]);
  }
  std::cout << json{{"query", q.key()}, {"weather", rec}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detection-error factor analysis for pedestrian detectors"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Common common;
  WeatherFlags weather;

  auto* synth = app.add_subcommand("synth-gen", "Generate a planted synthetic dataset");
  std::string synth_out;
  std::optional<int> frames, detectors;
  std::optional<double> pedestrians;
  bool no_weather = false;
  synth->add_option("--out-dir", synth_out, "Output directory")->required();
  synth->add_option("--frames", frames, "Number of frames");
  synth->add_option("--pedestrians", pedestrians, "Mean pedestrians per frame");
  synth->add_option("--detectors", detectors, "Number of simulated detectors");
  synth->add_flag("--no-weather", no_weather, "Leave frames without weather records");
  common.add_to(synth);

  auto* match = app.add_subcommand("match", "Classify detections and objects as TP, FP or FN");
  std::string gt_path, det_path, match_out, detector, threshold, summary_path;
  std::optional<double> radius;
  match->add_option("--gt", gt_path, "Ground-truth JSONL")->required();
  match->add_option("--detections", det_path, "Detections JSONL")->required();
  match->add_option("--out", match_out, "Match records JSONL")->required();
  match->add_option("--detector", detector, "Detector name (default: from the file name)");
  match->add_option("--radius", radius, "BEV matching radius in metres");
  match->add_option("--threshold", threshold, "Score threshold in [0, 1] or 'auto'");
  match->add_option("--summary", summary_path, "Summary JSON (default: <out>.summary.json)");
  common.add_to(match);

  auto* analyze = app.add_subcommand("analyze", "Univariate and meta-model analyses of FN and FP errors");
  std::string matches_path, analysis_out, model_prefix;
  analyze->add_option("--gt", gt_path, "Ground-truth JSONL")->required();
  analyze->add_option("--detections", det_path, "Detections JSONL")->required();
  analyze->add_option("--matches", matches_path, "Match records JSONL")->required();
  analyze->add_option("--out", analysis_out, "Analysis JSON")->required();
  analyze->add_option("--model-out", model_prefix, "Write fitted forests to <prefix>_fn.json / _fp.json");
  common.add_to(analyze);
  weather.add_to(analyze);

  auto* report = app.add_subcommand("report", "Plot data, charts and a summary from analysis artifacts");
  std::vector<std::string> analyses;
  std::string report_dir;
  bool charts = false;
  report->add_option("--analysis", analyses, "Analysis JSON; repeat for several detectors")->required();
  report->add_option("--out-dir", report_dir, "Output directory")->required();
  report->add_flag("--charts", charts, "Also render SVG bar charts");

  auto* wfetch = app.add_subcommand("weather-fetch", "Fetch weather records into the cache or a dataset");
  std::string weather_out;
  std::optional<double> lat, lon, timestamp;
  wfetch->add_option("--gt", gt_path, "Ground-truth JSONL to enrich");
  wfetch->add_option("--out", weather_out, "Enriched ground-truth JSONL");
  wfetch->add_option("--lat", lat, "Latitude");
  wfetch->add_option("--lon", lon, "Longitude");
  wfetch->add_option("--timestamp", timestamp, "UTC seconds");
  common.add_to(wfetch);
  weather.add_to(wfetch);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*synth) return cmd_synth(common, synth_out, frames, pedestrians, detectors, no_weather);
    if (*match) return cmd_match(common, gt_path, det_path, match_out, detector, radius, threshold, summary_path);
    if (*analyze) return cmd_analyze(common, weather, gt_path, det_path, matches_path, analysis_out, model_prefix);
    if (*report) return cmd_report(analyses, report_dir, charts);
    if (*wfetch) return cmd_weather(common, weather, gt_path, weather_out, lat, lon, timestamp);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const WeatherUnavailable& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
