#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>

#include "detfactors/errors.h"
#include "detfactors/features.h"
#include "detfactors/io.h"
#include "detfactors/matching.h"
#include "detfactors/parallel.h"
#include "detfactors/pipeline.h"
#include "detfactors/report.h"
#include "detfactors/synth.h"
#include "detfactors/univariate.h"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace detfactors;

namespace {

Config settings_config(const std::map<std::string, std::string>& settings) {
  Config c;
  for (const auto& [k, v] : settings) c.set(k, v);
  return c;
}

py::dict summary_dict(const MatchSummary& s) {
  py::dict d;
  d["tp"] = s.tp;
  d["fp"] = s.fp;
  d["fn"] = s.fn;
  d["precision"] = s.precision;
  d["recall"] = s.recall;
  d["f1"] = s.f1;
  d["threshold"] = s.threshold;
  return d;
}

// Writes ground_truth.jsonl and detections.jsonl; returns (frames, objects, detections).
py::tuple synth_dataset(const fs::path& out_dir, int frames, double pedestrians, bool weather,
                        std::uint64_t seed) {
  SynthConfig sc;
  sc.scene.n_frames = frames;
  sc.scene.pedestrians_per_frame = pedestrians;
  sc.scene.with_weather = weather;
  validate(sc);
  SynthDataset ds;
  {
    py::gil_scoped_release release;
    ds = generate_synthetic(sc, seed);
  }
  fs::create_directories(out_dir);
  save_ground_truth(out_dir / "ground_truth.jsonl", ds.ground_truth);
  save_detections(out_dir / "detections.jsonl", ds.detector.detections);
  return py::make_tuple(ds.ground_truth.frames.size(), ds.ground_truth.objects.size(),
                        ds.detector.detections.size());
}

py::dict match_files(const fs::path& gt_path, const fs::path& det_path, const fs::path& out_path,
                     std::optional<double> threshold, double radius, const std::string& detector,
                     int workers) {
  const GroundTruthData gt = load_ground_truth(gt_path);
  const std::vector<Detection> dets = load_detections(det_path);
  MatchFile mf;
  mf.radius = radius;
  mf.detector = detector.empty() ? det_path.stem().string() : detector;
  {
    py::gil_scoped_release release;
    mf.threshold = threshold ? *threshold
                             : optimize_threshold(gt.objects, dets, radius, default_threshold_grid(dets),
                                                  workers)
                                   .threshold;
    mf.records = match_dataset(gt.objects, dets, radius, mf.threshold, workers);
  }
  save_match_records(out_path, mf);
  return summary_dict(summarize(mf.records, mf.threshold));
}

std::string analyze_files(const fs::path& gt_path, const fs::path& det_path, const fs::path& match_path,
                          const fs::path& out_path, const std::map<std::string, std::string>& settings) {
  const AnalysisConfig ac = analysis_config(settings_config(settings));
  const GroundTruthData gt = load_ground_truth(gt_path);
  const std::vector<Detection> dets = load_detections(det_path);
  const MatchFile mf = load_match_records(match_path);
  DetectorAnalysis a;
  {
    py::gil_scoped_release release;
    a = analyze_detector(gt, dets, mf, ac);
  }
  save_analysis(out_path, a, RunInfo{fingerprint(ac), ac.seed});
  return fingerprint(ac);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of detfactors";
  m.attr("__version__") = std::string(version());

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<ParseError> parse(m, "ParseError", base.ptr());
  static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
  static py::exception<ReferentialError> referential(m, "ReferentialError", base.ptr());
  static py::exception<ContractError> contract(m, "ContractError", base.ptr());
  static py::exception<DomainError> domain(m, "DomainError", base.ptr());
  static py::exception<EstimatorError> estimator(m, "EstimatorError", base.ptr());
  static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
  static py::exception<WeatherUnavailable> weather(m, "WeatherUnavailable", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      parse(e.what());
    } catch (const ValidationError& e) {
      validation(e.what());
    } catch (const ReferentialError& e) {
      referential(e.what());
    } catch (const ContractError& e) {
      contract(e.what());
    } catch (const DomainError& e) {
      domain(e.what());
    } catch (const EstimatorError& e) {
      estimator(e.what());
    } catch (const ConfigError& e) {
      config(e.what());
    } catch (const WeatherUnavailable& e) {
      weather(e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  m.def(
      "kendall_tau_b",
      [](const std::vector<double>& x, const std::vector<double>& y) { return kendall_tau_b(x, y); },
      py::arg("x"), py::arg("y"), "Tie-corrected Kendall rank correlation; None when undefined.");
  m.def(
      "mi_mixed",
      [](const std::vector<double>& x, const std::vector<int>& y, int k, bool jitter, std::uint64_t seed) {
        return mi_mixed(x, y, {k, jitter, seed}).mi;
      },
      py::arg("x"), py::arg("y"), py::arg("k") = 3, py::arg("jitter") = true, py::arg("seed") = 0,
      "Nearest-neighbour mutual information (nats) between a numeric x and discrete y.");
  m.def(
      "entropy_knn",
      [](const std::vector<double>& x, int k, bool jitter, std::uint64_t seed) {
        return entropy_knn(x, k, jitter, seed).entropy;
      },
      py::arg("x"), py::arg("k") = 3, py::arg("jitter") = true, py::arg("seed") = 0);
  m.def(
      "mi_discrete", [](const std::vector<int>& x, const std::vector<int>& y) { return mi_discrete(x, y); },
      py::arg("x"), py::arg("y"));
  m.def(
      "plugin_entropy", [](const std::vector<int>& x) { return plugin_entropy(x); }, py::arg("x"));
  m.def(
      "normalized_mi", [](double mi, double hx, double hy) { return normalized_mi(mi, hx, hy).nmi; },
      py::arg("mi"), py::arg("h_x"), py::arg("h_y"));
  m.def(
      "angular_sizes",
      [](double width, double height, double length, double distance) {
        const AngularSize a = angular_sizes({width, height, length}, distance);
        return py::make_tuple(a.vertical_deg, a.horizontal_deg);
      },
      py::arg("width"), py::arg("height"), py::arg("length"), py::arg("distance"),
      "(vertical, horizontal) apparent size in degrees.");

  m.def("synth_dataset", &synth_dataset, py::arg("out_dir"), py::arg("frames") = 200,
        py::arg("pedestrians") = 8.0, py::arg("weather") = true, py::arg("seed") = 0);
  m.def("match_files", &match_files, py::arg("ground_truth"), py::arg("detections"), py::arg("out"),
        py::arg("threshold") = py::none(), py::arg("radius") = kDefaultMatchRadius,
        py::arg("detector") = "", py::arg("workers") = 1,
        "Matches a detection file against ground truth and writes the records. "
        "A threshold of None selects the F1-maximizing score threshold.");
  m.def("analyze_files", &analyze_files, py::arg("ground_truth"), py::arg("detections"),
        py::arg("matches"), py::arg("out"), py::arg("settings") = std::map<std::string, std::string>{},
        "Runs the FN/FP analysis and writes the JSON artifact; returns the configuration fingerprint.");
}
