#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "detfactors/pipeline.h"

namespace detfactors {

std::string_view version();

struct RunInfo {
  std::string fingerprint;
  std::uint64_t seed = 0;
};

// Analysis artifact: JSON with schema "detfactors.analysis" version 1.
void write_analysis(std::ostream& out, const DetectorAnalysis& analysis, const RunInfo& run);
void save_analysis(const std::filesystem::path& path, const DetectorAnalysis& analysis,
                   const RunInfo& run);

// Per-feature values read back from an artifact.
struct FeatureMetrics {
  std::string feature;
  std::optional<double> tau_b;
  std::optional<double> nmi;
  std::optional<double> mean_abs_shapley;
};

struct ArtifactTable {
  std::string name;
  std::vector<FeatureMetrics> features;  // artifact order
};

struct AnalysisArtifact {
  std::string detector;
  std::string fingerprint;
  std::uint64_t seed = 0;
  MatchSummary summary;
  std::vector<ArtifactTable> tables;
};

AnalysisArtifact parse_analysis(std::istream& in, const std::string& source = "<analysis>");
AnalysisArtifact load_analysis(const std::filesystem::path& path);

inline constexpr std::array<std::string_view, 3> kPlotMetrics = {"tau_b", "nmi", "mean_abs_shapley"};

// One grouped-bar chart: features on the x axis, one series per detector.
struct PlotData {
  std::string table;
  std::string metric;
  std::vector<std::string> detectors;  // sorted
  std::vector<std::string> features;   // first-seen order over sorted detectors
  std::vector<std::vector<std::optional<double>>> values;  // [detector][feature]
};

// Plot data per (table, metric) with at least one value; detectors sorted by
// name, duplicates rejected with ContractError.
std::vector<PlotData> build_plot_data(std::vector<AnalysisArtifact> artifacts);

void write_plot_tsv(std::ostream& out, const PlotData& plot);
void write_svg_chart(std::ostream& out, const PlotData& plot);

// Plain-text overview: match summaries and the top features per metric.
void write_summary(std::ostream& out, const std::vector<AnalysisArtifact>& artifacts, int top = 5);

// Writes <table>_<metric>.tsv (and .svg with charts), plus summary.txt, into
// `dir`. Returns the written paths in order.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir,
                                                const std::vector<AnalysisArtifact>& artifacts,
                                                bool charts);

}  // namespace detfactors
