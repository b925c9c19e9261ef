#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detfactors/config.h"
#include "detfactors/features.h"
#include "detfactors/io.h"
#include "detfactors/matching.h"
#include "detfactors/metamodel.h"
#include "detfactors/shapley.h"
#include "detfactors/univariate.h"

namespace detfactors {

struct AnalysisConfig {
  std::uint64_t seed = 0;
  int workers = 1;  // never affects results
  TableOptions table;
  int mi_k = 3;
  bool metamodel = true;
  std::vector<ForestParams> grid = default_grid();
  int folds = 5;
  ShapleyConfig shapley;
};

// Reads the analysis.*, grid.*, forest.*, shapley.*, table.*, seed and
// workers keys.
AnalysisConfig analysis_config(const Config& config);

// Canonical text of every result-affecting setting (workers excluded).
std::string describe(const AnalysisConfig& config);
std::string fingerprint(const AnalysisConfig& config);

struct TableAnalysis {
  std::string name;  // "fn" or "fp"
  std::size_t rows = 0;
  std::size_t positives = 0;
  std::size_t dropped_rows = 0;
  std::vector<std::string> columns;
  std::vector<DependenceScore> univariate;
  bool metamodel = false;
  GridSearchResult grid;
  ForestModel model;  // refit on the whole table with the selected settings
  ShapleyResult shapley;
};

// Univariate scores, then (when enabled) grid search, a final forest and
// Shapley importances. Stage seeds derive from `seed`.
TableAnalysis analyze_table(const std::string& name, const FeatureTable& table,
                            const AnalysisConfig& config, std::uint64_t seed);

struct DetectorAnalysis {
  std::string detector;
  double radius = 0.0;
  double threshold = 0.0;
  MatchSummary summary;
  TableAnalysis fn;
  TableAnalysis fp;
};

// Builds the FN and FP tables from stored match records and analyzes both.
DetectorAnalysis analyze_detector(const GroundTruthData& gt, std::span<const Detection> dets,
                                  const MatchFile& matches, const AnalysisConfig& config);

}  // namespace detfactors
