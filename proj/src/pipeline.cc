#include "detfactors/pipeline.h"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "detfactors/errors.h"
#include "detfactors/parallel.h"
#include "detfactors/weather.h"

namespace detfactors {

namespace {

std::vector<int> ints(const std::vector<std::string>& items, const std::string& key) {
  std::vector<int> out;
  for (const auto& s : items) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v < 1) {
      throw ConfigError("config key '" + key + "': expected positive integers, got '" + s + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

AnalysisConfig analysis_config(const Config& c) {
  AnalysisConfig a;
  a.seed = c.get_u64("seed", 0);
  a.workers = c.get_int("workers", 1);
  if (a.workers < 1) throw ConfigError("workers must be >= 1");
  const std::string missing = c.get_string("table.missing", "drop_row");
  if (missing == "drop_row") {
    a.table.missing = MissingPolicy::kDropRow;
  } else if (missing == "drop_column") {
    a.table.missing = MissingPolicy::kDropColumn;
  } else {
    throw ConfigError("table.missing must be drop_row or drop_column, got '" + missing + "'");
  }
  a.mi_k = c.get_int("analysis.mi_k", 3);
  if (a.mi_k < 1) throw ConfigError("analysis.mi_k must be >= 1");
  a.folds = c.get_int("analysis.folds", 5);
  if (a.folds < 2) throw ConfigError("analysis.folds must be >= 2");
  a.metamodel = c.get_bool("analysis.metamodel", true);

  const auto trees = ints(c.get_list("grid.n_trees", {"100", "300"}), "grid.n_trees");
  std::vector<std::optional<int>> depths;
  for (const auto& s : c.get_list("grid.max_depth", {"8", "16", "none"})) {
    if (s == "none") {
      depths.emplace_back();
    } else {
      depths.emplace_back(ints({s}, "grid.max_depth").front());
    }
  }
  const auto leaves = ints(c.get_list("grid.min_samples_leaf", {"1", "5", "20"}), "grid.min_samples_leaf");
  std::vector<FeaturesPerSplit> fps;
  for (const auto& s : c.get_list("grid.features_per_split", {"sqrt", "third"})) {
    fps.push_back(FeaturesPerSplit::parse(s));
  }
  const bool weighting = c.get_bool("forest.class_weighting", true);
  a.grid.clear();
  for (int t : trees) {
    for (const auto& d : depths) {
      for (int l : leaves) {
        for (const auto& f : fps) {
          ForestParams g;
          g.n_trees = t;
          g.max_depth = d;
          g.min_samples_leaf = l;
          g.features_per_split = f;
          g.class_weighting = weighting;
          a.grid.push_back(g);
        }
      }
    }
  }

  a.shapley.permutations = c.get_int("shapley.permutations", 200);
  a.shapley.conditional_k = c.get_int("shapley.conditional_k", 50);
  a.shapley.samples = c.get_int("shapley.samples", 16);
  a.shapley.background_size = c.get_u64("shapley.background", 1000);
  a.shapley.max_rows = c.get_u64("shapley.max_rows", 0);
  validate(a.shapley);
  return a;
}

std::string describe(const AnalysisConfig& a) {
  std::ostringstream out;
  out << "seed=" << a.seed << '\n';
  out << "table.missing=" << (a.table.missing == MissingPolicy::kDropRow ? "drop_row" : "drop_column") << '\n';
  out << "table.include_weather=" << a.table.include_weather << '\n';
  out << "analysis.mi_k=" << a.mi_k << '\n';
  out << "analysis.folds=" << a.folds << '\n';
  out << "analysis.metamodel=" << a.metamodel << '\n';
  for (const auto& g : a.grid) out << "grid=" << to_string(g) << '\n';
  out << "shapley.permutations=" << a.shapley.permutations << '\n';
  out << "shapley.conditional_k=" << a.shapley.conditional_k << '\n';
  out << "shapley.samples=" << a.shapley.samples << '\n';
  out << "shapley.background=" << a.shapley.background_size << '\n';
  out << "shapley.max_rows=" << a.shapley.max_rows << '\n';
  return out.str();
}

std::string fingerprint(const AnalysisConfig& a) { return sha256_hex(describe(a)); }

TableAnalysis analyze_table(const std::string& name, const FeatureTable& table,
                            const AnalysisConfig& config, std::uint64_t seed) {
  table.check();
  TableAnalysis out;
  out.name = name;
  out.rows = table.rows();
  out.positives = static_cast<std::size_t>(std::count(table.label.begin(), table.label.end(), 1));
  out.dropped_rows = table.dropped_rows;
  out.columns = table.names();

  UnivariateOptions uo;
  uo.mi.k = config.mi_k;
  uo.mi.seed = derive_seed(seed, 1);
  uo.workers = config.workers;
  out.univariate = score_table(table, uo);

  if (!config.metamodel) return out;
  out.metamodel = true;
  CvOptions cv;
  cv.folds = config.folds;
  cv.seed = derive_seed(seed, 2);
  cv.workers = config.workers;
  out.grid = grid_search(table, config.grid, cv);
  out.model = fit_forest(table, out.grid.best, derive_seed(seed, 3), config.workers);
  ShapleyConfig sc = config.shapley;
  sc.seed = derive_seed(seed, 4);
  sc.workers = config.workers;
  out.shapley = mean_abs_shapley(out.model, table, sc);
  return out;
}

DetectorAnalysis analyze_detector(const GroundTruthData& gt, std::span<const Detection> dets,
                                  const MatchFile& matches, const AnalysisConfig& config) {
  DetectorAnalysis out;
  out.detector = matches.detector;
  out.radius = matches.radius;
  out.threshold = matches.threshold;
  out.summary = summarize(matches.records, matches.threshold);
  const FeatureTable fn = build_fn_table(matches.records, gt, config.table);
  const FeatureTable fp = build_fp_table(matches.records, dets, gt.frames, config.table);
  out.fn = analyze_table("fn", fn, config, derive_seed(config.seed, 0xf1));
  out.fp = analyze_table("fp", fp, config, derive_seed(config.seed, 0xf2));
  return out;
}

}  // namespace detfactors
