#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "detfactors/metamodel.h"

namespace detfactors {

struct ShapleyConfig {
  int permutations = 200;
  int conditional_k = 50;
  int samples = 16;                    // completions averaged per coalition value
  std::size_t background_size = 1000;
  std::size_t max_rows = 0;            // rows attributed by mean_abs_shapley; 0 = all
  std::uint64_t seed = 0;
  int workers = 1;
};

// Throws ConfigError on non-positive counts.
void validate(const ShapleyConfig& config);

// Reference rows for the conditional sampler.
struct Background {
  Matrix rows;
  std::vector<double> scale;  // per-feature standard deviation, 1 where it is 0

  std::size_t size() const { return rows.rows; }
};

// Distinct rows of x, subsampled to at most `size` rows with each label's share
// preserved. The result depends only on the multiset of (row, label) contents.
Background make_background(const Matrix& x, std::span<const int> y, std::size_t size,
                           std::uint64_t seed);
// Uses every row of x as given.
Background make_background(const Matrix& x);

// The k background rows nearest to x on the features flagged in `known`
// (standardized Euclidean), ordered by distance then index. With no known
// features every background row is returned in index order.
std::vector<std::size_t> nearest_background(const Background& bg, std::span<const double> x,
                                            const std::vector<bool>& known, int k);

// Completes x: features in `known` keep x's values, the rest come from one of
// the k nearest background rows drawn uniformly (any background row when
// `known` is empty). Throws ConfigError on an empty background.
std::vector<double> conditional_sample(const std::vector<bool>& known, std::span<const double> x,
                                       const Background& bg, int k, std::mt19937_64& rng);

using PredictFn = std::function<double(std::span<const double>)>;

struct Attribution {
  std::size_t row = 0;
  std::vector<double> phi;
  double base_value = 0.0;
  double prediction = 0.0;
};

// Permutation-sampling Shapley values of f at x. Coalition values average f
// over `samples` conditional completions; within one permutation the
// completions reuse the same uniform draws, so marginal contributions
// telescope and sum(phi) = f(x) - base_value up to rounding. Conditioning only
// looks at features flagged in `relevant` (all when empty); a feature outside
// it gets phi = 0 exactly. The RNG stream is keyed by the row's values.
Attribution estimate_shapley(const PredictFn& f, std::span<const double> x, const Background& bg,
                             const ShapleyConfig& config, const std::vector<bool>& relevant = {});

// Uses the forest's split features as the relevant set.
Attribution estimate_shapley(const ForestModel& model, std::span<const double> x,
                             const Background& bg, const ShapleyConfig& config);

struct FeatureImportance {
  std::string feature;
  double mean_abs = 0.0;
};

struct ShapleyResult {
  std::vector<FeatureImportance> ranked;  // descending, ties by feature order
  std::vector<double> mean_abs;           // feature order
  std::vector<Attribution> attributions;  // one per distinct attributed row
  std::vector<double> row_weights;        // multiplicity of each attributed row
  std::size_t background_rows = 0;
  int conditional_k = 0;
};

// Mean |phi| per feature over the rows of x. Identical rows are attributed once
// and weighted by multiplicity.
ShapleyResult mean_abs_shapley(const PredictFn& f, const Matrix& x, std::span<const int> y,
                               const std::vector<std::string>& names, const ShapleyConfig& config,
                               const std::vector<bool>& relevant = {});

// Encodes `table` with the model's maps; background drawn from the same table.
ShapleyResult mean_abs_shapley(const ForestModel& model, const FeatureTable& table,
                               const ShapleyConfig& config);

}  // namespace detfactors
