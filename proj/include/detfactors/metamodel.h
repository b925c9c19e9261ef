#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "detfactors/features.h"

namespace detfactors {

// Dense row-major matrix of encoded features.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

struct FeaturesPerSplit {
  enum class Rule { kSqrt, kThird, kAll, kFixed };
  Rule rule = Rule::kSqrt;
  int fixed = 0;

  // Number of candidate features per split for p features (at least 1).
  int resolve(int p) const;
  std::string to_string() const;
  static FeaturesPerSplit parse(std::string_view s);
  bool operator==(const FeaturesPerSplit&) const = default;
};

struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_depth;  // nullopt: grow until pure or too small
  int min_samples_leaf = 1;
  FeaturesPerSplit features_per_split;
  bool class_weighting = true;  // weight classes inversely to their frequency
  bool bootstrap = true;
  bool operator==(const ForestParams&) const = default;
};

std::string to_string(const ForestParams& p);

struct TreeParams {
  std::optional<int> max_depth;
  int min_samples_leaf = 1;
  int features_per_split = 1;
};

// Internal nodes send x[feature] <= threshold left. Leaves have feature -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<double, 2> class_prob{0.5, 0.5};

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const;
  int depth() const;
};

// Weighted-Gini CART. `counts` gives each row's multiplicity (0 excludes it);
// impurity uses counts * class_weight[y], the leaf-size limit uses counts.
// At each node `features_per_split` features are drawn without replacement
// and every midpoint between consecutive distinct values is tried. The best
// impurity decrease wins; ties go to the lower feature index, then the lower
// threshold. Nodes stop at max_depth, below 2 * min_samples_leaf, when pure,
// or when no split decreases impurity.
Tree fit_tree(const Matrix& x, std::span<const int> y, std::span<const double> counts,
              std::array<double, 2> class_weight, const TreeParams& params, std::mt19937_64& rng);

struct ForestModel {
  std::vector<Tree> trees;
  std::vector<std::string> feature_names;
  // glmm maps for the categorical source columns, by column name.
  std::vector<EncodingMap> encodings;
  ForestParams params;
  std::uint64_t seed = 0;

  // Mean of the trees' class-1 leaf probabilities.
  double predict_proba(std::span<const double> encoded_row) const;
  // Features used by at least one split.
  std::vector<bool> used_features() const;
  // Encoded feature matrix for a table with the training schema.
  Matrix encode(const FeatureTable& table) const;
};

double predict_proba(const ForestModel& model, std::span<const double> encoded_row);

// Inverse-frequency class weights n / (2 n_c); 1 for an absent class.
std::array<double, 2> balanced_class_weights(std::span<const int> y);

// Trees on bootstrap resamples with per-tree RNG streams derived from seed.
ForestModel train_forest(const Matrix& x, std::span<const int> y,
                         std::vector<std::string> feature_names, const ForestParams& params,
                         std::uint64_t seed, int workers = 1);

// Fits glmm encodings for categorical columns on the whole table, then trains.
ForestModel fit_forest(const FeatureTable& table, const ForestParams& params, std::uint64_t seed,
                       int workers = 1);

// Encodes `table` with glmm maps fitted on `fit_rows` (all rows when empty).
Matrix encode_with_glmm(const FeatureTable& table, std::span<const std::size_t> fit_rows,
                        std::vector<EncodingMap>* encodings_out = nullptr);
Matrix encode_with_maps(const FeatureTable& table, std::span<const EncodingMap> encodings);

// F1 treating `positive` as the positive class; 0 when undefined.
double f1_score(std::span<const int> truth, std::span<const int> predicted, int positive);

// The meta-model predicts detection errors, so cross-validated F1 scores the
// error class (label 0).
inline constexpr int kErrorClass = 0;

struct CvOptions {
  int folds = 5;
  std::uint64_t seed = 0;
  int workers = 1;
};

// Row order that depends only on row content (label, then column values).
std::vector<std::size_t> canonical_row_order(const FeatureTable& table);

// Validation folds over rows 0..n-1: each class is shuffled with a seeded RNG
// and dealt round-robin. Throws StratificationError when a class has fewer
// members than folds.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> y, int folds,
                                                       std::uint64_t seed);

struct FoldResult {
  std::vector<std::size_t> validation_rows;  // in canonical order
  std::vector<EncodingMap> encodings;        // fitted on training rows only
  double f1 = 0.0;
};

struct CvResult {
  double mean_f1 = 0.0;
  std::vector<FoldResult> folds;
  // The table in canonical row order; fold row indices refer to it.
  FeatureTable canonical;
};

CvResult cross_validate(const FeatureTable& table, const ForestParams& params,
                        const CvOptions& options);

struct GridPointScore {
  ForestParams params;
  double cv_f1 = 0.0;
  std::vector<double> fold_f1;
};

struct GridSearchResult {
  ForestParams best;
  double cv_f1 = 0.0;
  std::vector<GridPointScore> scores;  // grid order
};

// Mean stratified-CV F1 per grid point. Ties (within 1e-12) go to fewer
// trees, then shallower trees, then earlier grid position. Throws
// ContractError for an empty grid.
GridSearchResult grid_search(const FeatureTable& table, std::span<const ForestParams> grid,
                             const CvOptions& options);

// n_trees {100, 300} x max_depth {8, 16, none} x min_samples_leaf {1, 5, 20}
// x features_per_split {sqrt, third}.
std::vector<ForestParams> default_grid();

// Versioned JSON document with per-tree node lists (docs/formats.md).
void save_model(std::ostream& out, const ForestModel& model);
ForestModel load_model(std::istream& in);

}  // namespace detfactors
