#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detfactors/features.h"

namespace detfactors {

// Pair counts behind Kendall's tau-b over n observations.
struct KendallCounts {
  std::int64_t n = 0;
  std::int64_t pairs = 0;        // n (n - 1) / 2
  std::int64_t x_ties = 0;       // pairs tied in x
  std::int64_t y_ties = 0;       // pairs tied in y
  std::int64_t joint_ties = 0;   // pairs tied in both
  std::int64_t discordant = 0;
  std::int64_t concordant = 0;

  // (C - D) / sqrt((pairs - x_ties)(pairs - y_ties)); nullopt when either
  // variable is constant.
  std::optional<double> tau_b() const;
};

// O(n log n) pair counting (sort by x then merge-sort inversions in y).
// Throws ContractError on size mismatch, n < 2 or NaN input.
KendallCounts kendall_counts(std::span<const double> x, std::span<const double> y);

std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y);

// Deterministic tie-breaking noise: uniform in +-1e-10 * IQR(x) (falling back
// to the range, then to 1e-10 * max(1, |x|) for degenerate spreads).
std::vector<double> tie_break_jitter(std::span<const double> x, std::uint64_t seed);

struct MiOptions {
  int k = 3;
  bool jitter = true;
  std::uint64_t seed = 0;
};

struct MiEstimate {
  double mi = 0.0;   // clamped at 0, nats
  double raw = 0.0;  // before clamping
  bool clamped = false;
  // Points whose k-th same-label neighbour sits at distance 0 (ties in x).
  std::size_t zero_distance_points = 0;
};

// Mutual information between a continuous x and a discrete label y using the
// nearest-neighbour estimator for mixed pairs:
//   I = psi(N) - <psi(N_y)> + psi(k) - <psi(m)>
// where m counts all points within the distance of the k-th neighbour sharing
// the label. Throws EstimatorError when a label group has fewer than k + 1
// points.
MiEstimate mi_mixed(std::span<const double> x, std::span<const int> y, const MiOptions& options = {});

// Plug-in mutual information of two discrete variables, nats.
double mi_discrete(std::span<const int> x, std::span<const int> y);

// Plug-in Shannon entropy, nats.
double plugin_entropy(std::span<const int> x);

struct EntropyEstimate {
  double entropy = 0.0;  // nats, may be negative
  std::size_t zero_distance_points = 0;
};

// Nearest-neighbour differential entropy of a 1-D sample:
//   H = psi(N) - psi(k) + ln 2 + (1/N) sum ln eps_i
// with eps_i the distance to the k-th neighbour. Throws EstimatorError when
// n <= k or when ties give zero distances and jitter is off.
EntropyEstimate entropy_knn(std::span<const double> x, int k = 3, bool jitter = true,
                            std::uint64_t seed = 0);

inline constexpr double kDegenerateEntropy = 1e-12;

struct NormalizedMi {
  double nmi = 0.0;
  bool degenerate = false;  // H(X) + H(Y) <= kDegenerateEntropy
};

// Symmetric uncertainty 2 I / (H(X) + H(Y)), clamped to [0, 1].
NormalizedMi normalized_mi(double mi, double h_x, double h_y);

// Maps arbitrary values to dense integer codes in value order.
std::vector<int> discrete_codes(std::span<const double> values);

struct DependenceScore {
  std::string feature;
  std::string source_column;
  ColumnKind kind = ColumnKind::kNumeric;
  std::optional<double> tau_b;  // nullopt: undefined (constant or nominal)
  double mi = 0.0;
  double nmi = 0.0;
  double h_x = 0.0;
  double h_y = 0.0;
  bool entropy_clamped = false;  // differential entropy was negative
  bool degenerate = false;
  std::size_t zero_distance_points = 0;
  std::size_t n_effective = 0;
};

struct UnivariateOptions {
  MiOptions mi;
  int workers = 1;
};

// Scores every column against the label. Numeric columns use the mixed
// estimator and kNN entropy; ordinal and categorical columns the plug-in
// estimators. Categorical columns additionally get one row per one-hot
// indicator ("<column>=<level>"); the nominal column itself has no tau.
std::vector<DependenceScore> score_table(const FeatureTable& table,
                                         const UnivariateOptions& options = {});

}  // namespace detfactors
