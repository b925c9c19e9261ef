#include "detfactors/univariate.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <boost/math/special_functions/digamma.hpp>

#include "detfactors/errors.h"
#include "detfactors/parallel.h"

namespace detfactors {

using boost::math::digamma;

std::optional<double> KendallCounts::tau_b() const {
  const std::int64_t dx = pairs - x_ties;
  const std::int64_t dy = pairs - y_ties;
  if (dx <= 0 || dy <= 0) return std::nullopt;
  return static_cast<double>(concordant - discordant) /
         std::sqrt(static_cast<double>(dx) * static_cast<double>(dy));
}

namespace {

std::int64_t tie_pairs(std::int64_t run) { return run * (run - 1) / 2; }

// Sorts v in place and returns the number of inversions.
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch) {
  const std::size_t n = v.size();
  std::int64_t swaps = 0;
  scratch.resize(n);
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          swaps += static_cast<std::int64_t>(mid - i);
          scratch[k++] = v[j++];
        } else {
          scratch[k++] = v[i++];
        }
      }
      while (i < mid) scratch[k++] = v[i++];
      while (j < hi) scratch[k++] = v[j++];
    }
    std::swap(v, scratch);
  }
  return swaps;
}

void check_pair(std::size_t nx, std::size_t ny) {
  if (nx != ny) throw ContractError("paired samples differ in length");
}

}  // namespace

KendallCounts kendall_counts(std::span<const double> x, std::span<const double> y) {
  check_pair(x.size(), y.size());
  if (x.size() < 2) throw ContractError("Kendall's tau needs at least two observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) throw ContractError("Kendall's tau input has NaN");
  }
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  KendallCounts c;
  c.n = static_cast<std::int64_t>(n);
  c.pairs = tie_pairs(c.n);
  std::int64_t run_x = 1, run_xy = 1;
  for (std::size_t i = 1; i < n; ++i) {
    const bool same_x = x[order[i]] == x[order[i - 1]];
    const bool same_xy = same_x && y[order[i]] == y[order[i - 1]];
    if (same_x) {
      ++run_x;
    } else {
      c.x_ties += tie_pairs(run_x);
      run_x = 1;
    }
    if (same_xy) {
      ++run_xy;
    } else {
      c.joint_ties += tie_pairs(run_xy);
      run_xy = 1;
    }
  }
  c.x_ties += tie_pairs(run_x);
  c.joint_ties += tie_pairs(run_xy);

  std::vector<double> ys(n), scratch;
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  c.discordant = count_inversions(ys, scratch);

  std::int64_t run_y = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (ys[i] == ys[i - 1]) {
      ++run_y;
    } else {
      c.y_ties += tie_pairs(run_y);
      run_y = 1;
    }
  }
  c.y_ties += tie_pairs(run_y);
  c.concordant = c.pairs - c.x_ties - c.y_ties + c.joint_ties - c.discordant;
  return c;
}

std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  return kendall_counts(x, y).tau_b();
}

namespace {

double quantile(std::vector<double> v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

}  // namespace

std::vector<double> tie_break_jitter(std::span<const double> x, std::uint64_t seed) {
  std::vector<double> out(x.begin(), x.end());
  if (out.empty()) return out;
  std::vector<double> copy(x.begin(), x.end());
  double spread = quantile(copy, 0.75) - quantile(copy, 0.25);
  if (!(spread > 0.0)) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    spread = *hi - *lo;
  }
  if (!(spread > 0.0)) spread = std::max(1.0, std::abs(x[0]));
  const double amplitude = 1e-10 * spread;
  std::mt19937_64 rng(derive_seed(seed, 0x717e));
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  for (double& v : out) v += u(rng);
  return out;
}

namespace {

// Distance from sorted[pos] to its k-th nearest neighbour within `sorted`.
double kth_neighbour_distance(const std::vector<double>& sorted, std::size_t pos, int k) {
  const double v = sorted[pos];
  std::size_t left = pos, right = pos;  // neighbours taken: (left, right) exclusive of pos
  double d = 0.0;
  for (int step = 0; step < k; ++step) {
    const bool can_left = left > 0;
    const bool can_right = right + 1 < sorted.size();
    const double dl = can_left ? v - sorted[left - 1] : std::numeric_limits<double>::infinity();
    const double dr = can_right ? sorted[right + 1] - v : std::numeric_limits<double>::infinity();
    if (dl <= dr) {
      --left;
      d = dl;
    } else {
      ++right;
      d = dr;
    }
  }
  return d;
}

// Number of entries of `sorted` within distance d of v (inclusive).
std::size_t count_within(const std::vector<double>& sorted, double v, double d) {
  auto inside = [&](double w) { return std::abs(w - v) <= d; };
  auto lo = std::lower_bound(sorted.begin(), sorted.end(), v - d);
  while (lo != sorted.begin() && inside(*(lo - 1))) --lo;
  while (lo != sorted.end() && !inside(*lo) && *lo < v) ++lo;
  auto hi = std::upper_bound(sorted.begin(), sorted.end(), v + d);
  while (hi != sorted.end() && inside(*hi)) ++hi;
  while (hi != sorted.begin() && !inside(*(hi - 1)) && *(hi - 1) > v) --hi;
  return static_cast<std::size_t>(hi - lo);
}

}  // namespace

MiEstimate mi_mixed(std::span<const double> x, std::span<const int> y, const MiOptions& options) {
  check_pair(x.size(), y.size());
  if (options.k < 1) throw ContractError("k must be >= 1");
  for (double v : x) {
    if (!std::isfinite(v)) throw ContractError("mutual information input must be finite");
  }
  const std::vector<double> xs =
      options.jitter ? tie_break_jitter(x, options.seed) : std::vector<double>(x.begin(), x.end());

  std::map<int, std::vector<double>> groups;
  for (std::size_t i = 0; i < xs.size(); ++i) groups[y[i]].push_back(xs[i]);
  for (auto& [label, values] : groups) {
    if (values.size() < static_cast<std::size_t>(options.k) + 1) {
      throw EstimatorError("label group " + std::to_string(label) + " has " +
                           std::to_string(values.size()) + " points; mixed MI with k = " +
                           std::to_string(options.k) + " needs at least " +
                           std::to_string(options.k + 1));
    }
    std::sort(values.begin(), values.end());
  }
  if (groups.empty()) throw EstimatorError("mixed MI needs at least one observation");

  std::vector<double> all = xs;
  std::sort(all.begin(), all.end());

  const double n = static_cast<double>(xs.size());
  double sum_psi_label = 0.0;
  double sum_psi_m = 0.0;
  MiEstimate est;
  for (const auto& [label, values] : groups) {
    const double psi_label = digamma(static_cast<double>(values.size()));
    for (std::size_t pos = 0; pos < values.size(); ++pos) {
      const double d = kth_neighbour_distance(values, pos, options.k);
      if (d == 0.0) ++est.zero_distance_points;
      const std::size_t m = count_within(all, values[pos], d) - 1;  // exclude self
      sum_psi_label += psi_label;
      sum_psi_m += digamma(static_cast<double>(m));
    }
  }
  est.raw = digamma(n) - sum_psi_label / n + digamma(static_cast<double>(options.k)) - sum_psi_m / n;
  est.clamped = est.raw < 0.0;
  est.mi = std::max(0.0, est.raw);
  return est;
}

double mi_discrete(std::span<const int> x, std::span<const int> y) {
  check_pair(x.size(), y.size());
  if (x.empty()) return 0.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> px, py;
  for (std::size_t i = 0; i < x.size(); ++i) {
    joint[{x[i], y[i]}] += 1.0;
    px[x[i]] += 1.0;
    py[y[i]] += 1.0;
  }
  const double n = static_cast<double>(x.size());
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    mi += (c / n) * std::log(c * n / (px[key.first] * py[key.second]));
  }
  return std::max(0.0, mi);
}

double plugin_entropy(std::span<const int> x) {
  if (x.empty()) return 0.0;
  std::map<int, double> counts;
  for (int v : x) counts[v] += 1.0;
  const double n = static_cast<double>(x.size());
  double h = 0.0;
  for (const auto& [v, c] : counts) h -= (c / n) * std::log(c / n);
  return std::max(0.0, h);
}

EntropyEstimate entropy_knn(std::span<const double> x, int k, bool jitter, std::uint64_t seed) {
  if (k < 1) throw ContractError("k must be >= 1");
  if (x.size() <= static_cast<std::size_t>(k)) {
    throw EstimatorError("kNN entropy needs more than k = " + std::to_string(k) + " points");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw ContractError("entropy input must be finite");
  }
  std::vector<double> xs = jitter ? tie_break_jitter(x, seed) : std::vector<double>(x.begin(), x.end());
  std::sort(xs.begin(), xs.end());
  EntropyEstimate est;
  double sum_log = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = kth_neighbour_distance(xs, i, k);
    if (d == 0.0) {
      ++est.zero_distance_points;
      continue;
    }
    sum_log += std::log(d);
  }
  if (est.zero_distance_points > 0) {
    throw EstimatorError(std::to_string(est.zero_distance_points) +
                         " points have zero k-th neighbour distance; enable tie-break jitter");
  }
  const double n = static_cast<double>(xs.size());
  est.entropy = digamma(n) - digamma(static_cast<double>(k)) + std::log(2.0) + sum_log / n;
  return est;
}

NormalizedMi normalized_mi(double mi, double h_x, double h_y) {
  const double total = h_x + h_y;
  if (!(total > kDegenerateEntropy)) return {0.0, true};
  return {std::clamp(2.0 * mi / total, 0.0, 1.0), false};
}

std::vector<int> discrete_codes(std::span<const double> values) {
  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<int> codes(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    codes[i] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), values[i]) -
                                distinct.begin());
  }
  return codes;
}

namespace {

struct Task {
  std::string feature;
  std::size_t column;
  ColumnKind kind;
  // For one-hot indicators: level index; -1 otherwise.
  int level = -1;
};

DependenceScore score_discrete(const Task& t, std::span<const double> values,
                               std::span<const int> label, std::span<const double> label_d,
                               double h_y, bool with_tau) {
  DependenceScore s;
  s.feature = t.feature;
  s.kind = t.kind;
  s.n_effective = values.size();
  if (with_tau) s.tau_b = kendall_tau_b(values, label_d);
  const auto codes = discrete_codes(values);
  s.mi = mi_discrete(codes, label);
  s.h_x = plugin_entropy(codes);
  s.h_y = h_y;
  const auto nmi = normalized_mi(s.mi, s.h_x, s.h_y);
  s.nmi = nmi.nmi;
  s.degenerate = nmi.degenerate;
  return s;
}

}  // namespace

std::vector<DependenceScore> score_table(const FeatureTable& table,
                                         const UnivariateOptions& options) {
  table.check();
  const std::vector<int>& label = table.label;
  const std::vector<double> label_d(label.begin(), label.end());
  const double h_y = plugin_entropy(label);

  std::vector<Task> tasks;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const Column& col = table.columns[c];
    if (col.kind == ColumnKind::kCategorical) {
      for (std::size_t l = 0; l < col.levels.size(); ++l) {
        tasks.push_back({col.name + "=" + col.levels[l], c, ColumnKind::kOrdinal, static_cast<int>(l)});
      }
    }
    tasks.push_back({col.name, c, col.kind});
  }

  std::vector<DependenceScore> out(tasks.size());
  parallel_for(tasks.size(), options.workers, [&](std::size_t i) {
    const Task& t = tasks[i];
    const Column& col = table.columns[t.column];
    DependenceScore s;
    if (t.level >= 0) {
      std::vector<double> indicator(col.values.size());
      for (std::size_t r = 0; r < indicator.size(); ++r) {
        indicator[r] = col.values[r] == static_cast<double>(t.level) ? 1.0 : 0.0;
      }
      s = score_discrete(t, indicator, label, label_d, h_y, true);
    } else if (col.kind != ColumnKind::kNumeric) {
      s = score_discrete(t, col.values, label, label_d, h_y, col.kind == ColumnKind::kOrdinal);
    } else {
      s.feature = t.feature;
      s.kind = t.kind;
      s.n_effective = col.values.size();
      s.tau_b = kendall_tau_b(col.values, label_d);
      MiOptions mi_opts = options.mi;
      mi_opts.seed = derive_seed(options.mi.seed, t.column);
      const MiEstimate mi = mi_mixed(col.values, label, mi_opts);
      s.mi = mi.mi;
      s.zero_distance_points = mi.zero_distance_points;
      const EntropyEstimate h = entropy_knn(col.values, options.mi.k, true, mi_opts.seed);
      s.entropy_clamped = h.entropy < 0.0;
      s.h_x = std::max(0.0, h.entropy);
      s.h_y = h_y;
      const auto nmi = normalized_mi(s.mi, s.h_x, s.h_y);
      s.nmi = nmi.nmi;
      s.degenerate = nmi.degenerate;
    }
    s.source_column = col.name;
    out[i] = std::move(s);
  });
  return out;
}

}  // namespace detfactors
