#include "detfactors/shapley.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>

#include "detfactors/errors.h"
#include "detfactors/parallel.h"

namespace detfactors {

void validate(const ShapleyConfig& config) {
  if (config.permutations < 1) throw ConfigError("shapley permutations must be >= 1");
  if (config.conditional_k < 1) throw ConfigError("shapley conditional_k must be >= 1");
  if (config.samples < 1) throw ConfigError("shapley samples must be >= 1");
  if (config.background_size < 1) throw ConfigError("shapley background_size must be >= 1");
}

namespace {

bool row_less(const Matrix& x, std::size_t a, std::size_t b) {
  const auto ra = x.row(a);
  const auto rb = x.row(b);
  return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
}

bool row_equal(const Matrix& x, std::size_t a, std::size_t b) {
  const auto ra = x.row(a);
  const auto rb = x.row(b);
  return std::equal(ra.begin(), ra.end(), rb.begin());
}

std::vector<double> column_scale(const Matrix& m) {
  std::vector<double> scale(m.cols, 1.0);
  if (m.rows == 0) return scale;
  for (std::size_t j = 0; j < m.cols; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) mean += m.at(r, j);
    mean /= static_cast<double>(m.rows);
    double ss = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) ss += (m.at(r, j) - mean) * (m.at(r, j) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(m.rows));
    scale[j] = sd > 0 && std::isfinite(sd) ? sd : 1.0;
  }
  return scale;
}

Matrix take_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), x.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(x.row(rows[i]).begin(), x.cols, out.row(i).begin());
  }
  return out;
}

std::uint64_t row_key(std::span<const double> x) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (double v : x) {
    if (v == 0.0) v = 0.0;  // fold -0 into +0
    h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

// Partial Fisher-Yates: the first `take` entries become a uniform sample.
void sample_prefix(std::vector<std::size_t>& v, std::size_t take, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < take && i + 1 < v.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, v.size() - 1);
    std::swap(v[i], v[pick(rng)]);
  }
}

void select_nearest(std::vector<std::size_t>& idx, const std::vector<double>& d2, std::size_t k) {
  std::iota(idx.begin(), idx.end(), 0);
  const auto closer = [&](std::size_t a, std::size_t b) {
    return d2[a] < d2[b] || (d2[a] == d2[b] && a < b);
  };
  if (k < idx.size()) {
    std::nth_element(idx.begin(), idx.begin() + k, idx.end(), closer);
  }
  std::sort(idx.begin(), idx.begin() + std::min(k, idx.size()), closer);
}

}  // namespace

Background make_background(const Matrix& x, std::span<const int> y, std::size_t size,
                           std::uint64_t seed) {
  if (y.size() != x.rows) throw ContractError("make_background: label count differs from rows");
  std::vector<std::size_t> idx(x.rows);
  std::iota(idx.begin(), idx.end(), 0);
  const auto less = [&](std::size_t a, std::size_t b) {
    if (row_less(x, a, b)) return true;
    if (row_less(x, b, a)) return false;
    return y[a] < y[b];
  };
  std::sort(idx.begin(), idx.end(), less);
  idx.erase(std::unique(idx.begin(), idx.end(),
                        [&](std::size_t a, std::size_t b) { return row_equal(x, a, b) && y[a] == y[b]; }),
            idx.end());

  std::vector<std::size_t> chosen;
  if (idx.size() <= size) {
    chosen = idx;
  } else {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t r : idx) by_class[y[r] == 1 ? 1 : 0].push_back(r);
    const double total = static_cast<double>(idx.size());
    std::array<std::size_t, 2> take{};
    take[1] = static_cast<std::size_t>(
        std::llround(static_cast<double>(size) * static_cast<double>(by_class[1].size()) / total));
    take[1] = std::min(take[1], by_class[1].size());
    take[0] = std::min(size - take[1], by_class[0].size());
    for (int c = 0; c < 2; ++c) {
      std::mt19937_64 rng(derive_seed(seed, 0xbac6, c));
      auto& v = by_class[c];
      sample_prefix(v, take[c], rng);
      chosen.insert(chosen.end(), v.begin(), v.begin() + take[c]);
    }
    std::sort(chosen.begin(), chosen.end(), less);
  }
  Background bg;
  bg.rows = take_rows(x, chosen);
  bg.scale = column_scale(bg.rows);
  return bg;
}

Background make_background(const Matrix& x) {
  Background bg;
  bg.rows = x;
  bg.scale = column_scale(bg.rows);
  return bg;
}

std::vector<std::size_t> nearest_background(const Background& bg, std::span<const double> x,
                                            const std::vector<bool>& known, int k) {
  if (bg.size() == 0) throw ConfigError("conditional sampler: empty background");
  if (x.size() != bg.rows.cols || known.size() != x.size()) {
    throw ContractError("conditional sampler: row width differs from background");
  }
  const std::size_t b = bg.size();
  std::vector<std::size_t> idx(b);
  if (std::none_of(known.begin(), known.end(), [](bool v) { return v; })) {
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }
  std::vector<double> d2(b, 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!known[j]) continue;
    for (std::size_t r = 0; r < b; ++r) {
      const double d = (x[j] - bg.rows.at(r, j)) / bg.scale[j];
      d2[r] += d * d;
    }
  }
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 1)), b);
  select_nearest(idx, d2, kk);
  idx.resize(kk);
  return idx;
}

std::vector<double> conditional_sample(const std::vector<bool>& known, std::span<const double> x,
                                       const Background& bg, int k, std::mt19937_64& rng) {
  const auto pool = nearest_background(bg, x, known, k);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const auto donor = bg.rows.row(pool[pick(rng)]);
  std::vector<double> out(donor.begin(), donor.end());
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (known[j]) out[j] = x[j];
  }
  return out;
}

Attribution estimate_shapley(const PredictFn& f, std::span<const double> x, const Background& bg,
                             const ShapleyConfig& config, const std::vector<bool>& relevant) {
  validate(config);
  const std::size_t p = x.size();
  const std::size_t b = bg.size();
  if (b == 0) throw ConfigError("shapley: empty background");
  if (bg.rows.cols != p) {
    throw ContractError("shapley: row has " + std::to_string(p) + " features, background has " +
                        std::to_string(bg.rows.cols));
  }
  if (static_cast<std::size_t>(config.conditional_k) > b) {
    throw ConfigError("shapley: conditional_k " + std::to_string(config.conditional_k) +
                      " exceeds background size " + std::to_string(b));
  }
  if (!relevant.empty() && relevant.size() != p) throw ContractError("shapley: relevant mask width");
  std::vector<bool> used = relevant.empty() ? std::vector<bool>(p, true) : relevant;
  const std::size_t n_used = static_cast<std::size_t>(std::count(used.begin(), used.end(), true));

  const std::size_t k = static_cast<std::size_t>(config.conditional_k);
  const std::size_t c = static_cast<std::size_t>(config.samples);
  const double fx = f(x);
  const std::uint64_t key = row_key(x);

  Attribution out;
  out.phi.assign(p, 0.0);
  out.prediction = fx;

  std::vector<std::size_t> perm(p);
  std::vector<double> u(c);
  std::vector<double> d2(b);
  std::vector<std::size_t> idx(b);
  std::vector<bool> known(p);
  std::vector<double> completion(p);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Mean shifted by the first sample: identical predictions average exactly.
  const auto value = [&](bool conditioned) {
    double first = 0.0, s = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      std::size_t donor;
      if (conditioned) {
        donor = idx[std::min(k - 1, static_cast<std::size_t>(u[j] * static_cast<double>(k)))];
      } else {
        donor = std::min(b - 1, static_cast<std::size_t>(u[j] * static_cast<double>(b)));
      }
      const auto row = bg.rows.row(donor);
      for (std::size_t i = 0; i < p; ++i) completion[i] = known[i] ? x[i] : row[i];
      const double fj = f(completion);
      if (j == 0) {
        first = fj;
      } else {
        s += fj - first;
      }
    }
    return first + s / static_cast<double>(c);
  };

  for (int m = 0; m < config.permutations; ++m) {
    std::mt19937_64 rng(derive_seed(config.seed, key, static_cast<std::uint64_t>(m)));
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = p; i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(perm[i - 1], perm[pick(rng)]);
    }
    for (auto& v : u) v = unit(rng);

    std::fill(known.begin(), known.end(), false);
    std::fill(d2.begin(), d2.end(), 0.0);
    double prev = n_used == 0 ? fx : value(false);
    out.base_value += prev;
    std::size_t known_used = 0;
    for (std::size_t t = 0; t < p; ++t) {
      const std::size_t i = perm[t];
      known[i] = true;
      if (!used[i]) continue;
      ++known_used;
      double v;
      if (known_used == n_used) {
        v = fx;
      } else {
        const double xi = x[i];
        const double si = bg.scale[i];
        for (std::size_t r = 0; r < b; ++r) {
          const double d = (xi - bg.rows.at(r, i)) / si;
          d2[r] += d * d;
        }
        select_nearest(idx, d2, k);
        v = value(true);
      }
      out.phi[i] += v - prev;
      prev = v;
    }
  }
  const double inv = 1.0 / static_cast<double>(config.permutations);
  for (double& v : out.phi) v *= inv;
  out.base_value *= inv;
  return out;
}

Attribution estimate_shapley(const ForestModel& model, std::span<const double> x,
                             const Background& bg, const ShapleyConfig& config) {
  if (x.size() != model.feature_names.size()) {
    throw ContractError("shapley: row width differs from the model's schema");
  }
  return estimate_shapley([&model](std::span<const double> r) { return model.predict_proba(r); }, x,
                          bg, config, model.used_features());
}

ShapleyResult mean_abs_shapley(const PredictFn& f, const Matrix& x, std::span<const int> y,
                               const std::vector<std::string>& names, const ShapleyConfig& config,
                               const std::vector<bool>& relevant) {
  validate(config);
  if (names.size() != x.cols) throw ContractError("mean_abs_shapley: feature name count");
  if (x.rows == 0) throw ContractError("mean_abs_shapley: no rows");
  ShapleyResult res;
  const Background bg = make_background(x, y, config.background_size, derive_seed(config.seed, 0xb6));
  ShapleyConfig cfg = config;
  cfg.conditional_k = static_cast<int>(std::min<std::size_t>(cfg.conditional_k, bg.size()));
  res.background_rows = bg.size();
  res.conditional_k = cfg.conditional_k;

  std::vector<std::size_t> idx(x.rows);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row_less(x, a, b); });
  std::vector<std::size_t> first;
  std::vector<double> mult;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i > 0 && row_equal(x, idx[i - 1], idx[i])) {
      mult.back() += 1.0;
      continue;
    }
    first.push_back(idx[i]);
    mult.push_back(1.0);
  }
  std::vector<std::size_t> pick(first.size());
  std::iota(pick.begin(), pick.end(), 0);
  if (config.max_rows > 0 && pick.size() > config.max_rows) {
    std::mt19937_64 rng(derive_seed(config.seed, 0x5e1));
    sample_prefix(pick, config.max_rows, rng);
    pick.resize(config.max_rows);
    std::sort(pick.begin(), pick.end());
  }

  res.attributions.resize(pick.size());
  res.row_weights.resize(pick.size());
  parallel_for(pick.size(), config.workers, [&](std::size_t i) {
    const std::size_t row = first[pick[i]];
    res.attributions[i] = estimate_shapley(f, x.row(row), bg, cfg, relevant);
    res.attributions[i].row = row;
    res.row_weights[i] = mult[pick[i]];
  });

  res.mean_abs.assign(x.cols, 0.0);
  double wsum = 0.0;
  for (std::size_t i = 0; i < pick.size(); ++i) {
    wsum += res.row_weights[i];
    for (std::size_t j = 0; j < x.cols; ++j) {
      res.mean_abs[j] += res.row_weights[i] * std::abs(res.attributions[i].phi[j]);
    }
  }
  for (double& v : res.mean_abs) v /= wsum;
  std::vector<std::size_t> order(x.cols);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return res.mean_abs[a] > res.mean_abs[b]; });
  for (std::size_t j : order) res.ranked.push_back({names[j], res.mean_abs[j]});
  return res;
}

ShapleyResult mean_abs_shapley(const ForestModel& model, const FeatureTable& table,
                               const ShapleyConfig& config) {
  const Matrix x = model.encode(table);
  return mean_abs_shapley([&model](std::span<const double> r) { return model.predict_proba(r); }, x,
                          table.label, model.feature_names, config, model.used_features());
}

}  // namespace detfactors
