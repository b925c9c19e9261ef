#include "detfactors/metamodel.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <charconv>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>

#include "detfactors/errors.h"
#include "detfactors/parallel.h"
#include "json.hpp"

namespace detfactors {

using json = nlohmann::json;

int FeaturesPerSplit::resolve(int p) const {
  if (p <= 0) throw ContractError("features_per_split: no features");
  int m = p;
  switch (rule) {
    case Rule::kSqrt:
      m = static_cast<int>(std::floor(std::sqrt(static_cast<double>(p))));
      break;
    case Rule::kThird:
      m = p / 3;
      break;
    case Rule::kAll:
      m = p;
      break;
    case Rule::kFixed:
      m = fixed;
      break;
  }
  return std::clamp(m, 1, p);
}

std::string FeaturesPerSplit::to_string() const {
  switch (rule) {
    case Rule::kSqrt:
      return "sqrt";
    case Rule::kThird:
      return "third";
    case Rule::kAll:
      return "all";
    case Rule::kFixed:
      return std::to_string(fixed);
  }
  return "sqrt";
}

FeaturesPerSplit FeaturesPerSplit::parse(std::string_view s) {
  FeaturesPerSplit f;
  if (s == "sqrt") return f;
  if (s == "third") {
    f.rule = Rule::kThird;
    return f;
  }
  if (s == "all") {
    f.rule = Rule::kAll;
    return f;
  }
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
    throw ConfigError("features_per_split must be sqrt, third, all or a positive integer, got '" +
                      std::string(s) + "'");
  }
  f.rule = Rule::kFixed;
  f.fixed = v;
  return f;
}

std::string to_string(const ForestParams& p) {
  return "n_trees=" + std::to_string(p.n_trees) +
         " max_depth=" + (p.max_depth ? std::to_string(*p.max_depth) : std::string("none")) +
         " min_samples_leaf=" + std::to_string(p.min_samples_leaf) +
         " features_per_split=" + p.features_per_split.to_string() +
         " class_weighting=" + (p.class_weighting ? "true" : "false") +
         " bootstrap=" + (p.bootstrap ? "true" : "false");
}

double Tree::predict(std::span<const double> row) const {
  int i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[i].class_prob[1];
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  // Children always follow their parent in the node list.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[nodes[i].left] = d[i] + 1;
    d[nodes[i].right] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

namespace {

// Column-major copy of a matrix with each feature's rows sorted by value.
struct Presorted {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> xc;           // xc[f * n + r]
  std::vector<std::uint32_t> order;  // order[f * n + k]
};

Presorted presort(const Matrix& x) {
  Presorted s;
  s.n = x.rows;
  s.p = x.cols;
  s.xc.resize(s.n * s.p);
  s.order.resize(s.n * s.p);
  for (std::size_t r = 0; r < s.n; ++r) {
    for (std::size_t f = 0; f < s.p; ++f) s.xc[f * s.n + r] = x.at(r, f);
  }
  for (std::size_t f = 0; f < s.p; ++f) {
    auto* ord = s.order.data() + f * s.n;
    const double* col = s.xc.data() + f * s.n;
    std::iota(ord, ord + s.n, 0u);
    std::sort(ord, ord + s.n, [col](std::uint32_t a, std::uint32_t b) {
      return col[a] < col[b] || (col[a] == col[b] && a < b);
    });
  }
  return s;
}

struct Work {
  int node;
  std::size_t begin;
  std::size_t end;
  int depth;
};

Tree grow_tree(const Presorted& ps, std::span<const int> y, std::span<const double> counts,
               std::array<double, 2> class_weight, const TreeParams& params,
               std::mt19937_64& rng) {
  const std::size_t n = ps.n;
  const std::size_t p = ps.p;
  if (y.size() != n || counts.size() != n) throw ContractError("fit_tree: size mismatch");
  if (params.min_samples_leaf < 1) throw ContractError("fit_tree: min_samples_leaf must be >= 1");
  if (params.max_depth && *params.max_depth < 0) throw ContractError("fit_tree: negative max_depth");
  if (p == 0) throw ContractError("fit_tree: no features");
  const int mtry = std::clamp(params.features_per_split, 1, static_cast<int>(p));

  std::vector<double> w(n, 0.0);
  std::size_t m = 0;
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (counts[r] < 0 || !std::isfinite(counts[r])) throw ContractError("fit_tree: bad sample count");
    if (y[r] != 0 && y[r] != 1) throw ContractError("fit_tree: labels must be 0 or 1");
    if (counts[r] > 0) {
      w[r] = counts[r] * class_weight[y[r]];
      ++m;
      total += counts[r];
    }
  }
  if (m == 0) throw ContractError("fit_tree: no rows with a positive count");

  // Active rows per feature in value order.
  std::vector<std::uint32_t> ord(m * p);
  for (std::size_t f = 0; f < p; ++f) {
    const auto* src = ps.order.data() + f * n;
    auto* dst = ord.data() + f * m;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[src[i]] > 0) dst[k++] = src[i];
    }
  }

  Tree tree;
  tree.nodes.emplace_back();
  std::vector<Work> stack{{0, 0, m, 0}};
  std::vector<char> left_side(n, 0);
  std::vector<std::uint32_t> buf(m);
  std::vector<int> features(p);

  while (!stack.empty()) {
    const Work wk = stack.back();
    stack.pop_back();
    const std::uint32_t* rows0 = ord.data() + wk.begin;

    double w0 = 0, w1 = 0, cnt = 0;
    for (std::size_t i = 0; i < wk.end - wk.begin; ++i) {
      const std::uint32_t r = rows0[i];
      (y[r] == 1 ? w1 : w0) += w[r];
      cnt += counts[r];
    }
    const double wt = w0 + w1;
    TreeNode& node = tree.nodes[wk.node];
    node.class_prob = wt > 0 ? std::array<double, 2>{w0 / wt, w1 / wt}
                             : std::array<double, 2>{0.5, 0.5};
    if (wt > 0) node.class_prob[0] = 1.0 - node.class_prob[1];

    const bool depth_limited = params.max_depth && wk.depth >= *params.max_depth;
    if (depth_limited || cnt < 2.0 * params.min_samples_leaf || w0 == 0 || w1 == 0) continue;

    int n_feat = static_cast<int>(p);
    std::iota(features.begin(), features.end(), 0);
    if (mtry < static_cast<int>(p)) {
      for (int i = 0; i < mtry; ++i) {
        std::uniform_int_distribution<int> pick(i, static_cast<int>(p) - 1);
        std::swap(features[i], features[pick(rng)]);
      }
      n_feat = mtry;
      std::sort(features.begin(), features.begin() + n_feat);
    }

    const double parent = (w0 * w0 + w1 * w1) / wt;
    const double tol = 1e-12 * parent;
    double best = parent;
    int best_f = -1;
    std::size_t best_pos = 0;
    double best_thr = 0;
    const double msl = params.min_samples_leaf;

    for (int fi = 0; fi < n_feat; ++fi) {
      const int f = features[fi];
      const std::uint32_t* rows = ord.data() + f * m + wk.begin;
      const double* col = ps.xc.data() + static_cast<std::size_t>(f) * n;
      const std::size_t len = wk.end - wk.begin;
      if (col[rows[0]] == col[rows[len - 1]]) continue;
      double l0 = 0, l1 = 0, lc = 0;
      for (std::size_t i = 0; i + 1 < len; ++i) {
        const std::uint32_t r = rows[i];
        (y[r] == 1 ? l1 : l0) += w[r];
        lc += counts[r];
        const double a = col[r];
        const double b = col[rows[i + 1]];
        if (!(b > a)) continue;
        if (lc < msl) continue;
        if (cnt - lc < msl) break;
        const double wl = l0 + l1;
        const double r0 = w0 - l0;
        const double r1 = w1 - l1;
        const double wr = r0 + r1;
        if (wl <= 0 || wr <= 0) continue;
        const double proxy = (l0 * l0 + l1 * l1) / wl + (r0 * r0 + r1 * r1) / wr;
        if (proxy > best + tol) {
          best = proxy;
          best_f = f;
          best_pos = i;
          double mid = a + (b - a) * 0.5;
          if (!(mid < b)) mid = a;
          best_thr = mid;
        }
      }
    }
    if (best_f < 0) continue;

    const std::size_t len = wk.end - wk.begin;
    const std::size_t n_left = best_pos + 1;
    {
      const std::uint32_t* rows = ord.data() + best_f * m + wk.begin;
      for (std::size_t i = 0; i < len; ++i) left_side[rows[i]] = i < n_left ? 1 : 0;
    }
    for (std::size_t f = 0; f < p; ++f) {
      std::uint32_t* rows = ord.data() + f * m + wk.begin;
      std::size_t li = 0, ri = n_left;
      for (std::size_t i = 0; i < len; ++i) {
        const std::uint32_t r = rows[i];
        if (left_side[r]) {
          buf[li++] = r;
        } else {
          buf[ri++] = r;
        }
      }
      std::copy(buf.begin(), buf.begin() + len, rows);
    }

    const int left = static_cast<int>(tree.nodes.size());
    const int right = left + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& split = tree.nodes[wk.node];
    split.feature = best_f;
    split.threshold = best_thr;
    split.left = left;
    split.right = right;
    stack.push_back({right, wk.begin + n_left, wk.end, wk.depth + 1});
    stack.push_back({left, wk.begin, wk.begin + n_left, wk.depth + 1});
  }
  return tree;
}

}  // namespace

Tree fit_tree(const Matrix& x, std::span<const int> y, std::span<const double> counts,
              std::array<double, 2> class_weight, const TreeParams& params, std::mt19937_64& rng) {
  return grow_tree(presort(x), y, counts, class_weight, params, rng);
}

double ForestModel::predict_proba(std::span<const double> encoded_row) const {
  if (trees.empty()) throw ContractError("predict_proba: empty forest");
  if (encoded_row.size() != feature_names.size()) {
    throw ContractError("predict_proba: row has " + std::to_string(encoded_row.size()) +
                        " features, model expects " + std::to_string(feature_names.size()));
  }
  double s = 0.0;
  for (const Tree& t : trees) s += t.predict(encoded_row);
  return std::clamp(s / static_cast<double>(trees.size()), 0.0, 1.0);
}

double predict_proba(const ForestModel& model, std::span<const double> encoded_row) {
  return model.predict_proba(encoded_row);
}

std::vector<bool> ForestModel::used_features() const {
  std::vector<bool> used(feature_names.size(), false);
  for (const Tree& t : trees) {
    for (const TreeNode& n : t.nodes) {
      if (!n.is_leaf()) used[n.feature] = true;
    }
  }
  return used;
}

Matrix ForestModel::encode(const FeatureTable& table) const {
  if (table.names() != feature_names) {
    throw ContractError("table schema does not match the model's training schema");
  }
  return encode_with_maps(table, encodings);
}

std::array<double, 2> balanced_class_weights(std::span<const int> y) {
  std::array<double, 2> n_c{0, 0};
  for (int v : y) {
    if (v != 0 && v != 1) throw ContractError("labels must be 0 or 1");
    n_c[v] += 1;
  }
  const double n = static_cast<double>(y.size());
  std::array<double, 2> w{1.0, 1.0};
  for (int c = 0; c < 2; ++c) {
    if (n_c[c] > 0) w[c] = n / (2.0 * n_c[c]);
  }
  return w;
}

namespace {

void check_params(const ForestParams& params) {
  if (params.n_trees < 1) throw ContractError("n_trees must be >= 1");
  if (params.min_samples_leaf < 1) throw ContractError("min_samples_leaf must be >= 1");
  if (params.max_depth && *params.max_depth < 0) throw ContractError("max_depth must be >= 0");
}

ForestModel train_presorted(const Presorted& ps, std::span<const int> y,
                            std::vector<std::string> feature_names, const ForestParams& params,
                            std::uint64_t seed, int workers) {
  check_params(params);
  const std::array<double, 2> cw =
      params.class_weighting ? balanced_class_weights(y) : std::array<double, 2>{1.0, 1.0};
  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_samples_leaf = params.min_samples_leaf;
  tp.features_per_split = params.features_per_split.resolve(static_cast<int>(ps.p));

  ForestModel model;
  model.trees.resize(params.n_trees);
  model.feature_names = std::move(feature_names);
  model.params = params;
  model.seed = seed;
  const std::size_t n = ps.n;
  parallel_for(model.trees.size(), workers, [&](std::size_t t) {
    std::mt19937_64 rng(derive_seed(seed, t));
    std::vector<double> counts(n, 1.0);
    if (params.bootstrap) {
      std::fill(counts.begin(), counts.end(), 0.0);
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (std::size_t i = 0; i < n; ++i) counts[draw(rng)] += 1.0;
    }
    model.trees[t] = grow_tree(ps, y, counts, cw, tp, rng);
  });
  return model;
}

}  // namespace

ForestModel train_forest(const Matrix& x, std::span<const int> y,
                         std::vector<std::string> feature_names, const ForestParams& params,
                         std::uint64_t seed, int workers) {
  if (x.rows != y.size()) throw ContractError("train_forest: label count differs from rows");
  if (x.rows == 0) throw ContractError("train_forest: empty training set");
  if (feature_names.size() != x.cols) throw ContractError("train_forest: feature name count");
  return train_presorted(presort(x), y, std::move(feature_names), params, seed, workers);
}

Matrix encode_with_maps(const FeatureTable& table, std::span<const EncodingMap> encodings) {
  Matrix m(table.rows(), table.columns.size());
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    const Column& c = table.columns[j];
    std::vector<double> encoded;
    const std::vector<double>* values = &c.values;
    if (c.kind == ColumnKind::kCategorical) {
      auto it = std::find_if(encodings.begin(), encodings.end(),
                             [&](const EncodingMap& e) { return e.column == c.name; });
      if (it == encodings.end()) throw ContractError("no encoding for categorical column '" + c.name + "'");
      encoded = apply_glmm(c, *it);
      values = &encoded;
    }
    for (std::size_t r = 0; r < table.rows(); ++r) m.at(r, j) = (*values)[r];
  }
  return m;
}

Matrix encode_with_glmm(const FeatureTable& table, std::span<const std::size_t> fit_rows,
                        std::vector<EncodingMap>* encodings_out) {
  std::vector<EncodingMap> maps;
  for (const Column& c : table.columns) {
    if (c.kind == ColumnKind::kCategorical) maps.push_back(fit_glmm_encoding(table, c.name, fit_rows));
  }
  Matrix m = encode_with_maps(table, maps);
  if (encodings_out) *encodings_out = std::move(maps);
  return m;
}

ForestModel fit_forest(const FeatureTable& table, const ForestParams& params, std::uint64_t seed,
                       int workers) {
  table.check();
  std::vector<EncodingMap> maps;
  Matrix x = encode_with_glmm(table, {}, &maps);
  ForestModel model = train_forest(x, table.label, table.names(), params, seed, workers);
  model.encodings = std::move(maps);
  return model;
}

double f1_score(std::span<const int> truth, std::span<const int> predicted, int positive) {
  if (truth.size() != predicted.size()) throw ContractError("f1_score: size mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == positive;
    const bool p = predicted[i] == positive;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

std::vector<std::size_t> canonical_row_order(const FeatureTable& table) {
  std::vector<std::size_t> idx(table.rows());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (table.label[a] != table.label[b]) return table.label[a] < table.label[b];
    for (const Column& c : table.columns) {
      const double va = c.values[a];
      const double vb = c.values[b];
      if (va != vb) return va < vb;
    }
    return false;
  });
  return idx;
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> y, int folds,
                                                       std::uint64_t seed) {
  if (folds < 2) throw ContractError("cross-validation needs at least 2 folds");
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw ContractError("labels must be 0 or 1");
    members[y[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (members[c].size() < static_cast<std::size_t>(folds)) {
      throw StratificationError("class " + std::to_string(c) + " has " +
                                std::to_string(members[c].size()) + " rows, fewer than " +
                                std::to_string(folds) + " folds");
    }
  }
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t deal = 0;
  for (int c = 0; c < 2; ++c) {
    auto& v = members[c];
    std::mt19937_64 rng(derive_seed(seed, 0x5f01d, c));
    for (std::size_t i = v.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(v[i - 1], v[pick(rng)]);
    }
    for (std::size_t r : v) out[deal++ % folds].push_back(r);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

namespace {

struct PreparedFold {
  std::vector<std::size_t> validation_rows;
  std::vector<EncodingMap> encodings;
  Presorted train;
  std::vector<int> train_y;
  Matrix validation;
  std::vector<int> validation_y;
};

struct PreparedCv {
  FeatureTable canonical;
  std::vector<std::string> names;
  std::vector<PreparedFold> folds;
};

PreparedCv prepare_cv(const FeatureTable& table, const CvOptions& options) {
  table.check();
  PreparedCv cv;
  const auto order = canonical_row_order(table);
  cv.canonical = table.subset(order);
  cv.names = cv.canonical.names();
  const auto folds = stratified_folds(cv.canonical.label, options.folds, options.seed);
  const std::size_t n = cv.canonical.rows();
  cv.folds.resize(folds.size());
  parallel_for(folds.size(), options.workers, [&](std::size_t k) {
    PreparedFold& pf = cv.folds[k];
    pf.validation_rows = folds[k];
    std::vector<char> in_val(n, 0);
    for (std::size_t r : folds[k]) in_val[r] = 1;
    std::vector<std::size_t> train_rows;
    train_rows.reserve(n - folds[k].size());
    for (std::size_t r = 0; r < n; ++r) {
      if (!in_val[r]) train_rows.push_back(r);
    }
    Matrix all = encode_with_glmm(cv.canonical, train_rows, &pf.encodings);
    Matrix tr(train_rows.size(), all.cols);
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      std::copy_n(all.row(train_rows[i]).begin(), all.cols, tr.row(i).begin());
      pf.train_y.push_back(cv.canonical.label[train_rows[i]]);
    }
    pf.train = presort(tr);
    pf.validation = Matrix(folds[k].size(), all.cols);
    for (std::size_t i = 0; i < folds[k].size(); ++i) {
      std::copy_n(all.row(folds[k][i]).begin(), all.cols, pf.validation.row(i).begin());
      pf.validation_y.push_back(cv.canonical.label[folds[k][i]]);
    }
  });
  return cv;
}

double evaluate_fold(const PreparedCv& cv, std::size_t k, const ForestParams& params,
                     std::uint64_t seed) {
  const PreparedFold& pf = cv.folds[k];
  ForestModel model = train_presorted(pf.train, pf.train_y, cv.names, params, derive_seed(seed, 0xcf, k), 1);
  std::vector<int> pred(pf.validation.rows);
  for (std::size_t i = 0; i < pf.validation.rows; ++i) {
    pred[i] = model.predict_proba(pf.validation.row(i)) >= 0.5 ? 1 : 0;
  }
  return f1_score(pf.validation_y, pred, kErrorClass);
}

// Grid points with identical effective settings for p features.
using ResolvedKey = std::tuple<int, int, int, int, bool, bool>;

ResolvedKey resolved_key(const ForestParams& g, int p) {
  return {g.n_trees, g.max_depth ? *g.max_depth : -1, g.min_samples_leaf,
          g.features_per_split.resolve(p), g.class_weighting, g.bootstrap};
}

}  // namespace

CvResult cross_validate(const FeatureTable& table, const ForestParams& params,
                        const CvOptions& options) {
  check_params(params);
  PreparedCv cv = prepare_cv(table, options);
  CvResult out;
  out.folds.resize(cv.folds.size());
  parallel_for(cv.folds.size(), options.workers, [&](std::size_t k) {
    out.folds[k].f1 = evaluate_fold(cv, k, params, options.seed);
  });
  double sum = 0.0;
  for (std::size_t k = 0; k < cv.folds.size(); ++k) {
    out.folds[k].validation_rows = cv.folds[k].validation_rows;
    out.folds[k].encodings = cv.folds[k].encodings;
    sum += out.folds[k].f1;
  }
  out.mean_f1 = sum / static_cast<double>(cv.folds.size());
  out.canonical = std::move(cv.canonical);
  return out;
}

GridSearchResult grid_search(const FeatureTable& table, std::span<const ForestParams> grid,
                             const CvOptions& options) {
  if (grid.empty()) throw ContractError("grid_search: empty grid");
  for (const auto& g : grid) check_params(g);
  PreparedCv cv = prepare_cv(table, options);
  const int p = static_cast<int>(cv.names.size());

  std::vector<std::size_t> unique_of(grid.size());
  std::vector<std::size_t> unique_points;
  {
    std::map<ResolvedKey, std::size_t> seen;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      auto [it, inserted] = seen.emplace(resolved_key(grid[i], p), unique_points.size());
      if (inserted) unique_points.push_back(i);
      unique_of[i] = it->second;
    }
  }

  const std::size_t n_folds = cv.folds.size();
  std::vector<double> f1(unique_points.size() * n_folds, 0.0);
  parallel_for(f1.size(), options.workers, [&](std::size_t task) {
    const std::size_t u = task / n_folds;
    const std::size_t k = task % n_folds;
    f1[task] = evaluate_fold(cv, k, grid[unique_points[u]], options.seed);
  });

  GridSearchResult result;
  result.scores.resize(grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    GridPointScore& s = result.scores[i];
    s.params = grid[i];
    const std::size_t u = unique_of[i];
    s.fold_f1.assign(f1.begin() + u * n_folds, f1.begin() + (u + 1) * n_folds);
    s.cv_f1 = std::accumulate(s.fold_f1.begin(), s.fold_f1.end(), 0.0) / static_cast<double>(n_folds);
    if (i == 0) continue;
    const GridPointScore& b = result.scores[best];
    const auto depth = [](const ForestParams& fp) {
      return fp.max_depth ? *fp.max_depth : std::numeric_limits<int>::max();
    };
    if (s.cv_f1 > b.cv_f1 + 1e-12) {
      best = i;
    } else if (std::abs(s.cv_f1 - b.cv_f1) <= 1e-12) {
      if (std::pair(s.params.n_trees, depth(s.params)) < std::pair(b.params.n_trees, depth(b.params))) {
        best = i;
      }
    }
  }
  result.best = result.scores[best].params;
  result.cv_f1 = result.scores[best].cv_f1;
  return result;
}

std::vector<ForestParams> default_grid() {
  std::vector<ForestParams> grid;
  for (int trees : {100, 300}) {
    for (std::optional<int> depth : {std::optional<int>(8), std::optional<int>(16), std::optional<int>()}) {
      for (int leaf : {1, 5, 20}) {
        for (auto rule : {FeaturesPerSplit::Rule::kSqrt, FeaturesPerSplit::Rule::kThird}) {
          ForestParams g;
          g.n_trees = trees;
          g.max_depth = depth;
          g.min_samples_leaf = leaf;
          g.features_per_split.rule = rule;
          grid.push_back(g);
        }
      }
    }
  }
  return grid;
}

namespace {

constexpr const char* kModelSchema = "detfactors.forest";
constexpr int kModelVersion = 1;

json params_to_json(const ForestParams& p) {
  return json{{"n_trees", p.n_trees},
              {"max_depth", p.max_depth ? json(*p.max_depth) : json(nullptr)},
              {"min_samples_leaf", p.min_samples_leaf},
              {"features_per_split", p.features_per_split.to_string()},
              {"class_weighting", p.class_weighting},
              {"bootstrap", p.bootstrap}};
}

ForestParams params_from_json(const json& j) {
  ForestParams p;
  p.n_trees = j.at("n_trees").get<int>();
  if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  p.features_per_split = FeaturesPerSplit::parse(j.at("features_per_split").get<std::string>());
  p.class_weighting = j.at("class_weighting").get<bool>();
  p.bootstrap = j.at("bootstrap").get<bool>();
  return p;
}

}  // namespace

void save_model(std::ostream& out, const ForestModel& model) {
  json doc;
  doc["schema"] = kModelSchema;
  doc["version"] = kModelVersion;
  doc["features"] = model.feature_names;
  doc["params"] = params_to_json(model.params);
  doc["seed"] = model.seed;
  json enc = json::array();
  for (const EncodingMap& e : model.encodings) {
    enc.push_back({{"column", e.column},
                   {"kind", e.kind == EncodingKind::kGlmm ? "glmm" : "one_hot"},
                   {"levels", e.levels},
                   {"values", e.values},
                   {"fallback", e.fallback},
                   {"lambda", std::isfinite(e.lambda) ? json(e.lambda) : json("inf")}});
  }
  doc["encodings"] = std::move(enc);
  json trees = json::array();
  for (const Tree& t : model.trees) {
    json nodes = json::array();
    for (const TreeNode& n : t.nodes) {
      nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.class_prob[0], n.class_prob[1]}));
    }
    trees.push_back(std::move(nodes));
  }
  doc["trees"] = std::move(trees);
  out << doc.dump() << '\n';
}

ForestModel load_model(std::istream& in) {
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError("model", 0, e.what());
  }
  try {
    if (doc.at("schema").get<std::string>() != kModelSchema) {
      throw ParseError("model", 0, "unexpected schema '" + doc.at("schema").get<std::string>() + "'");
    }
    if (doc.at("version").get<int>() != kModelVersion) {
      throw ParseError("model", 0, "unsupported model version " + doc.at("version").dump());
    }
    ForestModel m;
    m.feature_names = doc.at("features").get<std::vector<std::string>>();
    m.params = params_from_json(doc.at("params"));
    m.seed = doc.at("seed").get<std::uint64_t>();
    for (const json& e : doc.at("encodings")) {
      EncodingMap map;
      map.column = e.at("column").get<std::string>();
      map.kind = e.at("kind").get<std::string>() == "glmm" ? EncodingKind::kGlmm : EncodingKind::kOneHot;
      map.levels = e.at("levels").get<std::vector<std::string>>();
      map.values = e.at("values").get<std::vector<double>>();
      map.fallback = e.at("fallback").get<double>();
      map.lambda = e.at("lambda").is_string() ? std::numeric_limits<double>::infinity()
                                              : e.at("lambda").get<double>();
      m.encodings.push_back(std::move(map));
    }
    const int p = static_cast<int>(m.feature_names.size());
    for (const json& jt : doc.at("trees")) {
      Tree t;
      for (const json& jn : jt) {
        TreeNode n;
        n.feature = jn.at(0).get<int>();
        n.threshold = jn.at(1).get<double>();
        n.left = jn.at(2).get<int>();
        n.right = jn.at(3).get<int>();
        n.class_prob = {jn.at(4).get<double>(), jn.at(5).get<double>()};
        t.nodes.push_back(n);
      }
      const int size = static_cast<int>(t.nodes.size());
      if (size == 0) throw ParseError("model", 0, "empty tree");
      for (int i = 0; i < size; ++i) {
        const TreeNode& n = t.nodes[i];
        if (n.is_leaf()) continue;
        if (n.feature >= p || n.left <= i || n.right <= i || n.left >= size || n.right >= size) {
          throw ParseError("model", 0, "malformed tree node " + std::to_string(i));
        }
      }
      m.trees.push_back(std::move(t));
    }
    if (m.trees.empty()) throw ParseError("model", 0, "model has no trees");
    return m;
  } catch (const json::exception& e) {
    throw ParseError("model", 0, e.what());
  }
}

}  // namespace detfactors
