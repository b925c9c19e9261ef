#include "detfactors/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "detfactors/errors.h"
#include "detfactors/version.h"
#include "json.hpp"

namespace detfactors {

using json = nlohmann::json;

std::string_view version() { return kVersionString; }

namespace {

constexpr const char* kAnalysisSchema = "detfactors.analysis";
constexpr int kAnalysisVersion = 1;

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json params_json(const ForestParams& p) {
  return json{{"n_trees", p.n_trees},
              {"max_depth", p.max_depth ? json(*p.max_depth) : json(nullptr)},
              {"min_samples_leaf", p.min_samples_leaf},
              {"features_per_split", p.features_per_split.to_string()},
              {"class_weighting", p.class_weighting},
              {"bootstrap", p.bootstrap}};
}

json table_json(const TableAnalysis& t) {
  json j;
  j["name"] = t.name;
  j["rows"] = t.rows;
  j["positives"] = t.positives;
  j["dropped_rows"] = t.dropped_rows;
  j["columns"] = t.columns;
  json uni = json::array();
  for (const DependenceScore& s : t.univariate) {
    uni.push_back({{"feature", s.feature},
                   {"source_column", s.source_column},
                   {"kind", std::string(to_string(s.kind))},
                   {"tau_b", opt(s.tau_b)},
                   {"mi", s.mi},
                   {"nmi", s.nmi},
                   {"h_x", s.h_x},
                   {"h_y", s.h_y},
                   {"entropy_clamped", s.entropy_clamped},
                   {"degenerate", s.degenerate},
                   {"zero_distance_points", s.zero_distance_points},
                   {"n", s.n_effective}});
  }
  j["univariate"] = std::move(uni);
  if (!t.metamodel) {
    j["metamodel"] = nullptr;
    return j;
  }
  json grid = json::array();
  for (const GridPointScore& g : t.grid.scores) {
    grid.push_back({{"params", params_json(g.params)}, {"cv_f1", g.cv_f1}, {"fold_f1", g.fold_f1}});
  }
  json imp = json::array();
  for (const FeatureImportance& f : t.shapley.ranked) {
    imp.push_back({{"feature", f.feature}, {"mean_abs", f.mean_abs}});
  }
  json encodings = json::array();
  for (const EncodingMap& e : t.model.encodings) {
    encodings.push_back({{"column", e.column},
                         {"levels", e.levels},
                         {"values", e.values},
                         {"fallback", e.fallback},
                         {"lambda", std::isfinite(e.lambda) ? json(e.lambda) : json("inf")}});
  }
  std::size_t attributed = 0;
  for (double w : t.shapley.row_weights) attributed += static_cast<std::size_t>(w);
  j["metamodel"] = {
      {"cv_f1", t.grid.cv_f1},
      {"cv_positive_class", kErrorClass},
      {"selected", params_json(t.grid.best)},
      {"grid", std::move(grid)},
      {"encodings", std::move(encodings)},
      {"shapley",
       {{"background_rows", t.shapley.background_rows},
        {"conditional_k", t.shapley.conditional_k},
        {"distinct_rows_attributed", t.shapley.attributions.size()},
        {"rows_attributed", attributed},
        {"importances", std::move(imp)}}}};
  return j;
}

}  // namespace

void write_analysis(std::ostream& out, const DetectorAnalysis& a, const RunInfo& run) {
  json doc;
  doc["schema"] = kAnalysisSchema;
  doc["version"] = kAnalysisVersion;
  doc["tool_version"] = std::string(version());
  doc["config_fingerprint"] = run.fingerprint;
  doc["seed"] = run.seed;
  doc["detector"] = a.detector;
  doc["match"] = {{"radius", a.radius},       {"threshold", a.threshold},
                  {"tp", a.summary.tp},       {"fp", a.summary.fp},
                  {"fn", a.summary.fn},       {"precision", a.summary.precision},
                  {"recall", a.summary.recall}, {"f1", a.summary.f1}};
  doc["tables"] = json::array({table_json(a.fn), table_json(a.fp)});
  out << doc.dump(1) << '\n';
}

void save_analysis(const std::filesystem::path& path, const DetectorAnalysis& a, const RunInfo& run) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_analysis(out, a, run);
}

AnalysisArtifact parse_analysis(std::istream& in, const std::string& source) {
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError(source, 0, e.what());
  }
  try {
    if (doc.at("schema").get<std::string>() != kAnalysisSchema) {
      throw ParseError(source, 0, "not an analysis artifact");
    }
    if (doc.at("version").get<int>() != kAnalysisVersion) {
      throw ParseError(source, 0, "unsupported analysis version " + doc.at("version").dump());
    }
    AnalysisArtifact a;
    a.detector = doc.at("detector").get<std::string>();
    a.fingerprint = doc.at("config_fingerprint").get<std::string>();
    a.seed = doc.at("seed").get<std::uint64_t>();
    const json& m = doc.at("match");
    a.summary = make_summary(m.at("tp").get<std::size_t>(), m.at("fp").get<std::size_t>(),
                             m.at("fn").get<std::size_t>(), m.at("threshold").get<double>());
    for (const json& t : doc.at("tables")) {
      ArtifactTable at;
      at.name = t.at("name").get<std::string>();
      std::map<std::string, std::size_t> index;
      const auto row = [&](const std::string& feature) -> FeatureMetrics& {
        auto [it, inserted] = index.emplace(feature, at.features.size());
        if (inserted) at.features.push_back({feature, {}, {}, {}});
        return at.features[it->second];
      };
      for (const json& u : t.at("univariate")) {
        FeatureMetrics& f = row(u.at("feature").get<std::string>());
        if (!u.at("tau_b").is_null()) f.tau_b = u.at("tau_b").get<double>();
        f.nmi = u.at("nmi").get<double>();
      }
      const json& mm = t.at("metamodel");
      if (!mm.is_null()) {
        for (const json& imp : mm.at("shapley").at("importances")) {
          row(imp.at("feature").get<std::string>()).mean_abs_shapley = imp.at("mean_abs").get<double>();
        }
      }
      a.tables.push_back(std::move(at));
    }
    return a;
  } catch (const json::exception& e) {
    throw ParseError(source, 0, e.what());
  }
}

AnalysisArtifact load_analysis(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return parse_analysis(in, path.string());
}

namespace {

std::optional<double> metric_of(const FeatureMetrics& f, std::string_view metric) {
  if (metric == "tau_b") return f.tau_b;
  if (metric == "nmi") return f.nmi;
  return f.mean_abs_shapley;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<PlotData> build_plot_data(std::vector<AnalysisArtifact> artifacts) {
  std::sort(artifacts.begin(), artifacts.end(),
            [](const auto& a, const auto& b) { return a.detector < b.detector; });
  for (std::size_t i = 1; i < artifacts.size(); ++i) {
    if (artifacts[i].detector == artifacts[i - 1].detector) {
      throw ContractError("two analysis artifacts for detector '" + artifacts[i].detector + "'");
    }
  }
  std::vector<std::string> tables;
  for (const auto& a : artifacts) {
    for (const auto& t : a.tables) {
      if (std::find(tables.begin(), tables.end(), t.name) == tables.end()) tables.push_back(t.name);
    }
  }
  std::vector<PlotData> out;
  for (const std::string& table : tables) {
    for (std::string_view metric : kPlotMetrics) {
      PlotData p;
      p.table = table;
      p.metric = std::string(metric);
      for (const auto& a : artifacts) {
        p.detectors.push_back(a.detector);
        for (const auto& t : a.tables) {
          if (t.name != table) continue;
          for (const auto& f : t.features) {
            if (metric_of(f, metric) &&
                std::find(p.features.begin(), p.features.end(), f.feature) == p.features.end()) {
              p.features.push_back(f.feature);
            }
          }
        }
      }
      if (p.features.empty()) continue;
      for (const auto& a : artifacts) {
        std::vector<std::optional<double>> series(p.features.size());
        for (const auto& t : a.tables) {
          if (t.name != table) continue;
          for (const auto& f : t.features) {
            auto it = std::find(p.features.begin(), p.features.end(), f.feature);
            if (it != p.features.end()) series[it - p.features.begin()] = metric_of(f, metric);
          }
        }
        p.values.push_back(std::move(series));
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

void write_plot_tsv(std::ostream& out, const PlotData& plot) {
  out << "# detfactors plot data v1 table=" << plot.table << " metric=" << plot.metric << '\n';
  out << "feature";
  for (const auto& d : plot.detectors) out << '\t' << d;
  out << '\n';
  for (std::size_t i = 0; i < plot.features.size(); ++i) {
    out << plot.features[i];
    for (const auto& s : plot.values) out << '\t' << (s[i] ? fmt(*s[i]) : std::string("NA"));
    out << '\n';
  }
}

void write_svg_chart(std::ostream& out, const PlotData& plot) {
  static constexpr std::array<const char*, 8> kColors = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                                         "#59a14f", "#edc948", "#b07aa1", "#9c755f"};
  const std::size_t nf = plot.features.size();
  const std::size_t nd = std::max<std::size_t>(plot.detectors.size(), 1);
  const double group = std::max(28.0, 12.0 * static_cast<double>(nd) + 12.0);
  const double left = 70, top = 50, plot_h = 260, bottom_pad = 170;
  const double width = left + group * static_cast<double>(nf) + 160;
  const double height = top + plot_h + bottom_pad;

  double lo = 0, hi = 0;
  for (const auto& s : plot.values) {
    for (const auto& v : s) {
      if (!v) continue;
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
  }
  if (hi - lo <= 0) hi = lo + 1;
  const auto ypos = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width) << "\" height=\""
      << fixed(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << fixed(left) << "\" y=\"24\" font-size=\"14\">" << xml_escape(plot.table)
      << ": " << xml_escape(plot.metric) << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    const double y = ypos(v);
    out << "<line x1=\"" << fixed(left - 4) << "\" y1=\"" << fixed(y) << "\" x2=\""
        << fixed(left + group * static_cast<double>(nf)) << "\" y2=\"" << fixed(y)
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << fixed(left - 8) << "\" y=\"" << fixed(y + 4) << "\" text-anchor=\"end\">"
        << fmt(std::round(v * 1000) / 1000) << "</text>\n";
  }
  const double zero = ypos(0);
  for (std::size_t i = 0; i < nf; ++i) {
    const double gx = left + group * static_cast<double>(i);
    const double bar = (group - 8) / static_cast<double>(nd);
    for (std::size_t d = 0; d < plot.values.size(); ++d) {
      const auto& v = plot.values[d][i];
      if (!v) continue;
      const double y = std::min(ypos(*v), zero);
      const double h = std::abs(ypos(*v) - zero);
      out << "<rect x=\"" << fixed(gx + 4 + bar * static_cast<double>(d)) << "\" y=\"" << fixed(y)
          << "\" width=\"" << fixed(bar) << "\" height=\"" << fixed(h) << "\" fill=\""
          << kColors[d % kColors.size()] << "\"/>\n";
    }
    const double lx = gx + group / 2;
    const double ly = top + plot_h + 12;
    out << "<text x=\"" << fixed(lx) << "\" y=\"" << fixed(ly) << "\" text-anchor=\"end\" transform=\"rotate(-50 "
        << fixed(lx) << ' ' << fixed(ly) << ")\">" << xml_escape(plot.features[i]) << "</text>\n";
  }
  out << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(zero) << "\" x2=\""
      << fixed(left + group * static_cast<double>(nf)) << "\" y2=\"" << fixed(zero)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top) << "\" x2=\"" << fixed(left)
      << "\" y2=\"" << fixed(top + plot_h) << "\" stroke=\"black\"/>\n";
  const double legend_x = left + group * static_cast<double>(nf) + 16;
  for (std::size_t d = 0; d < plot.detectors.size(); ++d) {
    const double y = top + 16.0 * static_cast<double>(d);
    out << "<rect x=\"" << fixed(legend_x) << "\" y=\"" << fixed(y) << "\" width=\"10\" height=\"10\" fill=\""
        << kColors[d % kColors.size()] << "\"/>\n";
    out << "<text x=\"" << fixed(legend_x + 14) << "\" y=\"" << fixed(y + 9) << "\">"
        << xml_escape(plot.detectors[d]) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_summary(std::ostream& out, const std::vector<AnalysisArtifact>& input, int top) {
  std::vector<AnalysisArtifact> artifacts = input;
  std::sort(artifacts.begin(), artifacts.end(),
            [](const auto& a, const auto& b) { return a.detector < b.detector; });
  out << "detfactors " << version() << " report\n";
  for (const auto& a : artifacts) {
    const MatchSummary& s = a.summary;
    out << "\ndetector " << a.detector << " (config " << a.fingerprint.substr(0, 12) << ", seed "
        << a.seed << ")\n";
    out << "  threshold " << fmt(s.threshold) << ": TP " << s.tp << ", FP " << s.fp << ", FN " << s.fn
        << ", precision " << fmt(s.precision) << ", recall " << fmt(s.recall) << ", F1 " << fmt(s.f1)
        << '\n';
    for (const auto& t : a.tables) {
      out << "  " << t.name << " analysis\n";
      for (std::string_view metric : kPlotMetrics) {
        std::vector<std::pair<double, std::string>> ranked;
        for (const auto& f : t.features) {
          if (auto v = metric_of(f, metric)) ranked.emplace_back(*v, f.feature);
        }
        if (ranked.empty()) continue;
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
          return std::abs(x.first) > std::abs(y.first);
        });
        out << "    " << metric << ':';
        for (int i = 0; i < top && i < static_cast<int>(ranked.size()); ++i) {
          out << ' ' << ranked[i].second << '=' << fmt(ranked[i].first);
        }
        out << '\n';
      }
    }
  }
}

std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir,
                                                const std::vector<AnalysisArtifact>& artifacts,
                                                bool charts) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto open = [&](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    written.push_back(p);
    return out;
  };
  for (const PlotData& p : build_plot_data(artifacts)) {
    const std::string stem = p.table + "_" + p.metric;
    {
      auto out = open(dir / (stem + ".tsv"));
      write_plot_tsv(out, p);
    }
    if (charts) {
      auto out = open(dir / (stem + ".svg"));
      write_svg_chart(out, p);
    }
  }
  auto out = open(dir / "summary.txt");
  write_summary(out, artifacts);
  return written;
}

}  // namespace detfactors
