#include "detfactors/matching.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "detfactors/errors.h"
#include "detfactors/parallel.h"

namespace detfactors {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kTP:
      return "TP";
    case Verdict::kFP:
      return "FP";
    case Verdict::kFN:
      return "FN";
  }
  return "?";
}

std::optional<Verdict> parse_verdict(std::string_view s) {
  if (s == "TP") return Verdict::kTP;
  if (s == "FP") return Verdict::kFP;
  if (s == "FN") return Verdict::kFN;
  return std::nullopt;
}

MatchSummary make_summary(std::size_t tp, std::size_t fp, std::size_t fn, double threshold) {
  MatchSummary s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.threshold = threshold;
  s.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  s.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.f1 = s.precision + s.recall == 0.0
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

namespace {

struct Candidate {
  std::size_t det;
  std::size_t gt;
  double distance;
};

bool survives(const Detection& d, double threshold) {
  return d.score >= threshold && d.class_label == kPedestrianClass;
}

}  // namespace

std::vector<MatchRecord> match_frame(std::span<const GroundTruthObject> gts,
                                     std::span<const Detection> dets, double radius,
                                     double threshold) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ContractError("match radius must be positive and finite");
  }
  const std::string* frame = nullptr;
  auto check_frame = [&frame](const std::string& id) {
    if (frame == nullptr) {
      frame = &id;
    } else if (*frame != id) {
      throw ContractError("match_frame received records from frames '" + *frame + "' and '" +
                          id + "'");
    }
  };
  for (const auto& g : gts) check_frame(g.frame_id);
  for (const auto& d : dets) check_frame(d.frame_id);
  if (frame == nullptr) return {};

  std::vector<Candidate> candidates;
  std::vector<bool> alive(dets.size(), false);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (!survives(dets[d], threshold)) continue;
    alive[d] = true;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double dist = bev_distance(dets[d].center, gts[g].center);
      if (dist < radius) candidates.push_back({d, g, dist});
    }
  }
  // Ordering keys are all content-based so that input permutations give the
  // same verdicts.
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    const Detection& da = dets[a.det];
    const Detection& db = dets[b.det];
    return std::tie(db.score, a.distance, gts[a.gt].object_id, da.center.x, da.center.y,
                    da.center.z, a.det) < std::tie(da.score, b.distance, gts[b.gt].object_id,
                                                   db.center.x, db.center.y, db.center.z, b.det);
  });

  std::vector<std::optional<std::size_t>> gt_claim(gts.size());
  std::vector<double> gt_distance(gts.size(), 0.0);
  std::vector<bool> det_claimed(dets.size(), false);
  for (const auto& c : candidates) {
    if (det_claimed[c.det] || gt_claim[c.gt]) continue;
    det_claimed[c.det] = true;
    gt_claim[c.gt] = c.det;
    gt_distance[c.gt] = c.distance;
  }

  std::vector<MatchRecord> records;
  records.reserve(gts.size() + dets.size());
  for (std::size_t g = 0; g < gts.size(); ++g) {
    MatchRecord r;
    r.frame_id = *frame;
    r.gt_ref = gts[g].object_id;
    if (gt_claim[g]) {
      r.verdict = Verdict::kTP;
      r.det_ref = *gt_claim[g];
      r.bev_distance = gt_distance[g];
    } else {
      r.verdict = Verdict::kFN;
    }
    records.push_back(std::move(r));
  }
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (!alive[d] || det_claimed[d]) continue;
    MatchRecord r;
    r.frame_id = *frame;
    r.verdict = Verdict::kFP;
    r.det_ref = d;
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

struct FrameSlices {
  std::vector<std::string> ids;
  std::vector<std::vector<std::size_t>> gt_rows;
  std::vector<std::vector<std::size_t>> det_rows;
};

FrameSlices group_by_frame(std::span<const GroundTruthObject> gts,
                           std::span<const Detection> dets) {
  std::map<std::string, std::size_t> index;
  FrameSlices s;
  auto slot = [&](const std::string& id) {
    auto [it, inserted] = index.try_emplace(id, 0);
    if (inserted) {
      it->second = s.ids.size();
      s.ids.push_back(id);
      s.gt_rows.emplace_back();
      s.det_rows.emplace_back();
    }
    return it->second;
  };
  for (std::size_t i = 0; i < gts.size(); ++i) s.gt_rows[slot(gts[i].frame_id)].push_back(i);
  for (std::size_t i = 0; i < dets.size(); ++i) s.det_rows[slot(dets[i].frame_id)].push_back(i);
  // Emit frames in frame_id order.
  std::vector<std::size_t> order(s.ids.size());
  std::size_t k = 0;
  for (const auto& [id, idx] : index) order[k++] = idx;
  FrameSlices sorted;
  for (std::size_t idx : order) {
    sorted.ids.push_back(std::move(s.ids[idx]));
    sorted.gt_rows.push_back(std::move(s.gt_rows[idx]));
    sorted.det_rows.push_back(std::move(s.det_rows[idx]));
  }
  return sorted;
}

template <typename T>
std::vector<T> gather(std::span<const T> all, const std::vector<std::size_t>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(all[r]);
  return out;
}

std::vector<std::vector<MatchRecord>> match_frames(const FrameSlices& frames,
                                                   std::span<const GroundTruthObject> gts,
                                                   std::span<const Detection> dets,
                                                   double radius, double threshold,
                                                   int workers) {
  std::vector<std::vector<MatchRecord>> per_frame(frames.ids.size());
  parallel_for(frames.ids.size(), workers, [&](std::size_t f) {
    const auto frame_gts = gather(gts, frames.gt_rows[f]);
    const auto frame_dets = gather(dets, frames.det_rows[f]);
    auto records = match_frame(frame_gts, frame_dets, radius, threshold);
    for (auto& r : records) {
      if (r.det_ref) r.det_ref = frames.det_rows[f][*r.det_ref];
    }
    per_frame[f] = std::move(records);
  });
  return per_frame;
}

}  // namespace

std::vector<MatchRecord> match_dataset(std::span<const GroundTruthObject> gts,
                                       std::span<const Detection> dets, double radius,
                                       double threshold, int workers) {
  const auto frames = group_by_frame(gts, dets);
  auto per_frame = match_frames(frames, gts, dets, radius, threshold, workers);
  std::vector<MatchRecord> out;
  for (auto& recs : per_frame) {
    out.insert(out.end(), std::make_move_iterator(recs.begin()),
               std::make_move_iterator(recs.end()));
  }
  return out;
}

MatchSummary summarize(std::span<const MatchRecord> records, double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& r : records) {
    switch (r.verdict) {
      case Verdict::kTP:
        ++tp;
        break;
      case Verdict::kFP:
        ++fp;
        break;
      case Verdict::kFN:
        ++fn;
        break;
    }
  }
  return make_summary(tp, fp, fn, threshold);
}

std::vector<MatchSummary> sweep_thresholds(std::span<const GroundTruthObject> gts,
                                           std::span<const Detection> dets, double radius,
                                           std::span<const double> grid, int workers) {
  if (grid.empty()) return {};
  const double lowest = *std::min_element(grid.begin(), grid.end());
  const auto records = match_dataset(gts, dets, radius, lowest, workers);

  // Scores of surviving detections, split by outcome at the lowest threshold.
  std::vector<double> tp_scores;
  std::vector<double> all_scores;
  std::size_t n_gt = 0;
  for (const auto& r : records) {
    if (r.gt_ref) ++n_gt;
    if (r.det_ref) {
      all_scores.push_back(dets[*r.det_ref].score);
      if (r.verdict == Verdict::kTP) tp_scores.push_back(dets[*r.det_ref].score);
    }
  }
  std::sort(tp_scores.begin(), tp_scores.end());
  std::sort(all_scores.begin(), all_scores.end());
  auto count_at_least = [](const std::vector<double>& sorted, double t) {
    return static_cast<std::size_t>(sorted.end() -
                                    std::lower_bound(sorted.begin(), sorted.end(), t));
  };
  std::vector<MatchSummary> out;
  out.reserve(grid.size());
  for (double t : grid) {
    const std::size_t tp = count_at_least(tp_scores, t);
    const std::size_t kept = count_at_least(all_scores, t);
    out.push_back(make_summary(tp, kept - tp, n_gt - tp, t));
  }
  return out;
}

ThresholdResult optimize_threshold(std::span<const GroundTruthObject> gts,
                                   std::span<const Detection> dets, double radius,
                                   std::span<const double> grid, int workers) {
  if (grid.empty()) throw ContractError("threshold grid must not be empty");
  for (double t : grid) {
    if (!(t >= 0.0 && t <= 1.0)) throw ContractError("threshold grid values must lie in [0, 1]");
  }
  const auto sweep = sweep_thresholds(gts, dets, radius, grid, workers);
  std::size_t best = 0;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    const bool better = sweep[i].f1 > sweep[best].f1;
    const bool tie_lower = sweep[i].f1 == sweep[best].f1 && grid[i] < grid[best];
    if (better || tie_lower) best = i;
  }
  return {grid[best], sweep[best]};
}

std::vector<double> default_threshold_grid(std::span<const Detection> dets) {
  std::vector<double> grid{0.0, 1.0};
  for (const auto& d : dets) grid.push_back(d.score);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace detfactors
