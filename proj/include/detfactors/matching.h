#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detfactors/types.h"

namespace detfactors {

inline constexpr double kDefaultMatchRadius = 2.0;

enum class Verdict { kTP, kFP, kFN };

std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view s);

// Outcome for one ground-truth object or one surviving detection.
//   TP: gt_ref, det_ref and bev_distance (< radius) set.
//   FN: gt_ref only.  FP: det_ref only.
struct MatchRecord {
  Verdict verdict = Verdict::kFN;
  std::optional<std::string> gt_ref;
  std::optional<std::size_t> det_ref;
  std::optional<double> bev_distance;
  std::string frame_id;
  bool operator==(const MatchRecord&) const = default;
};

struct MatchSummary {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;
};

// Precision/recall/F1 from counts; each ratio is 0 when its denominator is 0.
MatchSummary make_summary(std::size_t tp, std::size_t fp, std::size_t fn, double threshold);

// Matches one frame. Detections below `threshold` or of a class other than
// pedestrian are discarded first. The remaining (detection, ground truth)
// pairs closer than `radius` in BEV are visited by (score desc, distance asc,
// object_id asc) and each pair is accepted when both sides are still free.
// det_ref in the returned records indexes `dets`.
//
// Throws ContractError when the inputs do not all share one frame_id or
// radius <= 0.
std::vector<MatchRecord> match_frame(std::span<const GroundTruthObject> gts,
                                     std::span<const Detection> dets, double radius,
                                     double threshold);

// Matches every frame of a dataset. det_ref indexes `dets`; records are
// grouped per frame in frame_id order, ground-truth records first.
std::vector<MatchRecord> match_dataset(std::span<const GroundTruthObject> gts,
                                       std::span<const Detection> dets, double radius,
                                       double threshold, int workers = 1);

MatchSummary summarize(std::span<const MatchRecord> records, double threshold);

struct ThresholdResult {
  double threshold = 0.0;
  MatchSummary summary;
};

// Pooled (micro) summaries for every threshold in `grid`, from a single
// matching pass. Greedy matching visits higher-scored detections first, so the
// outcome above any threshold equals the outcome of matching at it directly.
std::vector<MatchSummary> sweep_thresholds(std::span<const GroundTruthObject> gts,
                                           std::span<const Detection> dets, double radius,
                                           std::span<const double> grid, int workers = 1);

// Grid element with the highest pooled F1; ties go to the lowest threshold.
ThresholdResult optimize_threshold(std::span<const GroundTruthObject> gts,
                                   std::span<const Detection> dets, double radius,
                                   std::span<const double> grid, int workers = 1);

// Sorted distinct detection scores plus the endpoints 0 and 1.
std::vector<double> default_threshold_grid(std::span<const Detection> dets);

}  // namespace detfactors
