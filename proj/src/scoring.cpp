#include "vista/scoring.hpp"

#include <limits>

#include "vista/error.hpp"

namespace vista {

ScoredSequence score_frames(const PredictionTrack& pred, const ViewSequence& gt, Representation mode) {
  const AnnotationTrack& track = gt.annotations;
  const OverlapSeries overlaps = overlap_series(pred, track, mode, gt.height, gt.width);
  const int tolerance = boundary_tolerance(gt.height, gt.width);

  ScoredSequence out;
  out.gt_absent_count = overlaps.gt_absent_count;
  out.pred_on_absent_count = overlaps.pred_on_absent_count;
  for (size_t i = 0; i < overlaps.timestamps.size(); ++i) {
    const int t = overlaps.timestamps[i];
    const TargetState& truth = *track.find(t);
    const TargetState* guess = pred.find(t);
    static const TargetState absent = Absent{};
    const TargetState& p = guess ? *guess : absent;

    FrameScore fs;
    fs.t = t;
    fs.overlap = overlaps.overlaps[i];

    const auto gb = state_box(truth);
    if (!gb || gb->degenerate()) {
      fs.distance_valid = false;
      fs.distance = std::numeric_limits<double>::quiet_NaN();
      ++out.degenerate_gt_count;
    } else {
      const auto pb = state_box(p);
      fs.distance = pb ? normalized_center_distance(*pb, *gb) : std::numeric_limits<double>::infinity();
    }

    const BinaryMask gm = state_mask(truth, gt.height, gt.width);
    const BinaryMask pm = state_mask(p, gt.height, gt.width);
    const uint64_t inter = intersection_area(pm, gm);
    const uint64_t uni = pm.area() + gm.area() - inter;
    fs.j = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    fs.f = frame_boundary_f(pm, gm, tolerance);
    out.frames.push_back(fs);
  }
  return out;
}

SequenceScore summarize(std::span<const FrameScore> frames, const std::string& pair_id, View view,
                        double weight) {
  if (frames.empty()) throw MetricError("no scored frames for " + pair_id + " " + view_name(view));
  std::vector<double> overlaps, distances;
  double j = 0.0, f = 0.0;
  for (const FrameScore& fs : frames) {
    overlaps.push_back(fs.overlap);
    if (fs.distance_valid) distances.push_back(fs.distance);
    j += fs.j;
    f += fs.f;
  }
  const double n = static_cast<double>(frames.size());
  SequenceScore s;
  s.pair_id = pair_id;
  s.view = view;
  s.auc = auc(overlaps);
  s.gsr = gsr(overlaps);
  s.nps = nps(distances);
  s.j = 100.0 * j / n;
  s.f = 100.0 * f / n;
  s.jf = (s.j + s.f) / 2.0;
  s.weight = weight;
  return s;
}

std::vector<FrameScore> select_frames(std::span<const FrameScore> frames,
                                      const std::function<bool(int)>& keep) {
  std::vector<FrameScore> out;
  for (const FrameScore& fs : frames) {
    if (keep(fs.t)) out.push_back(fs);
  }
  return out;
}

}  // namespace vista
