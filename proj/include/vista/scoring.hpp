#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vista/data_model.hpp"
#include "vista/metrics.hpp"

namespace vista {

/// Everything needed to score one frame of one view, kept so scores can be
/// recomputed over frame subsets (attributes, center-distance bins).
struct FrameScore {
  int t = 0;
  /// IoU in the tracker's own representation.
  double overlap = 0.0;
  /// Normalized center distance; +inf for an Absent prediction.
  double distance = 0.0;
  /// False when the ground-truth box is degenerate (frame skipped by NPS).
  bool distance_valid = true;
  /// Mask IoU with boxes filled into masks.
  double j = 0.0;
  double f = 0.0;
};

struct ScoredSequence {
  std::vector<FrameScore> frames;
  int gt_absent_count = 0;
  int pred_on_absent_count = 0;
  int degenerate_gt_count = 0;
};

/// Scores `pred` against the view's ground truth at every grid timestamp
/// after the initialization frame.
ScoredSequence score_frames(const PredictionTrack& pred, const ViewSequence& gt, Representation mode);

/// Aggregates per-frame values into a sequence score with the given weight.
/// Throws MetricError when `frames` is empty or has no NPS-eligible frame.
SequenceScore summarize(std::span<const FrameScore> frames, const std::string& pair_id, View view,
                        double weight);

/// Frames whose timestamp satisfies `keep`.
std::vector<FrameScore> select_frames(std::span<const FrameScore> frames,
                                      const std::function<bool(int)>& keep);

}  // namespace vista
