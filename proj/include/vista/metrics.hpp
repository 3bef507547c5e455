#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vista/data_model.hpp"

namespace vista {

/// Per-frame overlaps at scored timestamps (grid timestamps after the
/// initialization frame whose ground truth is not Absent).
struct OverlapSeries {
  std::vector<int> timestamps;
  std::vector<double> overlaps;
  /// Scored-grid timestamps skipped because the target was Absent.
  int gt_absent_count = 0;
  /// ...of which the tracker still reported a target.
  int pred_on_absent_count = 0;
};

/// Center distances normalized by the ground-truth box size; +inf when the
/// prediction is Absent.
struct DistanceSeries {
  std::vector<int> timestamps;
  std::vector<double> distances;
  /// Frames skipped because the ground-truth box has zero width or height.
  int degenerate_gt_count = 0;
};

/// Throws DimensionError when the prediction track references frames outside
/// [0, frame_count).
OverlapSeries overlap_series(const PredictionTrack& pred, const AnnotationTrack& gt,
                             Representation mode, int height, int width);

DistanceSeries distance_series(const PredictionTrack& pred, const AnnotationTrack& gt);

/// Normalized center distance between two boxes; the ground truth must not be
/// degenerate.
double normalized_center_distance(const Box& pred, const Box& gt);

/// 100 x mean overlap. Throws MetricError on an empty series.
double auc(std::span<const double> overlaps);
inline double auc(const OverlapSeries& s) { return auc(s.overlaps); }

inline constexpr int kSuccessThresholds = 51;

/// Fraction of overlaps strictly above each of `count` uniform thresholds in
/// [0, 1].
std::vector<double> success_curve(std::span<const double> overlaps, int count = kSuccessThresholds);

/// Area under the normalized-precision curve for thresholds in [0, 0.5],
/// scaled to [0, 100]; integrated exactly.
double nps(std::span<const double> distances);
inline double nps(const DistanceSeries& s) { return nps(s.distances); }
double nps(const PredictionTrack& pred, const AnnotationTrack& gt);

/// Normalized length of the leading run of overlaps above the failure
/// threshold, integrated exactly over thresholds in [0, 0.5] and scaled to
/// [0, 100].
double gsr(std::span<const double> overlaps);
inline double gsr(const OverlapSeries& s) { return gsr(s.overlaps); }

/// round(0.8 % of the image diagonal).
int boundary_tolerance(int height, int width);

/// Boundary F-measure of one frame. Both boundaries empty scores 1.
double frame_boundary_f(const BinaryMask& pred, const BinaryMask& gt, int tolerance);

/// 100 x mean mask IoU.
double region_j(std::span<const BinaryMask> pred, std::span<const BinaryMask> gt);

/// 100 x mean frame boundary F. A negative tolerance uses boundary_tolerance().
double boundary_f(std::span<const BinaryMask> pred, std::span<const BinaryMask> gt, int tolerance = -1);

enum class Metric { auc, nps, gsr, j, f, jf };
inline constexpr std::array<Metric, 6> kAllMetrics = {Metric::auc, Metric::nps, Metric::gsr,
                                                      Metric::j,   Metric::f,   Metric::jf};
const char* metric_name(Metric m);
Metric parse_metric(const std::string& name);

struct SequenceScore {
  std::string pair_id;
  View view = View::fpv;
  double auc = 0.0;
  double nps = 0.0;
  double gsr = 0.0;
  double j = 0.0;
  double f = 0.0;
  double jf = 0.0;
  double weight = 0.0;

  double value(Metric m) const;
};

struct WeightedValue {
  double value = 0.0;
  double weight = 0.0;
};

/// Throws MetricError on empty input or a non-positive total weight.
double weighted_mean(std::span<const WeightedValue> values);

struct PairedScore {
  double fpv = 0.0;
  double tpv = 0.0;
  double weight = 0.0;
};

struct DeltaScore {
  std::string metric;
  double delta = 0.0;
  double fpv_mean = 0.0;
  double tpv_mean = 0.0;
};

/// Mean weighted signed FPV - TPV difference, with the weighted per-view
/// means. Throws MetricError on empty input.
DeltaScore delta_sigma(std::span<const PairedScore> pairs, std::string metric = {});

struct ViewAggregate {
  /// Indexed like kAllMetrics.
  std::array<double, kAllMetrics.size()> means{};
  size_t sequences = 0;
  double total_weight = 0.0;

  double mean(Metric m) const { return means[static_cast<size_t>(m)]; }
};

struct Aggregate {
  bool weighted = true;
  std::optional<ViewAggregate> fpv;
  std::optional<ViewAggregate> tpv;
  /// One per metric, present when both views were scored.
  std::vector<DeltaScore> deltas;
  size_t pairs = 0;

  const DeltaScore* delta(Metric m) const;
};

/// Per-view means and per-metric deltas over sequence scores. With
/// `weighted` false every sequence counts once. Deltas pair FPV and TPV
/// scores by pair id; pairs lacking either view are left out of the deltas.
Aggregate aggregate_scores(std::span<const SequenceScore> scores, bool weighted);

}  // namespace vista
