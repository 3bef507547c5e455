#include "vista/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "vista/error.hpp"

namespace vista {
namespace {

constexpr double kFailureRange = 0.5;

void require_non_empty(size_t n, const char* what) {
  if (n == 0) throw MetricError(std::string(what) + " of an empty series");
}

void check_prediction_range(const PredictionTrack& pred, const AnnotationTrack& gt) {
  if (!pred.timestamps.empty() &&
      (pred.timestamps.front() < 0 || pred.timestamps.back() >= gt.frame_count)) {
    throw DimensionError("grid mismatch: prediction frame outside [0, " +
                         std::to_string(gt.frame_count) + ")");
  }
}

const TargetState& prediction_at(const PredictionTrack& pred, int t) {
  static const TargetState absent = Absent{};
  const TargetState* s = pred.find(t);
  return s ? *s : absent;
}

}  // namespace

OverlapSeries overlap_series(const PredictionTrack& pred, const AnnotationTrack& gt,
                             Representation mode, int height, int width) {
  check_prediction_range(pred, gt);
  OverlapSeries series;
  for (size_t i = 0; i < gt.timestamps.size(); ++i) {
    const int t = gt.timestamps[i];
    if (t == 0) continue;
    const TargetState& truth = gt.states[i];
    const TargetState& guess = prediction_at(pred, t);
    if (is_absent(truth)) {
      ++series.gt_absent_count;
      if (!is_absent(guess)) ++series.pred_on_absent_count;
      continue;
    }
    double o = 0.0;
    if (mode == Representation::box) {
      const auto gb = state_box(truth);
      const auto pb = state_box(guess);
      if (gb && pb) o = box_iou(*pb, *gb);
    } else {
      o = mask_iou(state_mask(guess, height, width), state_mask(truth, height, width));
    }
    series.timestamps.push_back(t);
    series.overlaps.push_back(o);
  }
  return series;
}

double normalized_center_distance(const Box& pred, const Box& gt) {
  const double dx = (pred.center_x() - gt.center_x()) / gt.w;
  const double dy = (pred.center_y() - gt.center_y()) / gt.h;
  return std::sqrt(dx * dx + dy * dy);
}

DistanceSeries distance_series(const PredictionTrack& pred, const AnnotationTrack& gt) {
  check_prediction_range(pred, gt);
  DistanceSeries series;
  for (size_t i = 0; i < gt.timestamps.size(); ++i) {
    const int t = gt.timestamps[i];
    if (t == 0 || is_absent(gt.states[i])) continue;
    const auto gb = state_box(gt.states[i]);
    if (!gb || gb->degenerate()) {
      ++series.degenerate_gt_count;
      continue;
    }
    const auto pb = state_box(prediction_at(pred, t));
    series.timestamps.push_back(t);
    series.distances.push_back(pb ? normalized_center_distance(*pb, *gb)
                                  : std::numeric_limits<double>::infinity());
  }
  return series;
}

double auc(std::span<const double> overlaps) {
  require_non_empty(overlaps.size(), "AUC");
  double sum = 0.0;
  for (double o : overlaps) sum += o;
  return 100.0 * sum / static_cast<double>(overlaps.size());
}

std::vector<double> success_curve(std::span<const double> overlaps, int count) {
  require_non_empty(overlaps.size(), "success curve");
  if (count < 2) throw MetricError("success curve needs at least two thresholds");
  std::vector<double> sorted(overlaps.begin(), overlaps.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> curve(static_cast<size_t>(count));
  const double n = static_cast<double>(sorted.size());
  for (int i = 0; i < count; ++i) {
    const double tau = static_cast<double>(i) / static_cast<double>(count - 1);
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), tau);
    curve[static_cast<size_t>(i)] = static_cast<double>(above) / n;
  }
  return curve;
}

// P(tau) = #{d <= tau} / n integrates over [0, 0.5] to sum(max(0, 0.5 - d)) / n.
double nps(std::span<const double> distances) {
  require_non_empty(distances.size(), "NPS");
  double area = 0.0;
  for (double d : distances) {
    if (d < kFailureRange) area += kFailureRange - std::max(d, 0.0);
  }
  return 100.0 * area / (kFailureRange * static_cast<double>(distances.size()));
}

double nps(const PredictionTrack& pred, const AnnotationTrack& gt) {
  return nps(distance_series(pred, gt));
}

// The leading run above tau has length #{k : min(o_0..o_k) > tau}; each prefix
// minimum m_k contributes min(m_k, 0.5) to the integral over [0, 0.5].
double gsr(std::span<const double> overlaps) {
  require_non_empty(overlaps.size(), "GSR");
  double prefix_min = std::numeric_limits<double>::infinity();
  double area = 0.0;
  for (double o : overlaps) {
    prefix_min = std::min(prefix_min, o);
    if (prefix_min <= 0.0) break;
    area += std::min(prefix_min, kFailureRange);
  }
  return 100.0 * area / (kFailureRange * static_cast<double>(overlaps.size()));
}

int boundary_tolerance(int height, int width) {
  return static_cast<int>(std::lround(0.008 * std::hypot(static_cast<double>(height), static_cast<double>(width))));
}

double frame_boundary_f(const BinaryMask& pred, const BinaryMask& gt, int tolerance) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw DimensionError("boundary F on masks of different size");
  }
  const BoundaryMatch m = match_boundaries(pred, gt, tolerance);
  const double np = static_cast<double>(m.pred);
  const double ng = static_cast<double>(m.gt);
  if (np == 0.0 && ng == 0.0) return 1.0;
  if (np == 0.0 || ng == 0.0) return 0.0;
  const double precision = static_cast<double>(m.pred_matched) / np;
  const double recall = static_cast<double>(m.gt_matched) / ng;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double region_j(std::span<const BinaryMask> pred, std::span<const BinaryMask> gt) {
  if (pred.size() != gt.size()) throw DimensionError("J needs one prediction per ground-truth mask");
  require_non_empty(gt.size(), "J");
  double sum = 0.0;
  for (size_t i = 0; i < gt.size(); ++i) {
    const uint64_t inter = intersection_area(pred[i], gt[i]);
    const uint64_t uni = pred[i].area() + gt[i].area() - inter;
    sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  return 100.0 * sum / static_cast<double>(gt.size());
}

double boundary_f(std::span<const BinaryMask> pred, std::span<const BinaryMask> gt, int tolerance) {
  if (pred.size() != gt.size()) throw DimensionError("F needs one prediction per ground-truth mask");
  require_non_empty(gt.size(), "F");
  double sum = 0.0;
  for (size_t i = 0; i < gt.size(); ++i) {
    const int tol = tolerance >= 0 ? tolerance : boundary_tolerance(gt[i].height(), gt[i].width());
    sum += frame_boundary_f(pred[i], gt[i], tol);
  }
  return 100.0 * sum / static_cast<double>(gt.size());
}

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::auc: return "auc";
    case Metric::nps: return "nps";
    case Metric::gsr: return "gsr";
    case Metric::j: return "j";
    case Metric::f: return "f";
    case Metric::jf: return "jf";
  }
  return "?";
}

Metric parse_metric(const std::string& name) {
  for (Metric m : kAllMetrics) {
    if (name == metric_name(m)) return m;
  }
  throw ParseError("unknown metric '" + name + "'");
}

double SequenceScore::value(Metric m) const {
  switch (m) {
    case Metric::auc: return auc;
    case Metric::nps: return nps;
    case Metric::gsr: return gsr;
    case Metric::j: return j;
    case Metric::f: return f;
    case Metric::jf: return jf;
  }
  return 0.0;
}

double weighted_mean(std::span<const WeightedValue> values) {
  if (values.empty()) throw MetricError("weighted mean of no values");
  double num = 0.0, den = 0.0;
  for (const WeightedValue& v : values) {
    num += v.value * v.weight;
    den += v.weight;
  }
  if (!(den > 0.0)) throw MetricError("weighted mean with non-positive total weight");
  return num / den;
}

// The difference of the two weighted means is algebraically the weighted mean
// of the differences; taking it this way makes the identity exact in floating
// point.
DeltaScore delta_sigma(std::span<const PairedScore> pairs, std::string metric) {
  if (pairs.empty()) throw MetricError("delta over no pairs");
  double fpv = 0.0, tpv = 0.0, den = 0.0;
  for (const PairedScore& p : pairs) {
    fpv += p.fpv * p.weight;
    tpv += p.tpv * p.weight;
    den += p.weight;
  }
  if (!(den > 0.0)) throw MetricError("delta with non-positive total weight");
  DeltaScore out;
  out.metric = std::move(metric);
  out.fpv_mean = fpv / den;
  out.tpv_mean = tpv / den;
  out.delta = out.fpv_mean - out.tpv_mean;
  return out;
}

const DeltaScore* Aggregate::delta(Metric m) const {
  for (const DeltaScore& d : deltas) {
    if (d.metric == metric_name(m)) return &d;
  }
  return nullptr;
}

Aggregate aggregate_scores(std::span<const SequenceScore> scores, bool weighted) {
  Aggregate out;
  out.weighted = weighted;
  auto weight_of = [weighted](const SequenceScore& s) { return weighted ? s.weight : 1.0; };

  for (View v : {View::fpv, View::tpv}) {
    ViewAggregate agg;
    for (size_t k = 0; k < kAllMetrics.size(); ++k) {
      std::vector<WeightedValue> values;
      for (const SequenceScore& s : scores) {
        if (s.view == v) values.push_back({s.value(kAllMetrics[k]), weight_of(s)});
      }
      if (values.empty()) break;
      agg.means[k] = weighted_mean(values);
      agg.sequences = values.size();
      agg.total_weight = 0.0;
      for (const WeightedValue& wv : values) agg.total_weight += wv.weight;
    }
    if (agg.sequences > 0) (v == View::fpv ? out.fpv : out.tpv) = agg;
  }

  std::map<std::string, const SequenceScore*> tpv_by_id;
  for (const SequenceScore& s : scores) {
    if (s.view == View::tpv) tpv_by_id[s.pair_id] = &s;
  }
  std::vector<std::pair<const SequenceScore*, const SequenceScore*>> matched;
  for (const SequenceScore& s : scores) {
    if (s.view != View::fpv) continue;
    const auto it = tpv_by_id.find(s.pair_id);
    if (it != tpv_by_id.end()) matched.emplace_back(&s, it->second);
  }
  out.pairs = matched.size();
  if (!matched.empty()) {
    for (Metric m : kAllMetrics) {
      std::vector<PairedScore> paired;
      for (const auto& [f, t] : matched) paired.push_back({f->value(m), t->value(m), weight_of(*f)});
      out.deltas.push_back(delta_sigma(paired, metric_name(m)));
    }
  }
  return out;
}

}  // namespace vista
