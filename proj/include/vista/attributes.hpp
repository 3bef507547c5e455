#pragma once

#include <array>
#include <bitset>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vista/data_model.hpp"
#include "vista/metrics.hpp"
#include "vista/sope.hpp"

namespace vista {

enum class Attribute : int { SV, ARC, IV, DIS, MB, FM, LR, MR, HR, STA, MOV, HOI };
inline constexpr size_t kAttributeCount = 12;
inline constexpr std::array<Attribute, kAttributeCount> kAllAttributes = {
    Attribute::SV, Attribute::ARC, Attribute::IV,  Attribute::DIS, Attribute::MB,  Attribute::FM,
    Attribute::LR, Attribute::MR,  Attribute::HR,  Attribute::STA, Attribute::MOV, Attribute::HOI};

const char* attribute_name(Attribute a);
Attribute parse_attribute(const std::string& name);

struct AttributeThresholds {
  double scale_low = 0.5;
  double scale_high = 2.0;
  double illumination = 0.15;
  double blur_variance = 100.0;
  double low_res_area = 32.0 * 32.0;
  double high_res_area = 96.0 * 96.0;
  double static_iou = 0.5;
  double distractor_cosine = 0.5;
  double distractor_iou = 0.5;
  double hoi_iou = 0.5;
};

using AttributeBits = std::bitset<kAttributeCount>;

struct FrameAttributes {
  int t = 0;
  bool visible = false;
  AttributeBits labels;
  /// Attributes whose value is defined at this frame.
  AttributeBits known;

  bool has(Attribute a) const { return labels.test(static_cast<size_t>(a)); }
  bool defined(Attribute a) const { return known.test(static_cast<size_t>(a)); }
};

/// Per-annotation attribute labels of one view, on the annotation grid.
class FrameAttributeSet {
 public:
  FrameAttributeSet() = default;
  explicit FrameAttributeSet(const AnnotationTrack& track);

  const std::vector<FrameAttributes>& frames() const { return frames_; }
  const FrameAttributes* find(int t) const;

  /// Defines `a` at `t`. Ignored on Absent timestamps, which carry no labels.
  void set(int t, Attribute a, bool value);
  bool has(int t, Attribute a) const;

  /// Marks `a` as computed for the track (labels may still be undefined on
  /// individual frames).
  void mark_available(Attribute a) { available_.set(static_cast<size_t>(a)); }
  bool available(Attribute a) const { return available_.test(static_cast<size_t>(a)); }

  /// Number of frames labelled with `a`.
  size_t count(Attribute a) const;

  /// Takes every attribute that `other` has available.
  void merge(const FrameAttributeSet& other);

  std::vector<std::string> notes;

 private:
  FrameAttributes* find_mutable(int t);

  std::vector<FrameAttributes> frames_;
  AttributeBits available_;
};

/// SV, ARC, FM, LR, MR, HR from ground-truth boxes (mask-derived if needed).
FrameAttributeSet box_attributes(const AnnotationTrack& track, const AttributeThresholds& th = {});

/// Area class of a box: LR below the low threshold, HR above the high one,
/// MR in between (bounds inclusive).
Attribute resolution_class(double area, const AttributeThresholds& th = {});

/// IV and MB from frame pixels inside the ground-truth box. Throws
/// MissingInputError when a frame cannot be read.
FrameAttributeSet pixel_attributes(const ViewSequence& view, const AttributeThresholds& th = {});

/// Variance of the 3x3 Laplacian over the interior of a grayscale patch
/// (values in [0, 255], row-major). nullopt when the patch is under 3x3.
std::optional<double> laplacian_variance(const std::vector<double>& gray, int width, int height);

struct PairLabels {
  FrameAttributeSet fpv;
  FrameAttributeSet tpv;

  const FrameAttributeSet& view(View v) const { return v == View::fpv ? fpv : tpv; }
  FrameAttributeSet& view(View v) { return v == View::fpv ? fpv : tpv; }
};

/// STA / MOV from consecutive TPV boxes, copied to FPV by timestamp.
PairLabels motion_state(const SequencePair& pair, const AttributeThresholds& th = {});

struct DistractorCandidate {
  Box box;
  std::vector<float> embedding;
};

struct HandObjectDetection {
  Box box;
  bool interaction = false;
};

struct FrameDetections {
  std::vector<DistractorCandidate> candidates;
  std::vector<HandObjectDetection> hand_objects;
};

struct ExternalDetections {
  std::vector<float> target_embedding;
  std::map<int, FrameDetections> frames;
};

/// Reads the detections JSON Lines file. Throws MissingInputError when the
/// file does not exist and ParseError on malformed lines or embeddings that
/// are not unit-norm.
ExternalDetections load_detections(const std::filesystem::path& path);

double cosine_similarity(std::span<const float> a, std::span<const float> b);

FrameAttributeSet distractor_attr(const AnnotationTrack& track, const ExternalDetections& detections,
                                  const AttributeThresholds& th = {});

/// HOI hysteresis on FPV detections: on at the second of two consecutive
/// annotations with interaction evidence, off at the second of two
/// consecutive annotations with neither overlap nor interaction. Copied to
/// TPV by timestamp.
PairLabels hoi_attr(const SequencePair& pair, const ExternalDetections& fpv_detections,
                    const AttributeThresholds& th = {});

struct AttributeOptions {
  bool pixel = false;
  AttributeThresholds thresholds;
};

/// All attributes computable for the pair: box and motion attributes always,
/// pixel attributes on request, DIS / HOI when detection files are set.
/// Unreadable frames or detection files leave those attributes unavailable
/// with a note.
PairLabels compute_attributes(const SequencePair& pair, const AttributeOptions& options = {});

/// Center-distance bin per visible annotation, from the mask barycenter when
/// masks exist and the box center otherwise.
struct CenterDistanceLabels {
  std::map<int, CenterDistanceBin> bins;
  /// Annotations binned from a mask barycenter / from a box center.
  size_t from_mask = 0;
  size_t from_box = 0;
};
CenterDistanceLabels center_distance_labels(const ViewSequence& view);

/// Scores restricted to a subset of frames, aggregated per view.
struct BreakdownRow {
  std::string label;
  std::optional<ViewAggregate> fpv;
  std::optional<ViewAggregate> tpv;
  /// Flagged annotations per view (index 0 FPV, 1 TPV).
  std::array<size_t, 2> frames{};
  /// fpv mean - tpv mean per metric, when both views have scores.
  std::optional<std::array<double, kAllMetrics.size()>> delta;

  const std::optional<ViewAggregate>& view(View v) const { return v == View::fpv ? fpv : tpv; }
};

/// `keep(eval, source_t)` selects frames by their timestamp in the source
/// pair. A sequence's weight is its number of selected annotations
/// (initialization frame included); sequences without a selected scored
/// frame are left out. Throws MetricError when nothing is selected anywhere.
BreakdownRow filtered_breakdown(std::span<const SequenceEvaluation> evals, const std::string& label,
                                const std::function<bool(const SequenceEvaluation&, int)>& keep,
                                bool weighted = true);

/// Throws MissingInputError when the attribute was not computed for a
/// sequence's source pair.
BreakdownRow attribute_filtered_scores(std::span<const SequenceEvaluation> evals,
                                       const std::map<std::string, PairLabels>& labels,
                                       Attribute attribute, bool weighted = true);

}  // namespace vista
