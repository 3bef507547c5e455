#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vista/geometry.hpp"

namespace vista {

enum class View { fpv, tpv };

const char* view_name(View view);
View parse_view(const std::string& name);

/// Target not visible (no geometry).
struct Absent {
  bool operator==(const Absent&) const = default;
};

using TargetState = std::variant<Absent, Box, BinaryMask>;

inline bool is_absent(const TargetState& s) { return std::holds_alternative<Absent>(s); }

/// Box view of a state: boxes as-is, masks through mask_to_box, absent and
/// empty masks as nullopt.
std::optional<Box> state_box(const TargetState& s);

/// Mask view of a state: masks as-is, boxes through box_fill_mask, absent as
/// an empty raster.
BinaryMask state_mask(const TargetState& s, int height, int width);

enum class Representation { box, mask };
const char* representation_name(Representation r);
Representation parse_representation(const std::string& name);

/// Ground truth on the regular annotation grid.
///
/// `timestamps` holds every grid frame (0, step, 2*step, ... < frame_count);
/// grid frames not listed in the annotation file are Absent.
struct AnnotationTrack {
  std::vector<int> timestamps;
  std::vector<TargetState> states;
  int frame_count = 0;
  double fps = 5.0;
  double annotation_rate = 1.0;

  /// Frames between consecutive annotations.
  int grid_step() const;

  /// Number of non-Absent annotations (the aggregation weight).
  size_t weight() const;

  /// State at `t`, or nullptr when `t` is not on the grid.
  const TargetState* find(int t) const;

  std::vector<int> visible_timestamps() const;
};

/// Sparse per-frame tracker output; frames not listed are Absent.
struct PredictionTrack {
  std::vector<int> timestamps;
  std::vector<TargetState> states;

  const TargetState* find(int t) const;
  void push(int t, TargetState state);
};

struct ViewSequence {
  View view = View::fpv;
  /// Directory or printf-style template (e.g. "frames/%06d.png").
  std::string frames;
  int width = 0;
  int height = 0;
  AnnotationTrack annotations;
  /// Where the annotation file lives (kept for save/round-trip and for
  /// placeholder expansion in subprocess commands).
  std::filesystem::path annotations_path;
  /// Optional distractor / hand-object detections (JSON Lines).
  std::filesystem::path detections_path;
  /// Added to local frame indices before resolving frame files; non-zero for
  /// short-term sub-sequences.
  int frame_offset = 0;

  std::filesystem::path frame_path(int t) const;
};

struct SequencePair {
  std::string id;
  ViewSequence fpv;
  ViewSequence tpv;
  /// Set on short-term sub-pairs: the source pair and the first source frame.
  std::string parent_id;
  int parent_offset = 0;

  const ViewSequence& view(View v) const { return v == View::fpv ? fpv : tpv; }
  ViewSequence& view(View v) { return v == View::fpv ? fpv : tpv; }
  const std::string& source_id() const { return parent_id.empty() ? id : parent_id; }
};

enum class Split { train, test };

struct DatasetManifest {
  Split split = Split::test;
  std::vector<SequencePair> pairs;
};

enum class ViolationKind {
  length_mismatch,
  annotation_sets_differ,
  initial_annotation_missing,
  geometry_out_of_bounds,
  grid_mismatch,
  frame_missing,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

const char* violation_name(ViolationKind kind);

struct ValidateOptions {
  /// Also require every annotated frame image to exist on disk.
  bool check_frames = false;
};

/// Checks the synchronization constraints. Never throws.
std::vector<Violation> validate_pair(const SequencePair& pair, const ValidateOptions& options = {});

/// Maximal runs of consecutive non-Absent grid timestamps, as
/// [first_timestamp, last_timestamp] pairs.
struct VisibilityRun {
  int start = 0;
  int end = 0;
  /// Number of annotations in the run.
  int length = 0;
};
std::vector<VisibilityRun> visibility_runs(const AnnotationTrack& track);

/// Builds a grid track from sparse entries. Throws ConstraintError for
/// entries off the grid or out of range, or when the grid step is not a
/// positive integer.
AnnotationTrack make_track(std::vector<int> timestamps, std::vector<TargetState> states,
                           int frame_count, double fps, double annotation_rate);

/// Reads the manifest and every annotation file, validating each pair unless
/// `validate` is false. Throws ParseError for malformed input and
/// ConstraintError naming the pair and violation.
DatasetManifest load_manifest(const std::filesystem::path& path, bool validate = true);

/// Writes the manifest document and each view's annotation file (to the
/// view's annotations_path, or under the manifest directory when unset).
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

bool same_structure(const SequencePair& a, const SequencePair& b);

}  // namespace vista
