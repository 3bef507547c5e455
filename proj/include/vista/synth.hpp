#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vista/data_model.hpp"
#include "vista/metrics.hpp"
#include "vista/sope.hpp"

namespace vista {

/// Linear box path: at frame t the box is start + t * (vx, vy, dw, dh).
struct SynthTrajectory {
  int width = 640;
  int height = 480;
  Box start{100.0, 100.0, 60.0, 40.0};
  double vx = 0.0;
  double vy = 0.0;
  double dw = 0.0;
  double dh = 0.0;
};

struct SynthSpec {
  std::string id = "synth";
  int frame_count = 50;
  double fps = 5.0;
  double annotation_rate = 1.0;
  SynthTrajectory fpv;
  SynthTrajectory tpv{320, 240, {40.0, 30.0, 50.0, 50.0}};
  /// Annotation indices (k-th grid timestamp, k >= 1) where the target is
  /// Absent in both views.
  std::vector<int> gaps;
  /// Uniform random shift of each view's start position, in pixels.
  double jitter = 0.0;
  /// Round boxes to whole pixels.
  bool integer_boxes = true;
  /// Keep boxes inside the frame by shifting them; when false a box leaving
  /// the frame is an error.
  bool clamp = true;
  Representation repr = Representation::box;
  /// Write frame images (flat background, filled target rectangle).
  bool render = false;
  std::array<uint8_t, 3> background{40, 40, 40};
  std::array<uint8_t, 3> target_color{220, 180, 60};
};

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json synth_spec_to_json(const SynthSpec& spec);

/// Deterministic in (spec, seed). With `out_dir` set, annotation files (and
/// frames when rendering) are written under it and the pair points at them.
/// Throws ConstraintError when a trajectory leaves the frame without clamping.
SequencePair generate_pair(const SynthSpec& spec, uint64_t seed,
                           const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// `n` pairs with varied lengths, motions and gap schedules.
std::vector<SynthSpec> make_suite(int n, uint64_t seed, Representation repr = Representation::box);

/// Generates every spec (seeded by seed + index) and writes the data plus
/// `<out_dir>/manifest.json`.
DatasetManifest write_dataset(const std::vector<SynthSpec>& specs, uint64_t seed,
                              const std::filesystem::path& out_dir);

enum class ScriptKind { perfect, fixed_offset, lose_after, view_biased, echo_init };

/// Deterministic tracker that reads the ground truth.
///
/// Scripts act on the scored annotations of a session (visible grid frames
/// after initialization), counted from 0:
///   perfect       returns the ground truth
///   fixed_offset  ground-truth box shifted by (dx, dy)
///   lose_after    ground truth for the first `k`, Absent afterwards
///   view_biased   box shifted horizontally so that its IoU with the ground
///                 truth is the per-view schedule value (cycled); 0 is Absent
///   echo_init     repeats the initialization state forever
struct ScriptedTracker {
  ScriptKind kind = ScriptKind::perfect;
  double dx = 0.0;
  double dy = 0.0;
  int k = 0;
  std::vector<double> fpv_schedule;
  std::vector<double> tpv_schedule;

  /// Forms: "perfect", "fixed_offset:DX,DY", "lose_after:K",
  /// "view_biased:O1,O2,.../O1,O2,..." (FPV / TPV), "echo_init".
  static ScriptedTracker parse(const std::string& text);
  std::string describe() const;
};

/// Ground-truth lookup for a scripted session: the state at a local frame, or
/// nullptr when the frame has no visible annotation.
using TruthLookup = std::function<const TargetState*(int t)>;

/// Produces the scripted predictions frame by frame.
class ScriptedScript {
 public:
  ScriptedScript(ScriptedTracker tracker, View view, TruthLookup truth);
  void init(const TargetState& state);
  TargetState predict(int t);

 private:
  ScriptedTracker tracker_;
  View view_;
  TruthLookup truth_;
  TargetState init_;
  int scored_ = 0;
};

/// In-process scripted tracker.
class ScriptedDriver final : public TrackerDriver {
 public:
  ScriptedDriver(ScriptedTracker tracker, Representation repr = Representation::box);
  std::optional<Representation> output_repr() const override { return repr_; }
  std::unique_ptr<TrackerSession> open(const SequencePair& pair, View view) const override;
  std::string describe() const override;

 private:
  ScriptedTracker tracker_;
  Representation repr_;
};

struct ExpectedScore {
  SequenceScore score;
  /// J / F have a closed form (perfect and lose_after only).
  bool has_region = false;
};

/// Closed-form scores of a scripted tracker on one view of a pair (or
/// short-term sub-pair), scored in `repr`. Throws MetricError for trackers
/// without a closed form.
ExpectedScore expected_scores(const SequencePair& pair, const ScriptedTracker& tracker, View view,
                              Representation repr = Representation::box);

/// Overlap-schedule value of scored annotation `i` for a view.
double scheduled_overlap(const ScriptedTracker& tracker, View view, int i);

}  // namespace vista
