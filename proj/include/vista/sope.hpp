#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vista/data_model.hpp"
#include "vista/error.hpp"
#include "vista/metrics.hpp"
#include "vista/scoring.hpp"

namespace vista {

enum class Protocol { long_term, short_term };
const char* protocol_name(Protocol p);
Protocol parse_protocol(const std::string& name);

struct FrameRef {
  int t = 0;
  std::filesystem::path path;
};

struct TranscriptLine {
  bool from_harness = true;
  std::string text;
};

/// One tracker instance following one view of one sequence.
class TrackerSession {
 public:
  virtual ~TrackerSession() = default;
  virtual void init(const FrameRef& frame, const TargetState& state) = 0;
  /// Prediction for `frame`; called once per frame in increasing order.
  virtual TargetState track(const FrameRef& frame) = 0;
  virtual void end() = 0;
  virtual std::vector<TranscriptLine> transcript() const { return {}; }
};

/// Creates sessions. Implementations must allow concurrent open() calls.
class TrackerDriver {
 public:
  virtual ~TrackerDriver() = default;
  /// Representation used for initialization and scoring. nullopt means
  /// "whatever the predictions contain" (masks if any, else boxes).
  virtual std::optional<Representation> output_repr() const = 0;
  virtual std::unique_ptr<TrackerSession> open(const SequencePair& pair, View view) const = 0;
  virtual std::string describe() const = 0;
};

/// Replays stored predictions from `<dir>/<pair id>/<view>.jsonl`.
class ReplayDriver final : public TrackerDriver {
 public:
  explicit ReplayDriver(std::filesystem::path dir, std::optional<Representation> repr = std::nullopt);
  std::optional<Representation> output_repr() const override { return repr_; }
  std::unique_ptr<TrackerSession> open(const SequencePair& pair, View view) const override;
  std::string describe() const override;

 private:
  std::filesystem::path dir_;
  std::optional<Representation> repr_;
};

struct SubprocessOptions {
  Representation repr = Representation::box;
  std::chrono::milliseconds frame_timeout{60'000};
  bool keep_transcript = false;
};

/// Runs one tracker process per session and speaks the line-delimited JSON
/// protocol with it. The command may reference {seq}, {view}, {frames},
/// {annotations} and {offset}; substituted values are shell-quoted.
class SubprocessDriver final : public TrackerDriver {
 public:
  SubprocessDriver(std::string command_template, SubprocessOptions options);
  std::optional<Representation> output_repr() const override { return options_.repr; }
  std::unique_ptr<TrackerSession> open(const SequencePair& pair, View view) const override;
  std::string describe() const override;

  std::string expand(const SequencePair& pair, View view) const;

 private:
  std::string command_;
  SubprocessOptions options_;
};

struct RunRecord {
  std::string pair_id;
  View view = View::fpv;
  Protocol protocol = Protocol::long_term;
  /// Run index within the source pair for short-term runs, else -1.
  int run_index = -1;
  Representation repr = Representation::box;
  /// Predictions at grid timestamps after initialization.
  PredictionTrack predictions;
  int frames_presented = 0;
  double wall_time = 0.0;
  std::vector<TranscriptLine> transcript;
};

/// A run that stopped early; carries whatever was collected.
class RunFailure : public Error {
 public:
  RunFailure(const std::string& what, RunRecord partial) : Error(what), partial_(std::move(partial)) {}
  const RunRecord& partial() const { return partial_; }

 private:
  RunRecord partial_;
};

struct RunOptions {
  Protocol protocol = Protocol::long_term;
  int run_index = -1;
};

/// Initializes the tracker on frame 0 with the ground truth, then presents
/// frames 1 .. T-1 one at a time. Throws RunFailure on any driver or
/// protocol error.
RunRecord run_sope(const SequencePair& pair, const TrackerDriver& driver, View view,
                   const RunOptions& options = {});

struct ShortTermSplit {
  std::vector<SequencePair> pairs;
  /// Runs shorter than the minimum length.
  int dropped = 0;
};

/// One re-anchored sub-pair per visibility run with at least `min_len`
/// annotations. Sub-pair ids are `<id>#<run index>`.
ShortTermSplit extract_short_term(const SequencePair& pair, int min_len = 2);

struct EvalOptions {
  Protocol protocol = Protocol::long_term;
  std::vector<View> views = {View::fpv, View::tpv};
  int jobs = 1;
  int min_run_len = 2;
};

struct SequenceEvaluation {
  std::string pair_id;
  /// Source pair and frame offset (differs from pair_id for short-term runs).
  std::string source_id;
  int source_offset = 0;
  View view = View::fpv;
  Representation repr = Representation::box;
  SequenceScore score;
  std::vector<FrameScore> frames;
  int gt_absent_count = 0;
  int pred_on_absent_count = 0;
  double wall_time = 0.0;
};

struct FailureRecord {
  std::string pair_id;
  View view = View::fpv;
  std::string message;
};

struct DatasetEvaluation {
  Protocol protocol = Protocol::long_term;
  std::vector<View> views;
  /// Successful sequences of pairs whose every requested view succeeded,
  /// ordered by pair then view.
  std::vector<SequenceEvaluation> sequences;
  std::vector<FailureRecord> failures;
  /// Pairs left out of aggregation because at least one view failed.
  int excluded_pairs = 0;
  int evaluated_pairs = 0;
  int short_term_dropped = 0;

  std::vector<SequenceScore> scores() const;
};

/// Runs SOPE on every requested view of every pair and scores the runs.
/// Results do not depend on `jobs`.
DatasetEvaluation evaluate_dataset(const DatasetManifest& manifest, const TrackerDriver& driver,
                                   const EvalOptions& options);

}  // namespace vista
