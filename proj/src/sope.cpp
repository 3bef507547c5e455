#include "vista/sope.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "vista/subprocess.hpp"
#include "vista/track_io.hpp"

namespace vista {
namespace fs = std::filesystem;
using nlohmann::json;

const char* protocol_name(Protocol p) { return p == Protocol::long_term ? "long" : "short"; }

Protocol parse_protocol(const std::string& name) {
  if (name == "long") return Protocol::long_term;
  if (name == "short") return Protocol::short_term;
  throw ParseError("unknown protocol '" + name + "' (expected long|short)");
}

// ---------------------------------------------------------------------------
// Replay

namespace {

class ReplaySession final : public TrackerSession {
 public:
  explicit ReplaySession(PredictionTrack track) : track_(std::move(track)) {}

  void init(const FrameRef&, const TargetState&) override {}

  TargetState track(const FrameRef& frame) override {
    const TargetState* s = track_.find(frame.t);
    return s ? *s : TargetState{Absent{}};
  }

  void end() override {}

 private:
  PredictionTrack track_;
};

}  // namespace

ReplayDriver::ReplayDriver(fs::path dir, std::optional<Representation> repr)
    : dir_(std::move(dir)), repr_(repr) {}

std::unique_ptr<TrackerSession> ReplayDriver::open(const SequencePair& pair, View view) const {
  const fs::path file = dir_ / pair.id / (std::string(view_name(view)) + ".jsonl");
  if (!fs::exists(file)) throw DriverError("no predictions at " + file.string());
  return std::make_unique<ReplaySession>(prediction_track(read_track_file(file)));
}

std::string ReplayDriver::describe() const { return "replay:" + dir_.string(); }

// ---------------------------------------------------------------------------
// Subprocess

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

void replace_all(std::string& s, const std::string& key, const std::string& value) {
  size_t pos = 0;
  while ((pos = s.find(key, pos)) != std::string::npos) {
    s.replace(pos, key.size(), value);
    pos += value.size();
  }
}

class SubprocessSession final : public TrackerSession {
 public:
  SubprocessSession(const std::string& command, std::string seq, int height, int width,
                    const SubprocessOptions& options)
      : proc_(command), seq_(std::move(seq)), height_(height), width_(width), options_(options) {}

  void init(const FrameRef& frame, const TargetState& state) override {
    json msg;
    msg["cmd"] = "init";
    msg["seq"] = seq_;
    msg["frame"] = frame.path.string();
    msg["repr"] = representation_name(options_.repr);
    state_to_json(state, msg);
    send(msg);
    const json reply = receive();
    if (!reply.is_object() || reply.size() != 1 || !reply.contains("status") ||
        reply.at("status") != "ok") {
      throw ProtocolError("expected {\"status\":\"ok\"} after init, got " + reply.dump());
    }
  }

  TargetState track(const FrameRef& frame) override {
    json msg;
    msg["cmd"] = "track";
    msg["t"] = frame.t;
    msg["frame"] = frame.path.string();
    send(msg);
    const json reply = receive();
    if (!reply.is_object() || !reply.contains("t") || !reply.at("t").is_number_integer()) {
      throw ProtocolError("prediction without integer \"t\": " + reply.dump());
    }
    const int t = reply.at("t").get<int>();
    if (t != frame.t) {
      throw ProtocolError("prediction for frame " + std::to_string(t) + " while frame " +
                          std::to_string(frame.t) + " was requested");
    }
    const int kinds = static_cast<int>(reply.contains("box")) + static_cast<int>(reply.contains("rle")) +
                      static_cast<int>(reply.contains("absent"));
    if (kinds != 1 || reply.size() != 2) {
      throw ProtocolError("prediction must carry exactly one of box/rle/absent: " + reply.dump());
    }
    if (reply.contains("absent")) {
      if (reply.at("absent") != true) throw ProtocolError("\"absent\" must be true");
      return Absent{};
    }
    TargetState state;
    try {
      state = state_from_json(reply);
    } catch (const Error& e) {
      throw ProtocolError(std::string("bad prediction geometry: ") + e.what());
    }
    if (const BinaryMask* m = std::get_if<BinaryMask>(&state)) {
      if (m->height() != height_ || m->width() != width_) {
        throw ProtocolError("predicted mask size differs from the frame size");
      }
    }
    return state;
  }

  void end() override {
    send(json{{"cmd", "end"}});
    proc_.close_stdin();
    const int code = proc_.wait(options_.frame_timeout);
    if (code != 0) throw DriverError("tracker exited with status " + std::to_string(code));
  }

  std::vector<TranscriptLine> transcript() const override { return transcript_; }

 private:
  void send(const json& msg) {
    const std::string line = msg.dump();
    if (options_.keep_transcript) transcript_.push_back({true, line});
    proc_.write_line(line);
  }

  json receive() {
    const auto line = proc_.read_line(options_.frame_timeout);
    if (!line) throw DriverError("tracker closed its output");
    if (options_.keep_transcript) transcript_.push_back({false, *line});
    try {
      return json::parse(*line);
    } catch (const json::parse_error&) {
      throw ProtocolError("unparseable tracker reply: " + line->substr(0, 200));
    }
  }

  Subprocess proc_;
  std::string seq_;
  int height_;
  int width_;
  SubprocessOptions options_;
  std::vector<TranscriptLine> transcript_;
};

}  // namespace

SubprocessDriver::SubprocessDriver(std::string command_template, SubprocessOptions options)
    : command_(std::move(command_template)), options_(options) {}

std::string SubprocessDriver::expand(const SequencePair& pair, View view) const {
  const ViewSequence& v = pair.view(view);
  std::string cmd = command_;
  replace_all(cmd, "{seq}", shell_quote(pair.id));
  replace_all(cmd, "{view}", shell_quote(view_name(view)));
  replace_all(cmd, "{frames}", shell_quote(v.frames));
  replace_all(cmd, "{annotations}", shell_quote(v.annotations_path.string()));
  replace_all(cmd, "{offset}", std::to_string(v.frame_offset));
  return cmd;
}

std::unique_ptr<TrackerSession> SubprocessDriver::open(const SequencePair& pair, View view) const {
  const ViewSequence& v = pair.view(view);
  return std::make_unique<SubprocessSession>(expand(pair, view), pair.id, v.height, v.width, options_);
}

std::string SubprocessDriver::describe() const { return "cmd:" + command_; }

// ---------------------------------------------------------------------------
// SOPE

namespace {

Representation infer_repr(const PredictionTrack& p) {
  for (const TargetState& s : p.states) {
    if (std::holds_alternative<BinaryMask>(s)) return Representation::mask;
  }
  return Representation::box;
}

TargetState init_state(const TargetState& gt, Representation repr, const ViewSequence& v) {
  if (repr == Representation::mask) return state_mask(gt, v.height, v.width);
  if (const auto b = state_box(gt)) return *b;
  return gt;
}

}  // namespace

RunRecord run_sope(const SequencePair& pair, const TrackerDriver& driver, View view,
                   const RunOptions& options) {
  const ViewSequence& v = pair.view(view);
  const AnnotationTrack& gt = v.annotations;
  RunRecord record;
  record.pair_id = pair.id;
  record.view = view;
  record.protocol = options.protocol;
  record.run_index = options.run_index;

  const TargetState* first = gt.find(0);
  if (!first || is_absent(*first)) throw RunFailure("no target at t=0 to initialize with", record);

  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };
  std::unique_ptr<TrackerSession> session;
  try {
    session = driver.open(pair, view);
    const Representation init_repr = driver.output_repr().value_or(
        std::holds_alternative<BinaryMask>(*first) ? Representation::mask : Representation::box);
    session->init(FrameRef{0, v.frame_path(0)}, init_state(*first, init_repr, v));
    for (int t = 1; t < gt.frame_count; ++t) {
      TargetState pred = session->track(FrameRef{t, v.frame_path(t)});
      ++record.frames_presented;
      if (gt.find(t)) record.predictions.push(t, std::move(pred));
    }
    session->end();
  } catch (const Error& e) {
    if (session) record.transcript = session->transcript();
    record.wall_time = elapsed();
    throw RunFailure(e.what(), std::move(record));
  }
  record.transcript = session->transcript();
  record.wall_time = elapsed();
  record.repr = driver.output_repr().value_or(infer_repr(record.predictions));
  return record;
}

ShortTermSplit extract_short_term(const SequencePair& pair, int min_len) {
  ShortTermSplit out;
  const AnnotationTrack& ref = pair.fpv.annotations;
  const int step = ref.grid_step();
  const std::vector<VisibilityRun> runs = visibility_runs(ref);
  for (size_t k = 0; k < runs.size(); ++k) {
    const VisibilityRun& run = runs[k];
    if (run.length < min_len) {
      ++out.dropped;
      continue;
    }
    const int last_frame = std::min(run.end + step, ref.frame_count) - 1;
    SequencePair sub;
    sub.id = pair.id + "#" + std::to_string(k);
    sub.parent_id = pair.source_id();
    sub.parent_offset = pair.parent_offset + run.start;
    for (View view : {View::fpv, View::tpv}) {
      const ViewSequence& src = pair.view(view);
      ViewSequence& dst = sub.view(view);
      dst = src;
      dst.frame_offset = src.frame_offset + run.start;
      std::vector<int> ts;
      std::vector<TargetState> states;
      for (int t = run.start; t <= run.end; t += step) {
        ts.push_back(t - run.start);
        states.push_back(*src.annotations.find(t));
      }
      dst.annotations = make_track(std::move(ts), std::move(states), last_frame - run.start + 1,
                                   src.annotations.fps, src.annotations.annotation_rate);
    }
    out.pairs.push_back(std::move(sub));
  }
  return out;
}

std::vector<SequenceScore> DatasetEvaluation::scores() const {
  std::vector<SequenceScore> out;
  out.reserve(sequences.size());
  for (const SequenceEvaluation& s : sequences) out.push_back(s.score);
  return out;
}

namespace {

struct Unit {
  const SequencePair* pair = nullptr;
  View view = View::fpv;
  int run_index = -1;
  size_t group = 0;
};

struct UnitResult {
  std::optional<SequenceEvaluation> eval;
  std::string error;
};

UnitResult evaluate_unit(const Unit& unit, const TrackerDriver& driver, Protocol protocol) {
  UnitResult result;
  try {
    const RunRecord record =
        run_sope(*unit.pair, driver, unit.view, RunOptions{protocol, unit.run_index});
    const ViewSequence& v = unit.pair->view(unit.view);
    ScoredSequence scored = score_frames(record.predictions, v, record.repr);
    SequenceEvaluation eval;
    eval.pair_id = unit.pair->id;
    eval.source_id = unit.pair->source_id();
    eval.source_offset = unit.pair->parent_offset;
    eval.view = unit.view;
    eval.repr = record.repr;
    eval.score = summarize(scored.frames, unit.pair->id, unit.view,
                           static_cast<double>(v.annotations.weight()));
    eval.frames = std::move(scored.frames);
    eval.gt_absent_count = scored.gt_absent_count;
    eval.pred_on_absent_count = scored.pred_on_absent_count;
    eval.wall_time = record.wall_time;
    result.eval = std::move(eval);
  } catch (const Error& e) {
    result.error = e.what();
  }
  return result;
}

}  // namespace

DatasetEvaluation evaluate_dataset(const DatasetManifest& manifest, const TrackerDriver& driver,
                                   const EvalOptions& options) {
  DatasetEvaluation out;
  out.protocol = options.protocol;
  out.views = options.views;
  if (out.views.empty()) throw ConstraintError("no views requested");

  // Short-term sub-pairs are owned here so units can point at them.
  std::vector<SequencePair> sub_pairs;
  std::vector<std::pair<const SequencePair*, int>> groups;
  if (options.protocol == Protocol::short_term) {
    std::vector<std::pair<size_t, int>> origin;
    for (const SequencePair& pair : manifest.pairs) {
      ShortTermSplit split = extract_short_term(pair, options.min_run_len);
      out.short_term_dropped += split.dropped;
      for (SequencePair& sp : split.pairs) {
        const int index = std::stoi(sp.id.substr(sp.id.rfind('#') + 1));
        origin.emplace_back(sub_pairs.size(), index);
        sub_pairs.push_back(std::move(sp));
      }
    }
    for (const auto& [i, index] : origin) groups.emplace_back(&sub_pairs[i], index);
  } else {
    for (const SequencePair& pair : manifest.pairs) groups.emplace_back(&pair, -1);
  }

  std::vector<Unit> units;
  for (size_t g = 0; g < groups.size(); ++g) {
    for (View v : options.views) units.push_back({groups[g].first, v, groups[g].second, g});
  }

  std::vector<UnitResult> results(units.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < units.size(); i = next++) {
      results[i] = evaluate_unit(units[i], driver, options.protocol);
    }
  };
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
  }

  std::vector<bool> group_ok(groups.size(), true);
  for (size_t i = 0; i < units.size(); ++i) {
    if (!results[i].eval) {
      group_ok[units[i].group] = false;
      out.failures.push_back({units[i].pair->id, units[i].view, results[i].error});
    }
  }
  for (size_t i = 0; i < units.size(); ++i) {
    if (group_ok[units[i].group]) out.sequences.push_back(std::move(*results[i].eval));
  }
  for (bool ok : group_ok) {
    if (ok) {
      ++out.evaluated_pairs;
    } else {
      ++out.excluded_pairs;
    }
  }
  return out;
}

}  // namespace vista
