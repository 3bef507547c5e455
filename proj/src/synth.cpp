#include "vista/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "vista/error.hpp"
#include "vista/image.hpp"
#include "vista/track_io.hpp"

namespace vista {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json trajectory_to_json(const SynthTrajectory& t) {
  return json{{"width", t.width},
              {"height", t.height},
              {"box", {t.start.x, t.start.y, t.start.w, t.start.h}},
              {"velocity", {t.vx, t.vy}},
              {"growth", {t.dw, t.dh}}};
}

SynthTrajectory trajectory_from_json(const json& j, SynthTrajectory t) {
  t.width = j.value("width", t.width);
  t.height = j.value("height", t.height);
  if (j.contains("box")) {
    const auto b = j["box"].get<std::vector<double>>();
    if (b.size() != 4) throw ParseError("synth spec: box must be [x, y, w, h]");
    t.start = Box{b[0], b[1], b[2], b[3]};
  }
  if (j.contains("velocity")) {
    const auto v = j["velocity"].get<std::vector<double>>();
    if (v.size() != 2) throw ParseError("synth spec: velocity must be [vx, vy]");
    t.vx = v[0];
    t.vy = v[1];
  }
  if (j.contains("growth")) {
    const auto g = j["growth"].get<std::vector<double>>();
    if (g.size() != 2) throw ParseError("synth spec: growth must be [dw, dh]");
    t.dw = g[0];
    t.dh = g[1];
  }
  return t;
}

Box box_at(const SynthTrajectory& tr, int t, const SynthSpec& spec, double jx, double jy) {
  Box b{tr.start.x + jx + tr.vx * t, tr.start.y + jy + tr.vy * t, tr.start.w + tr.dw * t,
        tr.start.h + tr.dh * t};
  if (spec.integer_boxes) b = Box{std::round(b.x), std::round(b.y), std::round(b.w), std::round(b.h)};
  b.w = std::max(b.w, 1.0);
  b.h = std::max(b.h, 1.0);
  if (spec.clamp) {
    b.w = std::min(b.w, static_cast<double>(tr.width));
    b.h = std::min(b.h, static_cast<double>(tr.height));
    b.x = std::clamp(b.x, 0.0, tr.width - b.w);
    b.y = std::clamp(b.y, 0.0, tr.height - b.h);
  } else if (b.x < 0.0 || b.y < 0.0 || b.x + b.w > tr.width || b.y + b.h > tr.height) {
    throw ConstraintError("synth " + spec.id + ": trajectory exits the frame at t=" + std::to_string(t));
  }
  return b;
}

void render_frame(const fs::path& path, const SynthSpec& spec, const SynthTrajectory& tr,
                  const std::optional<Box>& target) {
  RgbImage img(tr.width, tr.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) std::copy(spec.background.begin(), spec.background.end(), img.pixel(x, y));
  }
  if (target) {
    const PixelSpan xs = pixel_span(target->x, target->w, img.width);
    const PixelSpan ys = pixel_span(target->y, target->h, img.height);
    for (int y = ys.begin; y < ys.end; ++y) {
      for (int x = xs.begin; x < xs.end; ++x) {
        std::copy(spec.target_color.begin(), spec.target_color.end(), img.pixel(x, y));
      }
    }
  }
  write_image(path, img);
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<double> parse_schedule(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      if (v < 0.0 || v > 1.0) throw ParseError("overlap schedule values must lie in [0, 1]");
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw ParseError("bad overlap schedule value '" + item + "'");
    }
  }
  if (out.empty()) throw ParseError("empty overlap schedule");
  return out;
}

std::string join_schedule(const std::vector<double>& s) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + format_number(s[i]);
  return out;
}

}  // namespace

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec s;
  try {
    s.id = j.value("id", s.id);
    s.frame_count = j.value("frame_count", s.frame_count);
    s.fps = j.value("fps", s.fps);
    s.annotation_rate = j.value("annotation_rate", s.annotation_rate);
    if (j.contains("fpv")) s.fpv = trajectory_from_json(j["fpv"], s.fpv);
    if (j.contains("tpv")) s.tpv = trajectory_from_json(j["tpv"], s.tpv);
    s.gaps = j.value("gaps", s.gaps);
    s.jitter = j.value("jitter", s.jitter);
    s.integer_boxes = j.value("integer_boxes", s.integer_boxes);
    s.clamp = j.value("clamp", s.clamp);
    if (j.contains("repr")) s.repr = parse_representation(j["repr"].get<std::string>());
    s.render = j.value("render", s.render);
    s.background = j.value("background", s.background);
    s.target_color = j.value("target_color", s.target_color);
  } catch (const json::exception& e) {
    throw ParseError(std::string("synth spec: ") + e.what());
  }
  return s;
}

json synth_spec_to_json(const SynthSpec& s) {
  return json{{"id", s.id},
              {"frame_count", s.frame_count},
              {"fps", s.fps},
              {"annotation_rate", s.annotation_rate},
              {"fpv", trajectory_to_json(s.fpv)},
              {"tpv", trajectory_to_json(s.tpv)},
              {"gaps", s.gaps},
              {"jitter", s.jitter},
              {"integer_boxes", s.integer_boxes},
              {"clamp", s.clamp},
              {"repr", representation_name(s.repr)},
              {"render", s.render},
              {"background", s.background},
              {"target_color", s.target_color}};
}

SequencePair generate_pair(const SynthSpec& spec, uint64_t seed, const std::optional<fs::path>& out_dir) {
  if (spec.frame_count < 1) throw ConstraintError("synth " + spec.id + ": frame_count must be positive");
  const std::set<int> gaps(spec.gaps.begin(), spec.gaps.end());
  if (gaps.count(0)) throw ConstraintError("synth " + spec.id + ": the first annotation cannot be a gap");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> shift(-spec.jitter, spec.jitter);

  SequencePair pair;
  pair.id = spec.id;
  for (View v : {View::fpv, View::tpv}) {
    const SynthTrajectory& tr = v == View::fpv ? spec.fpv : spec.tpv;
    const double jx = spec.jitter > 0.0 ? shift(rng) : 0.0;
    const double jy = spec.jitter > 0.0 ? shift(rng) : 0.0;

    ViewSequence& seq = pair.view(v);
    seq.view = v;
    seq.width = tr.width;
    seq.height = tr.height;

    // make_track validates the grid step; build an empty track first to get it.
    const int step = make_track({}, {}, spec.frame_count, spec.fps, spec.annotation_rate).grid_step();
    std::vector<int> ts;
    std::vector<TargetState> states;
    for (int t = 0; t < spec.frame_count; t += step) {
      if (gaps.count(t / step)) continue;
      const Box b = box_at(tr, t, spec, jx, jy);
      ts.push_back(t);
      if (spec.repr == Representation::mask) {
        states.emplace_back(box_fill_mask(b, tr.height, tr.width));
      } else {
        states.emplace_back(b);
      }
    }
    seq.annotations = make_track(ts, std::move(states), spec.frame_count, spec.fps, spec.annotation_rate);

    if (out_dir) {
      const fs::path frames_dir = *out_dir / "frames" / spec.id / view_name(v);
      seq.frames = (frames_dir / "%06d.png").string();
      seq.annotations_path = *out_dir / "annotations" / spec.id / (std::string(view_name(v)) + ".jsonl");
      write_track_file(seq.annotations_path, entries_of(seq.annotations), false);
      if (spec.render) {
        for (int t = 0; t < spec.frame_count; ++t) {
          std::optional<Box> target;
          if (!gaps.count(t / step)) target = box_at(tr, t, spec, jx, jy);
          render_frame(seq.frame_path(t), spec, tr, target);
        }
      }
    } else {
      seq.frames = "frames/" + spec.id + "/" + view_name(v) + "/%06d.png";
    }
  }
  return pair;
}

std::vector<SynthSpec> make_suite(int n, uint64_t seed, Representation repr) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto integer = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  std::vector<SynthSpec> out;
  for (int i = 0; i < n; ++i) {
    SynthSpec s;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%03d", i);
    s.id = id;
    s.repr = repr;
    const int step = static_cast<int>(std::lround(s.fps / s.annotation_rate));
    const int annotations = integer(6, 40);
    s.frame_count = annotations * step - integer(0, step - 1);

    auto random_trajectory = [&](int width, int height, double min_size, double max_size) {
      SynthTrajectory tr;
      tr.width = width;
      tr.height = height;
      tr.start.w = std::round(uniform(min_size, max_size));
      tr.start.h = std::round(uniform(min_size, max_size));
      tr.start.x = std::round(uniform(0.0, width - tr.start.w));
      tr.start.y = std::round(uniform(0.0, height - tr.start.h));
      tr.vx = uniform(-2.0, 2.0);
      tr.vy = uniform(-2.0, 2.0);
      tr.dw = uniform(-0.05, 0.3);
      tr.dh = uniform(-0.05, 0.3);
      return tr;
    };
    s.fpv = random_trajectory(640, 480, 24.0, 120.0);
    s.tpv = random_trajectory(480, 360, 16.0, 80.0);

    int segments = integer(0, 3) == 0 ? 0 : integer(1, 2);
    while (segments-- > 0 && annotations > 5) {
      const int start = integer(2, annotations - 2);
      const int len = integer(1, 3);
      for (int k = start; k < std::min(start + len, annotations); ++k) s.gaps.push_back(k);
    }
    std::sort(s.gaps.begin(), s.gaps.end());
    s.gaps.erase(std::unique(s.gaps.begin(), s.gaps.end()), s.gaps.end());
    out.push_back(std::move(s));
  }
  return out;
}

DatasetManifest write_dataset(const std::vector<SynthSpec>& specs, uint64_t seed, const fs::path& out_dir) {
  DatasetManifest manifest;
  manifest.split = Split::test;
  for (size_t i = 0; i < specs.size(); ++i) {
    manifest.pairs.push_back(generate_pair(specs[i], seed + i, out_dir));
  }
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

// ---------------------------------------------------------------------------
// Scripted trackers

ScriptedTracker ScriptedTracker::parse(const std::string& text) {
  const size_t colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  ScriptedTracker s;
  auto require_args = [&](bool want) {
    if (want == args.empty()) {
      throw ParseError("scripted tracker '" + kind + (want ? "' needs arguments" : "' takes no arguments"));
    }
  };
  if (kind == "perfect") {
    require_args(false);
    s.kind = ScriptKind::perfect;
  } else if (kind == "echo_init") {
    require_args(false);
    s.kind = ScriptKind::echo_init;
  } else if (kind == "fixed_offset") {
    require_args(true);
    s.kind = ScriptKind::fixed_offset;
    double dx = 0.0, dy = 0.0;
    char trailing = 0;
    if (std::sscanf(args.c_str(), "%lf,%lf%c", &dx, &dy, &trailing) != 2) {
      throw ParseError("fixed_offset expects DX,DY");
    }
    s.dx = dx;
    s.dy = dy;
  } else if (kind == "lose_after") {
    require_args(true);
    s.kind = ScriptKind::lose_after;
    try {
      size_t used = 0;
      s.k = std::stoi(args, &used);
      if (used != args.size() || s.k < 0) throw std::invalid_argument(args);
    } catch (const std::logic_error&) {
      throw ParseError("lose_after expects a non-negative integer");
    }
  } else if (kind == "view_biased") {
    require_args(true);
    s.kind = ScriptKind::view_biased;
    const size_t slash = args.find('/');
    if (slash == std::string::npos) throw ParseError("view_biased expects FPV/TPV schedules");
    s.fpv_schedule = parse_schedule(args.substr(0, slash));
    s.tpv_schedule = parse_schedule(args.substr(slash + 1));
  } else {
    throw ParseError("unknown scripted tracker '" + kind + "'");
  }
  return s;
}

std::string ScriptedTracker::describe() const {
  switch (kind) {
    case ScriptKind::perfect: return "perfect";
    case ScriptKind::echo_init: return "echo_init";
    case ScriptKind::fixed_offset: return "fixed_offset:" + format_number(dx) + "," + format_number(dy);
    case ScriptKind::lose_after: return "lose_after:" + std::to_string(k);
    case ScriptKind::view_biased: return "view_biased:" + join_schedule(fpv_schedule) + "/" + join_schedule(tpv_schedule);
  }
  return "?";
}

double scheduled_overlap(const ScriptedTracker& tracker, View view, int i) {
  const std::vector<double>& s = view == View::fpv ? tracker.fpv_schedule : tracker.tpv_schedule;
  if (s.empty()) throw MetricError("empty overlap schedule");
  return s[static_cast<size_t>(i) % s.size()];
}

namespace {

// Horizontal shift giving IoU o between two boxes of equal size:
// (w - dx) / (w + dx) = o.
double biased_shift(double w, double o) { return w * (1.0 - o) / (1.0 + o); }

}  // namespace

ScriptedScript::ScriptedScript(ScriptedTracker tracker, View view, TruthLookup truth)
    : tracker_(std::move(tracker)), view_(view), truth_(std::move(truth)) {}

void ScriptedScript::init(const TargetState& state) {
  init_ = state;
  scored_ = 0;
}

TargetState ScriptedScript::predict(int t) {
  if (tracker_.kind == ScriptKind::echo_init) return init_;
  const TargetState* gt = truth_(t);
  if (!gt || is_absent(*gt)) return Absent{};
  const int i = scored_++;
  switch (tracker_.kind) {
    case ScriptKind::perfect: return *gt;
    case ScriptKind::lose_after: return i < tracker_.k ? *gt : TargetState{Absent{}};
    case ScriptKind::fixed_offset: {
      Box b = *state_box(*gt);
      b.x += tracker_.dx;
      b.y += tracker_.dy;
      return b;
    }
    case ScriptKind::view_biased: {
      const double o = scheduled_overlap(tracker_, view_, i);
      if (o <= 0.0) return Absent{};
      Box b = *state_box(*gt);
      b.x += biased_shift(b.w, o);
      return b;
    }
    case ScriptKind::echo_init: break;
  }
  return Absent{};
}

namespace {

class ScriptedSession final : public TrackerSession {
 public:
  ScriptedSession(const ScriptedTracker& tracker, View view, const AnnotationTrack& gt)
      : script_(tracker, view, [&gt](int t) -> const TargetState* { return gt.find(t); }) {}

  void init(const FrameRef&, const TargetState& state) override { script_.init(state); }
  TargetState track(const FrameRef& frame) override { return script_.predict(frame.t); }
  void end() override {}

 private:
  ScriptedScript script_;
};

}  // namespace

ScriptedDriver::ScriptedDriver(ScriptedTracker tracker, Representation repr)
    : tracker_(std::move(tracker)), repr_(repr) {}

std::unique_ptr<TrackerSession> ScriptedDriver::open(const SequencePair& pair, View view) const {
  return std::make_unique<ScriptedSession>(tracker_, view, pair.view(view).annotations);
}

std::string ScriptedDriver::describe() const { return "scripted:" + tracker_.describe(); }

ExpectedScore expected_scores(const SequencePair& pair, const ScriptedTracker& tracker, View view,
                              Representation repr) {
  if (tracker.kind == ScriptKind::echo_init) throw MetricError("echo_init has no closed-form scores");
  const bool shifted = tracker.kind == ScriptKind::fixed_offset || tracker.kind == ScriptKind::view_biased;
  if (shifted && repr == Representation::mask) {
    throw MetricError(tracker.describe() + " has no closed form for mask scoring");
  }
  const double inf = std::numeric_limits<double>::infinity();
  const AnnotationTrack& gt = pair.view(view).annotations;

  std::vector<double> o, d, region;
  int i = 0;
  for (size_t n = 0; n < gt.timestamps.size(); ++n) {
    if (gt.timestamps[n] == 0 || is_absent(gt.states[n])) continue;
    const Box b = *state_box(gt.states[n]);
    switch (tracker.kind) {
      case ScriptKind::perfect:
        o.push_back(1.0);
        d.push_back(0.0);
        region.push_back(1.0);
        break;
      case ScriptKind::lose_after: {
        const bool kept = i < tracker.k;
        o.push_back(kept ? 1.0 : 0.0);
        d.push_back(kept ? 0.0 : inf);
        region.push_back(kept ? 1.0 : 0.0);
        break;
      }
      case ScriptKind::fixed_offset: {
        const double iw = std::max(0.0, b.w - std::abs(tracker.dx));
        const double ih = std::max(0.0, b.h - std::abs(tracker.dy));
        const double inter = iw * ih;
        o.push_back(inter / (2.0 * b.w * b.h - inter));
        d.push_back(std::hypot(tracker.dx / b.w, tracker.dy / b.h));
        break;
      }
      case ScriptKind::view_biased: {
        const double v = scheduled_overlap(tracker, view, i);
        o.push_back(v);
        d.push_back(v > 0.0 ? (1.0 - v) / (1.0 + v) : inf);
        break;
      }
      case ScriptKind::echo_init: break;
    }
    ++i;
  }
  if (o.empty()) throw MetricError("no scored annotations in " + pair.id + " " + view_name(view));

  const double n = static_cast<double>(o.size());
  ExpectedScore out;
  SequenceScore& s = out.score;
  s.pair_id = pair.id;
  s.view = view;
  s.weight = static_cast<double>(gt.weight());

  double sum = 0.0, precise = 0.0, run = 0.0, prefix = inf;
  for (size_t k = 0; k < o.size(); ++k) {
    sum += o[k];
    precise += std::max(0.0, 0.5 - d[k]);
    prefix = std::min(prefix, o[k]);
    if (prefix > 0.0) run += std::min(prefix, 0.5);
  }
  s.auc = 100.0 * sum / n;
  s.nps = 100.0 * precise / (0.5 * n);
  s.gsr = 100.0 * run / (0.5 * n);
  if (!region.empty()) {
    double r = 0.0;
    for (double v : region) r += v;
    s.j = s.f = s.jf = 100.0 * r / n;
    out.has_region = true;
  } else {
    s.j = s.f = s.jf = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace vista
