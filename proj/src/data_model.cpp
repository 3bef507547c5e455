#include "vista/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "vista/error.hpp"
#include "vista/track_io.hpp"

namespace vista {
namespace fs = std::filesystem;
using nlohmann::json;

const char* view_name(View view) { return view == View::fpv ? "fpv" : "tpv"; }

View parse_view(const std::string& name) {
  if (name == "fpv") return View::fpv;
  if (name == "tpv") return View::tpv;
  throw ParseError("unknown view '" + name + "'");
}

const char* representation_name(Representation r) { return r == Representation::box ? "box" : "mask"; }

Representation parse_representation(const std::string& name) {
  if (name == "box") return Representation::box;
  if (name == "mask") return Representation::mask;
  throw ParseError("unknown representation '" + name + "'");
}

std::optional<Box> state_box(const TargetState& s) {
  if (const Box* b = std::get_if<Box>(&s)) return *b;
  if (const BinaryMask* m = std::get_if<BinaryMask>(&s)) {
    if (m->is_empty()) return std::nullopt;
    return mask_to_box(*m);
  }
  return std::nullopt;
}

BinaryMask state_mask(const TargetState& s, int height, int width) {
  if (const BinaryMask* m = std::get_if<BinaryMask>(&s)) return *m;
  if (const Box* b = std::get_if<Box>(&s)) return box_fill_mask(*b, height, width);
  return BinaryMask::empty(height, width);
}

int AnnotationTrack::grid_step() const {
  const double step = fps / annotation_rate;
  return static_cast<int>(std::lround(step));
}

size_t AnnotationTrack::weight() const {
  return static_cast<size_t>(
      std::count_if(states.begin(), states.end(), [](const TargetState& s) { return !is_absent(s); }));
}

const TargetState* AnnotationTrack::find(int t) const {
  const auto it = std::lower_bound(timestamps.begin(), timestamps.end(), t);
  if (it == timestamps.end() || *it != t) return nullptr;
  return &states[static_cast<size_t>(it - timestamps.begin())];
}

std::vector<int> AnnotationTrack::visible_timestamps() const {
  std::vector<int> out;
  for (size_t i = 0; i < timestamps.size(); ++i) {
    if (!is_absent(states[i])) out.push_back(timestamps[i]);
  }
  return out;
}

const TargetState* PredictionTrack::find(int t) const {
  const auto it = std::lower_bound(timestamps.begin(), timestamps.end(), t);
  if (it == timestamps.end() || *it != t) return nullptr;
  return &states[static_cast<size_t>(it - timestamps.begin())];
}

void PredictionTrack::push(int t, TargetState state) {
  if (!timestamps.empty() && t <= timestamps.back()) {
    throw ConstraintError("prediction timestamps must be strictly increasing");
  }
  timestamps.push_back(t);
  states.push_back(std::move(state));
}

fs::path ViewSequence::frame_path(int t) const {
  const int index = t + frame_offset;
  if (frames.find('%') != std::string::npos) {
    char buf[4096];
    std::snprintf(buf, sizeof(buf), frames.c_str(), index);
    return fs::path(buf);
  }
  char name[32];
  std::snprintf(name, sizeof(name), "%06d.jpg", index);
  return fs::path(frames) / name;
}

const char* violation_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::length_mismatch: return "length mismatch";
    case ViolationKind::annotation_sets_differ: return "annotation sets differ";
    case ViolationKind::initial_annotation_missing: return "initial annotation missing";
    case ViolationKind::geometry_out_of_bounds: return "geometry out of bounds";
    case ViolationKind::grid_mismatch: return "grid mismatch";
    case ViolationKind::frame_missing: return "frame missing";
  }
  return "?";
}

namespace {

constexpr double kBoundsEps = 1e-6;

void add(std::vector<Violation>& out, ViolationKind kind, const std::string& detail) {
  out.push_back({kind, std::string(violation_name(kind)) + (detail.empty() ? "" : ": " + detail)});
}

void check_geometry(const ViewSequence& v, std::vector<Violation>& out) {
  const auto& track = v.annotations;
  for (size_t i = 0; i < track.timestamps.size(); ++i) {
    const TargetState& s = track.states[i];
    const std::string where = std::string(view_name(v.view)) + " t=" + std::to_string(track.timestamps[i]);
    if (const Box* b = std::get_if<Box>(&s)) {
      const bool bad = b->w < 0 || b->h < 0 || b->x < -kBoundsEps || b->y < -kBoundsEps ||
                       b->x + b->w > v.width + kBoundsEps || b->y + b->h > v.height + kBoundsEps;
      if (bad) {
        add(out, ViolationKind::geometry_out_of_bounds,
            where + " box outside " + std::to_string(v.width) + "x" + std::to_string(v.height));
        return;
      }
    } else if (const BinaryMask* m = std::get_if<BinaryMask>(&s)) {
      if (m->height() != v.height || m->width() != v.width) {
        add(out, ViolationKind::geometry_out_of_bounds, where + " mask size differs from frame size");
        return;
      }
    }
  }
}

bool track_well_formed(const AnnotationTrack& t) {
  if (t.timestamps.size() != t.states.size()) return false;
  for (size_t i = 0; i < t.timestamps.size(); ++i) {
    if (t.timestamps[i] < 0 || t.timestamps[i] >= t.frame_count) return false;
    if (i > 0 && t.timestamps[i] <= t.timestamps[i - 1]) return false;
  }
  return true;
}

}  // namespace

std::vector<Violation> validate_pair(const SequencePair& pair, const ValidateOptions& options) {
  std::vector<Violation> out;
  const AnnotationTrack& a = pair.fpv.annotations;
  const AnnotationTrack& b = pair.tpv.annotations;

  if (a.frame_count != b.frame_count) {
    add(out, ViolationKind::length_mismatch,
        "fpv T=" + std::to_string(a.frame_count) + ", tpv T=" + std::to_string(b.frame_count));
  }
  for (const ViewSequence* v : {&pair.fpv, &pair.tpv}) {
    if (!track_well_formed(v->annotations)) {
      add(out, ViolationKind::grid_mismatch,
          std::string(view_name(v->view)) + " timestamps not increasing or out of range");
    }
  }
  const std::vector<int> va = a.visible_timestamps();
  const std::vector<int> vb = b.visible_timestamps();
  if (va != vb) {
    add(out, ViolationKind::annotation_sets_differ,
        "fpv has " + std::to_string(va.size()) + " non-empty annotations, tpv has " +
            std::to_string(vb.size()));
  }
  const bool fpv_init = !va.empty() && va.front() == 0;
  const bool tpv_init = !vb.empty() && vb.front() == 0;
  if (!fpv_init || !tpv_init) {
    std::string which = !fpv_init && !tpv_init ? "both views" : (!fpv_init ? "fpv" : "tpv");
    add(out, ViolationKind::initial_annotation_missing, which + " lack a target at t=0");
  }
  check_geometry(pair.fpv, out);
  check_geometry(pair.tpv, out);

  if (options.check_frames) {
    for (const ViewSequence* v : {&pair.fpv, &pair.tpv}) {
      for (int t : v->annotations.timestamps) {
        if (!fs::exists(v->frame_path(t))) {
          add(out, ViolationKind::frame_missing,
              std::string(view_name(v->view)) + " " + v->frame_path(t).string());
          break;
        }
      }
    }
  }
  return out;
}

std::vector<VisibilityRun> visibility_runs(const AnnotationTrack& track) {
  std::vector<VisibilityRun> runs;
  bool open = false;
  for (size_t i = 0; i < track.timestamps.size(); ++i) {
    const bool visible = !is_absent(track.states[i]);
    if (visible) {
      if (!open) {
        runs.push_back({track.timestamps[i], track.timestamps[i], 0});
        open = true;
      }
      runs.back().end = track.timestamps[i];
      ++runs.back().length;
    } else {
      open = false;
    }
  }
  return runs;
}

AnnotationTrack make_track(std::vector<int> timestamps, std::vector<TargetState> states,
                           int frame_count, double fps, double annotation_rate) {
  if (timestamps.size() != states.size()) throw ConstraintError("timestamps/states size mismatch");
  if (!(fps > 0) || !(annotation_rate > 0)) throw ConstraintError("fps and annotation rate must be positive");
  AnnotationTrack track;
  track.frame_count = frame_count;
  track.fps = fps;
  track.annotation_rate = annotation_rate;
  const double ratio = fps / annotation_rate;
  const int step = track.grid_step();
  if (step < 1 || std::abs(ratio - step) > 1e-9) {
    throw ConstraintError("fps / annotation_rate must be a positive integer");
  }
  for (int t = 0; t < frame_count; t += step) {
    track.timestamps.push_back(t);
    track.states.emplace_back(Absent{});
  }
  for (size_t i = 0; i < timestamps.size(); ++i) {
    const int t = timestamps[i];
    if (t < 0 || t >= frame_count) {
      throw ConstraintError("annotation t=" + std::to_string(t) + " outside [0, " +
                            std::to_string(frame_count - 1) + "]");
    }
    if (t % step != 0) {
      throw ConstraintError("annotation t=" + std::to_string(t) + " is off the annotation grid (step " +
                            std::to_string(step) + ")");
    }
    track.states[static_cast<size_t>(t / step)] = std::move(states[i]);
  }
  return track;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal();
}

std::string relative_to(const fs::path& base, const fs::path& p) {
  if (p.empty()) return {};
  const fs::path abs = fs::absolute(p).lexically_normal();
  const fs::path rel = abs.lexically_relative(base);
  if (rel.empty() || *rel.begin() == "..") return abs.generic_string();
  return rel.generic_string();
}

int probe_frame_count(const ViewSequence& v) {
  int t = 0;
  while (fs::exists(v.frame_path(t))) ++t;
  return t;
}

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": bad \"" + key + "\": " + e.what());
  }
}

// Boxes that overlap the frame are clamped to it; boxes entirely outside are
// kept as-is so validation can report them.
void clamp_boxes(ViewSequence& v) {
  for (TargetState& s : v.annotations.states) {
    Box* b = std::get_if<Box>(&s);
    if (!b || b->w < 0 || b->h < 0) continue;
    const double x0 = std::max(0.0, b->x), y0 = std::max(0.0, b->y);
    const double x1 = std::min<double>(v.width, b->x + b->w);
    const double y1 = std::min<double>(v.height, b->y + b->h);
    if (x1 < x0 || y1 < y0) continue;
    *b = Box{x0, y0, x1 - x0, y1 - y0};
  }
}

ViewSequence parse_view_entry(const json& j, View view, const fs::path& base, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": view entry must be an object");
  ViewSequence v;
  v.view = view;
  v.frames = resolve(base, required<std::string>(j, "frames", where)).string();
  if (v.frames.find('%') == std::string::npos) v.frames = fs::path(v.frames).string();
  v.width = required<int>(j, "width", where);
  v.height = required<int>(j, "height", where);
  if (v.width <= 0 || v.height <= 0) throw ParseError(where + ": width/height must be positive");
  const double fps = j.value("fps", 5.0);
  const double rate = j.value("annotation_rate", 1.0);
  v.annotations_path = resolve(base, required<std::string>(j, "annotations", where));
  if (j.contains("detections")) v.detections_path = resolve(base, j.at("detections").get<std::string>());

  int frame_count = 0;
  if (j.contains("frame_count")) {
    frame_count = required<int>(j, "frame_count", where);
  } else {
    frame_count = probe_frame_count(v);
    if (frame_count == 0) {
      throw ParseError(where + ": no \"frame_count\" and no frames found at " + v.frame_path(0).string());
    }
  }

  std::vector<TrackEntry> entries = read_track_file(v.annotations_path);
  std::vector<int> ts;
  std::vector<TargetState> states;
  for (TrackEntry& e : entries) {
    ts.push_back(e.t);
    states.push_back(std::move(e.state));
  }
  try {
    v.annotations = make_track(std::move(ts), std::move(states), frame_count, fps, rate);
  } catch (const ConstraintError& e) {
    throw ConstraintError(where + ": grid mismatch: " + e.what());
  }
  clamp_boxes(v);
  return v;
}

json view_to_json(const ViewSequence& v, const fs::path& base) {
  json j;
  j["frames"] = relative_to(base, fs::path(v.frames));
  j["width"] = v.width;
  j["height"] = v.height;
  j["fps"] = v.annotations.fps;
  j["annotation_rate"] = v.annotations.annotation_rate;
  j["frame_count"] = v.annotations.frame_count;
  j["annotations"] = relative_to(base, v.annotations_path);
  if (!v.detections_path.empty()) j["detections"] = relative_to(base, v.detections_path);
  return j;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path, bool validate) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const fs::path base = fs::absolute(path).parent_path();
  DatasetManifest manifest;
  const std::string split = doc.value("split", std::string("test"));
  if (split == "test") {
    manifest.split = Split::test;
  } else if (split == "train") {
    manifest.split = Split::train;
  } else {
    throw ParseError(path.string() + ": unknown split '" + split + "'");
  }
  if (!doc.contains("pairs") || !doc.at("pairs").is_array()) {
    throw ParseError(path.string() + ": missing \"pairs\" array");
  }
  std::set<std::string> ids;
  for (const json& p : doc.at("pairs")) {
    SequencePair pair;
    pair.id = required<std::string>(p, "id", path.string());
    const std::string where = "pair " + pair.id;
    if (!ids.insert(pair.id).second) throw ConstraintError(where + ": duplicate pair id");
    if (!p.contains("fpv") || !p.contains("tpv")) throw ParseError(where + ": needs \"fpv\" and \"tpv\"");
    pair.fpv = parse_view_entry(p.at("fpv"), View::fpv, base, where + " fpv");
    pair.tpv = parse_view_entry(p.at("tpv"), View::tpv, base, where + " tpv");
    const auto violations = validate ? validate_pair(pair) : std::vector<Violation>{};
    if (!violations.empty()) throw ConstraintError(where + ": " + violations.front().message);
    manifest.pairs.push_back(std::move(pair));
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = fs::absolute(path).parent_path();
  fs::create_directories(base);
  json doc;
  doc["split"] = manifest.split == Split::test ? "test" : "train";
  doc["pairs"] = json::array();
  for (const SequencePair& pair : manifest.pairs) {
    json p;
    p["id"] = pair.id;
    for (View v : {View::fpv, View::tpv}) {
      const ViewSequence& seq = pair.view(v);
      fs::path ann = seq.annotations_path.empty()
                         ? base / "annotations" / pair.id / (std::string(view_name(v)) + ".jsonl")
                         : fs::absolute(seq.annotations_path);
      write_track_file(ann, entries_of(seq.annotations), false);
      ViewSequence copy = seq;
      copy.annotations_path = ann;
      p[view_name(v)] = view_to_json(copy, base);
    }
    doc["pairs"].push_back(std::move(p));
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

bool same_structure(const SequencePair& a, const SequencePair& b) {
  auto same_view = [](const ViewSequence& x, const ViewSequence& y) {
    return x.view == y.view && fs::path(x.frames).lexically_normal() == fs::path(y.frames).lexically_normal() &&
           x.width == y.width && x.height == y.height &&
           x.annotations.timestamps == y.annotations.timestamps &&
           x.annotations.states == y.annotations.states &&
           x.annotations.frame_count == y.annotations.frame_count &&
           x.annotations.fps == y.annotations.fps &&
           x.annotations.annotation_rate == y.annotations.annotation_rate;
  };
  return a.id == b.id && same_view(a.fpv, b.fpv) && same_view(a.tpv, b.tpv);
}

}  // namespace vista
