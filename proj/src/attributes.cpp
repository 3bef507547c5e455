#include "vista/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "vista/error.hpp"
#include "vista/image.hpp"

namespace vista {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

size_t bit(Attribute a) { return static_cast<size_t>(a); }

bool outside_ratio(double r, const AttributeThresholds& th) {
  return r < th.scale_low || r > th.scale_high;
}

}  // namespace

const char* attribute_name(Attribute a) {
  switch (a) {
    case Attribute::SV: return "SV";
    case Attribute::ARC: return "ARC";
    case Attribute::IV: return "IV";
    case Attribute::DIS: return "DIS";
    case Attribute::MB: return "MB";
    case Attribute::FM: return "FM";
    case Attribute::LR: return "LR";
    case Attribute::MR: return "MR";
    case Attribute::HR: return "HR";
    case Attribute::STA: return "STA";
    case Attribute::MOV: return "MOV";
    case Attribute::HOI: return "HOI";
  }
  return "?";
}

Attribute parse_attribute(const std::string& name) {
  std::string upper = name;
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  for (Attribute a : kAllAttributes) {
    if (upper == attribute_name(a)) return a;
  }
  throw ParseError("unknown attribute '" + name + "'");
}

FrameAttributeSet::FrameAttributeSet(const AnnotationTrack& track) {
  frames_.reserve(track.timestamps.size());
  for (size_t i = 0; i < track.timestamps.size(); ++i) {
    FrameAttributes fa;
    fa.t = track.timestamps[i];
    fa.visible = !is_absent(track.states[i]);
    frames_.push_back(fa);
  }
}

const FrameAttributes* FrameAttributeSet::find(int t) const {
  const auto it = std::lower_bound(frames_.begin(), frames_.end(), t,
                                   [](const FrameAttributes& f, int v) { return f.t < v; });
  return (it != frames_.end() && it->t == t) ? &*it : nullptr;
}

FrameAttributes* FrameAttributeSet::find_mutable(int t) {
  return const_cast<FrameAttributes*>(std::as_const(*this).find(t));
}

void FrameAttributeSet::set(int t, Attribute a, bool value) {
  FrameAttributes* f = find_mutable(t);
  if (!f) throw ConstraintError("attribute label at t=" + std::to_string(t) + " is off the annotation grid");
  if (!f->visible) return;
  f->known.set(bit(a));
  f->labels.set(bit(a), value);
}

bool FrameAttributeSet::has(int t, Attribute a) const {
  const FrameAttributes* f = find(t);
  return f && f->has(a);
}

size_t FrameAttributeSet::count(Attribute a) const {
  return static_cast<size_t>(std::count_if(frames_.begin(), frames_.end(),
                                           [a](const FrameAttributes& f) { return f.has(a); }));
}

void FrameAttributeSet::merge(const FrameAttributeSet& other) {
  if (frames_.empty()) {
    *this = other;
    return;
  }
  for (Attribute a : kAllAttributes) {
    if (!other.available(a)) continue;
    mark_available(a);
    for (FrameAttributes& f : frames_) {
      const FrameAttributes* o = other.find(f.t);
      const bool known = o && o->defined(a);
      f.known.set(bit(a), known);
      f.labels.set(bit(a), known && o->has(a));
    }
  }
  notes.insert(notes.end(), other.notes.begin(), other.notes.end());
}

Attribute resolution_class(double area, const AttributeThresholds& th) {
  if (area < th.low_res_area) return Attribute::LR;
  if (area > th.high_res_area) return Attribute::HR;
  return Attribute::MR;
}

FrameAttributeSet box_attributes(const AnnotationTrack& track, const AttributeThresholds& th) {
  FrameAttributeSet out(track);
  for (Attribute a : {Attribute::SV, Attribute::ARC, Attribute::FM, Attribute::LR, Attribute::MR, Attribute::HR}) {
    out.mark_available(a);
  }

  std::optional<Box> first;
  for (size_t i = 0; i < track.states.size() && !first; ++i) first = state_box(track.states[i]);
  const bool reference_ok = first && !first->degenerate();
  if (first && !reference_ok) {
    out.notes.push_back("SV/ARC undefined: first annotation has zero area");
  }

  std::optional<Box> prev;
  for (size_t i = 0; i < track.timestamps.size(); ++i) {
    const int t = track.timestamps[i];
    const std::optional<Box> b = state_box(track.states[i]);
    if (!b) {
      // Absent (or an empty mask) closes the visibility run.
      prev.reset();
      continue;
    }
    const Attribute res = resolution_class(b->area(), th);
    for (Attribute r : {Attribute::LR, Attribute::MR, Attribute::HR}) out.set(t, r, r == res);

    if (reference_ok) {
      out.set(t, Attribute::SV, outside_ratio(b->area() / first->area(), th));
      if (b->h > 0.0 && b->w > 0.0) {
        out.set(t, Attribute::ARC, outside_ratio((b->w / b->h) / (first->w / first->h), th));
      }
    }
    if (prev) {
      const double shift = std::hypot(b->center_x() - prev->center_x(), b->center_y() - prev->center_y());
      out.set(t, Attribute::FM, shift > std::sqrt(prev->area()));
    }
    prev = b;
  }
  return out;
}

std::optional<double> laplacian_variance(const std::vector<double>& gray, int width, int height) {
  if (width < 3 || height < 3) return std::nullopt;
  auto at = [&](int x, int y) { return gray[static_cast<size_t>(y) * width + x]; };
  double sum = 0.0, sum_sq = 0.0;
  const double n = static_cast<double>(width - 2) * (height - 2);
  for (int y = 1; y + 1 < height; ++y) {
    for (int x = 1; x + 1 < width; ++x) {
      const double v = at(x, y - 1) + at(x - 1, y) + at(x + 1, y) + at(x, y + 1) - 4.0 * at(x, y);
      sum += v;
      sum_sq += v * v;
    }
  }
  const double mean = sum / n;
  return std::max(0.0, sum_sq / n - mean * mean);
}

namespace {

struct Crop {
  int width = 0;
  int height = 0;
  std::array<double, 3> mean_rgb{};
  std::vector<double> gray;
};

std::optional<Crop> crop_of(const RgbImage& image, const Box& box) {
  const PixelSpan xs = pixel_span(box.x, box.w, image.width);
  const PixelSpan ys = pixel_span(box.y, box.h, image.height);
  if (xs.size() == 0 || ys.size() == 0) return std::nullopt;
  Crop c;
  c.width = xs.size();
  c.height = ys.size();
  c.gray.reserve(static_cast<size_t>(c.width) * c.height);
  for (int y = ys.begin; y < ys.end; ++y) {
    for (int x = xs.begin; x < xs.end; ++x) {
      const uint8_t* p = image.pixel(x, y);
      for (int k = 0; k < 3; ++k) c.mean_rgb[k] += p[k];
      c.gray.push_back(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
    }
  }
  const double n = static_cast<double>(c.gray.size()) * 255.0;
  for (double& m : c.mean_rgb) m /= n;
  return c;
}

}  // namespace

FrameAttributeSet pixel_attributes(const ViewSequence& view, const AttributeThresholds& th) {
  const AnnotationTrack& track = view.annotations;
  FrameAttributeSet out(track);
  out.mark_available(Attribute::IV);
  out.mark_available(Attribute::MB);

  std::optional<std::array<double, 3>> reference;
  for (size_t i = 0; i < track.timestamps.size(); ++i) {
    const int t = track.timestamps[i];
    const std::optional<Box> b = state_box(track.states[i]);
    if (!b) continue;
    const RgbImage image = read_image(view.frame_path(t));
    const std::optional<Crop> crop = crop_of(image, *b);
    if (!crop) continue;
    if (!reference) reference = crop->mean_rgb;
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) d2 += std::pow(crop->mean_rgb[k] - (*reference)[k], 2);
    out.set(t, Attribute::IV, std::sqrt(d2) > th.illumination);
    if (const auto var = laplacian_variance(crop->gray, crop->width, crop->height)) {
      out.set(t, Attribute::MB, *var < th.blur_variance);
    }
  }
  return out;
}

PairLabels motion_state(const SequencePair& pair, const AttributeThresholds& th) {
  PairLabels out{FrameAttributeSet(pair.fpv.annotations), FrameAttributeSet(pair.tpv.annotations)};
  for (FrameAttributeSet* s : {&out.fpv, &out.tpv}) {
    s->mark_available(Attribute::STA);
    s->mark_available(Attribute::MOV);
  }
  const AnnotationTrack& tpv = pair.tpv.annotations;
  std::optional<Box> prev;
  for (size_t i = 0; i < tpv.timestamps.size(); ++i) {
    const int t = tpv.timestamps[i];
    const std::optional<Box> b = state_box(tpv.states[i]);
    if (!b) {
      prev.reset();
      continue;
    }
    if (prev) {
      const bool still = box_iou(*prev, *b) > th.static_iou;
      for (FrameAttributeSet* s : {&out.fpv, &out.tpv}) {
        if (!s->find(t)) continue;
        s->set(t, Attribute::STA, still);
        s->set(t, Attribute::MOV, !still);
      }
    }
    prev = b;
  }
  return out;
}

namespace {

Box box_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ParseError(where + ": box must be [x, y, w, h]");
  return Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

std::vector<float> embedding_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": embedding must be a non-empty array");
  std::vector<float> v = j.get<std::vector<float>>();
  double norm = 0.0;
  for (float x : v) norm += static_cast<double>(x) * x;
  norm = std::sqrt(norm);
  if (std::abs(norm - 1.0) > 1e-3) {
    throw ParseError(where + ": embedding is not unit-norm (norm " + std::to_string(norm) + ")");
  }
  return v;
}

}  // namespace

ExternalDetections load_detections(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("detections file not found: " + path.string());
  ExternalDetections out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    try {
      const json j = json::parse(line);
      if (!j.is_object() || !j.contains("t") || !j["t"].is_number_integer()) {
        throw ParseError(where + ": missing integer \"t\"");
      }
      const int t = j["t"].get<int>();
      if (j.contains("target_emb")) {
        if (!out.target_embedding.empty()) throw ParseError(where + ": duplicate target embedding");
        out.target_embedding = embedding_from_json(j["target_emb"], where);
      }
      FrameDetections& frame = out.frames[t];
      if (j.contains("candidates")) {
        for (const json& c : j["candidates"]) {
          frame.candidates.push_back({box_from_json(c.at("box"), where), embedding_from_json(c.at("emb"), where)});
        }
      }
      if (j.contains("hoi")) {
        for (const json& h : j["hoi"]) {
          frame.hand_objects.push_back({box_from_json(h.at("box"), where), h.value("state", false)});
        }
      }
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return out;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ParseError("embeddings of different length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

FrameAttributeSet distractor_attr(const AnnotationTrack& track, const ExternalDetections& detections,
                                  const AttributeThresholds& th) {
  if (detections.target_embedding.empty()) throw MissingInputError("detections carry no target embedding");
  FrameAttributeSet out(track);
  out.mark_available(Attribute::DIS);
  for (size_t i = 0; i < track.timestamps.size(); ++i) {
    const int t = track.timestamps[i];
    const std::optional<Box> gt = state_box(track.states[i]);
    if (!gt) continue;
    bool distractor = false;
    if (const auto it = detections.frames.find(t); it != detections.frames.end()) {
      for (const DistractorCandidate& c : it->second.candidates) {
        if (cosine_similarity(c.embedding, detections.target_embedding) > th.distractor_cosine &&
            box_iou(c.box, *gt) < th.distractor_iou) {
          distractor = true;
          break;
        }
      }
    }
    out.set(t, Attribute::DIS, distractor);
  }
  return out;
}

// Off evidence needs at least one detection: a frame without detections says
// nothing either way and leaves the state unchanged.
PairLabels hoi_attr(const SequencePair& pair, const ExternalDetections& fpv_detections,
                    const AttributeThresholds& th) {
  PairLabels out{FrameAttributeSet(pair.fpv.annotations), FrameAttributeSet(pair.tpv.annotations)};
  out.fpv.mark_available(Attribute::HOI);
  out.tpv.mark_available(Attribute::HOI);

  const AnnotationTrack& track = pair.fpv.annotations;
  bool active = false;
  int on_streak = 0, off_streak = 0;
  for (size_t i = 0; i < track.timestamps.size(); ++i) {
    const int t = track.timestamps[i];
    const std::optional<Box> gt = state_box(track.states[i]);
    bool on_evidence = false, off_evidence = false;
    if (const auto it = fpv_detections.frames.find(t);
        it != fpv_detections.frames.end() && !it->second.hand_objects.empty()) {
      bool overlap = false, interaction = false;
      for (const HandObjectDetection& d : it->second.hand_objects) {
        const double iou = gt ? box_iou(d.box, *gt) : 0.0;
        if (iou > th.hoi_iou && d.interaction) on_evidence = true;
        if (iou >= th.hoi_iou) overlap = true;
        if (d.interaction) interaction = true;
      }
      off_evidence = !overlap && !interaction;
    }
    on_streak = on_evidence ? on_streak + 1 : 0;
    off_streak = off_evidence ? off_streak + 1 : 0;
    if (!active && on_streak >= 2) active = true;
    if (active && off_streak >= 2) active = false;

    out.fpv.set(t, Attribute::HOI, active);
    if (out.tpv.find(t)) out.tpv.set(t, Attribute::HOI, active);
  }
  return out;
}

PairLabels compute_attributes(const SequencePair& pair, const AttributeOptions& options) {
  const AttributeThresholds& th = options.thresholds;
  PairLabels out{box_attributes(pair.fpv.annotations, th), box_attributes(pair.tpv.annotations, th)};

  const PairLabels motion = motion_state(pair, th);
  out.fpv.merge(motion.fpv);
  out.tpv.merge(motion.tpv);

  for (View v : {View::fpv, View::tpv}) {
    if (!options.pixel) break;
    try {
      out.view(v).merge(pixel_attributes(pair.view(v), th));
    } catch (const MissingInputError& e) {
      out.view(v).notes.push_back(std::string("IV/MB unavailable: ") + e.what());
    }
  }

  for (View v : {View::fpv, View::tpv}) {
    const ViewSequence& seq = pair.view(v);
    if (seq.detections_path.empty()) continue;
    ExternalDetections det;
    try {
      det = load_detections(seq.detections_path);
    } catch (const MissingInputError& e) {
      out.view(v).notes.push_back(std::string("DIS/HOI unavailable: ") + e.what());
      continue;
    }
    if (!det.target_embedding.empty()) out.view(v).merge(distractor_attr(seq.annotations, det, th));
    if (v == View::fpv) {
      const PairLabels hoi = hoi_attr(pair, det, th);
      out.fpv.merge(hoi.fpv);
      out.tpv.merge(hoi.tpv);
    }
  }
  return out;
}

CenterDistanceLabels center_distance_labels(const ViewSequence& view) {
  CenterDistanceLabels out;
  const AnnotationTrack& track = view.annotations;
  for (size_t i = 0; i < track.timestamps.size(); ++i) {
    const TargetState& s = track.states[i];
    Point p;
    if (const auto* m = std::get_if<BinaryMask>(&s); m && !m->is_empty()) {
      p = barycenter(*m);
      ++out.from_mask;
    } else if (const auto* b = std::get_if<Box>(&s)) {
      p = box_barycenter(*b);
      ++out.from_box;
    } else {
      continue;
    }
    out.bins[track.timestamps[i]] = center_distance_bin(p, view.width, view.height);
  }
  return out;
}

BreakdownRow filtered_breakdown(std::span<const SequenceEvaluation> evals, const std::string& label,
                                const std::function<bool(const SequenceEvaluation&, int)>& keep,
                                bool weighted) {
  BreakdownRow row;
  row.label = label;
  std::vector<SequenceScore> scores;
  for (const SequenceEvaluation& e : evals) {
    const size_t vi = e.view == View::fpv ? 0 : 1;
    std::vector<FrameScore> kept;
    for (const FrameScore& f : e.frames) {
      if (keep(e, f.t + e.source_offset)) kept.push_back(f);
    }
    const bool init_kept = keep(e, e.source_offset);
    const size_t flagged = kept.size() + (init_kept ? 1 : 0);
    row.frames[vi] += flagged;
    const bool has_distance = std::any_of(kept.begin(), kept.end(), [](const FrameScore& f) { return f.distance_valid; });
    if (kept.empty() || !has_distance) continue;
    scores.push_back(summarize(kept, e.pair_id, e.view, static_cast<double>(flagged)));
  }
  if (scores.empty()) throw MetricError("no scored frames labelled '" + label + "'");

  Aggregate agg = aggregate_scores(scores, weighted);
  row.fpv = agg.fpv;
  row.tpv = agg.tpv;
  if (row.fpv && row.tpv) {
    std::array<double, kAllMetrics.size()> d{};
    for (size_t k = 0; k < d.size(); ++k) d[k] = row.fpv->means[k] - row.tpv->means[k];
    row.delta = d;
  }
  return row;
}

BreakdownRow attribute_filtered_scores(std::span<const SequenceEvaluation> evals,
                                       const std::map<std::string, PairLabels>& labels, Attribute attribute,
                                       bool weighted) {
  for (const SequenceEvaluation& e : evals) {
    const auto it = labels.find(e.source_id);
    if (it == labels.end() || !it->second.view(e.view).available(attribute)) {
      throw MissingInputError(std::string("attribute ") + attribute_name(attribute) + " unavailable for " +
                              e.source_id + " " + view_name(e.view));
    }
  }
  return filtered_breakdown(
      evals, attribute_name(attribute),
      [&](const SequenceEvaluation& e, int t) { return labels.at(e.source_id).view(e.view).has(t, attribute); },
      weighted);
}

}  // namespace vista
