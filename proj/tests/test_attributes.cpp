#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "vista/attributes.hpp"
#include "vista/error.hpp"
#include "vista/image.hpp"
#include "vista/synth.hpp"

using namespace vista;
namespace fs = std::filesystem;

namespace {

// Track on a step-1 grid with one state per timestamp (nullopt for Absent).
AnnotationTrack track_of(const std::vector<std::optional<Box>>& boxes) {
  std::vector<int> ts;
  std::vector<TargetState> states;
  for (size_t i = 0; i < boxes.size(); ++i) {
    ts.push_back(static_cast<int>(i));
    states.push_back(boxes[i] ? TargetState(*boxes[i]) : TargetState(Absent{}));
  }
  return make_track(ts, states, static_cast<int>(boxes.size()), 1.0, 1.0);
}

SequencePair pair_of(const std::vector<std::optional<Box>>& fpv, const std::vector<std::optional<Box>>& tpv) {
  SequencePair p;
  p.id = "a";
  p.fpv.view = View::fpv;
  p.tpv.view = View::tpv;
  for (ViewSequence* v : {&p.fpv, &p.tpv}) {
    v->width = 640;
    v->height = 480;
  }
  p.fpv.annotations = track_of(fpv);
  p.tpv.annotations = track_of(tpv);
  return p;
}

std::vector<bool> labels(const FrameAttributeSet& s, Attribute a) {
  std::vector<bool> out;
  for (const FrameAttributes& f : s.frames()) out.push_back(f.has(a));
  return out;
}

std::vector<bool> defined(const FrameAttributeSet& s, Attribute a) {
  std::vector<bool> out;
  for (const FrameAttributes& f : s.frames()) out.push_back(f.defined(a));
  return out;
}

// Embedding at a chosen cosine to e0 = (1, 0).
std::vector<float> at_cosine(double c) { return {static_cast<float>(c), static_cast<float>(std::sqrt(1 - c * c))}; }

ExternalDetections hoi_detections(const std::vector<std::vector<HandObjectDetection>>& per_frame) {
  ExternalDetections d;
  for (size_t t = 0; t < per_frame.size(); ++t) {
    if (!per_frame[t].empty()) d.frames[static_cast<int>(t)].hand_objects = per_frame[t];
  }
  return d;
}

RgbImage filled(int w, int h, std::array<uint8_t, 3> rgb) {
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) std::copy(rgb.begin(), rgb.end(), img.pixel(x, y));
  }
  return img;
}

}  // namespace

TEST(Resolution, Thresholds) {
  EXPECT_EQ(resolution_class(31 * 31), Attribute::LR);
  EXPECT_EQ(resolution_class(33 * 33), Attribute::MR);
  EXPECT_EQ(resolution_class(97 * 97), Attribute::HR);
  EXPECT_EQ(resolution_class(1024), Attribute::MR);
  EXPECT_EQ(resolution_class(9216), Attribute::MR);
}

TEST(BoxAttributes, ConstantBox) {
  const Box b{100, 100, 40, 30};
  const FrameAttributeSet s = box_attributes(track_of({b, b, b, b}));
  for (Attribute a : {Attribute::SV, Attribute::ARC, Attribute::FM, Attribute::LR, Attribute::HR}) {
    EXPECT_EQ(s.count(a), 0u) << attribute_name(a);
  }
  EXPECT_EQ(s.count(Attribute::MR), 4u);
}

TEST(BoxAttributes, ScaleAndAspectChange) {
  const double side = std::sqrt(2.5 * 400.0);
  const FrameAttributeSet s = box_attributes(track_of({Box{10, 10, 20, 20}, Box{10, 10, side, side},
                                                       Box{10, 10, 20, 50}, Box{10, 10, 20, 20}}));
  EXPECT_EQ(labels(s, Attribute::SV), (std::vector<bool>{false, true, true, false}));
  EXPECT_EQ(labels(s, Attribute::ARC), (std::vector<bool>{false, false, true, false}));
}

TEST(BoxAttributes, FastMotionNeverOnRunStart) {
  // 10x10 box: size 10. Moves of 11 and 9 pixels, then a gap, then a jump.
  const FrameAttributeSet s = box_attributes(track_of(
      {Box{0, 0, 10, 10}, Box{11, 0, 10, 10}, Box{20, 0, 10, 10}, std::nullopt, Box{300, 300, 10, 10},
       Box{300, 300, 10, 10}}));
  EXPECT_EQ(labels(s, Attribute::FM), (std::vector<bool>{false, true, false, false, false, false}));
  EXPECT_EQ(defined(s, Attribute::FM), (std::vector<bool>{false, true, true, false, false, true}));
}

TEST(BoxAttributes, DegenerateFirstBoxLeavesScaleUndefined) {
  const FrameAttributeSet s = box_attributes(track_of({Box{5, 5, 0, 10}, Box{5, 5, 10, 10}}));
  EXPECT_EQ(defined(s, Attribute::SV), (std::vector<bool>{false, false}));
  EXPECT_EQ(defined(s, Attribute::ARC), (std::vector<bool>{false, false}));
  ASSERT_EQ(s.notes.size(), 1u);
  EXPECT_NE(s.notes[0].find("zero area"), std::string::npos);
}

TEST(BoxAttributes, ResolutionBinsPartitionVisibleFrames) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> size(1.0, 150.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<std::optional<Box>> boxes;
    for (int t = 0; t < 30; ++t) {
      if (t > 0 && rng() % 4 == 0) {
        boxes.push_back(std::nullopt);
      } else {
        boxes.push_back(Box{10, 10, size(rng), size(rng)});
      }
    }
    const FrameAttributeSet s = box_attributes(track_of(boxes));
    for (const FrameAttributes& f : s.frames()) {
      const int n = f.has(Attribute::LR) + f.has(Attribute::MR) + f.has(Attribute::HR);
      EXPECT_EQ(n, f.visible ? 1 : 0);
      if (!f.visible) { EXPECT_TRUE(f.labels.none()); }
    }
  }
}

TEST(BoxAttributes, ThresholdChangesOnlyTouchTheirAttribute) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> size(5.0, 120.0), pos(0.0, 300.0);
  std::vector<std::optional<Box>> boxes;
  for (int t = 0; t < 60; ++t) boxes.push_back(Box{pos(rng), pos(rng), size(rng), size(rng)});
  const AnnotationTrack track = track_of(boxes);
  const FrameAttributeSet base = box_attributes(track);

  AttributeThresholds th;
  th.low_res_area = 50.0 * 50.0;
  const FrameAttributeSet res = box_attributes(track, th);
  th = {};
  th.scale_low = 0.2;
  th.scale_high = 5.0;
  const FrameAttributeSet scale = box_attributes(track, th);
  for (Attribute a : kAllAttributes) {
    const bool res_related = a == Attribute::LR || a == Attribute::MR;
    const bool scale_related = a == Attribute::SV || a == Attribute::ARC;
    if (!res_related) { EXPECT_EQ(labels(res, a), labels(base, a)) << attribute_name(a); }
    if (!scale_related) { EXPECT_EQ(labels(scale, a), labels(base, a)) << attribute_name(a); }
  }
  EXPECT_NE(labels(res, Attribute::LR), labels(base, Attribute::LR));
  EXPECT_NE(labels(scale, Attribute::SV), labels(base, Attribute::SV));
}

TEST(FrameAttributeSet, OffGridAndAbsent) {
  FrameAttributeSet s(track_of({Box{0, 0, 1, 1}, std::nullopt}));
  EXPECT_THROW(s.set(7, Attribute::SV, true), ConstraintError);
  s.set(1, Attribute::SV, true);
  EXPECT_FALSE(s.has(1, Attribute::SV));
  EXPECT_EQ(parse_attribute("hoi"), Attribute::HOI);
  EXPECT_THROW(parse_attribute("XYZ"), ParseError);
}

TEST(Laplacian, UniformCheckerAndRandomPatchesMatchOracle) {
  const std::vector<double> uniform(12 * 9, 77.0);
  EXPECT_EQ(*laplacian_variance(uniform, 12, 9), 0.0);

  std::vector<double> checker(16 * 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) checker[y * 16 + x] = ((x + y) % 2) ? 255.0 : 0.0;
  }
  const double expected = oracle::laplacian_variance(checker, 16, 16);
  EXPECT_GT(expected, 100.0);
  EXPECT_NEAR(*laplacian_variance(checker, 16, 16), expected, 1e-9 * expected);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> px(0.0, 255.0);
  for (int i = 0; i < 50; ++i) {
    const int w = 3 + static_cast<int>(rng() % 30), h = 3 + static_cast<int>(rng() % 30);
    std::vector<double> g(static_cast<size_t>(w) * h);
    for (double& v : g) v = px(rng);
    const double o = oracle::laplacian_variance(g, w, h);
    EXPECT_NEAR(*laplacian_variance(g, w, h), o, 1e-9 * std::max(1.0, o));
  }
  EXPECT_FALSE(laplacian_variance(std::vector<double>(4, 0.0), 2, 2).has_value());
}

TEST(PixelAttributes, IlluminationAndBlurFromFrames) {
  oracle::TempDir dir;
  ViewSequence v;
  v.view = View::fpv;
  v.width = 64;
  v.height = 48;
  v.frames = (dir.path() / "%06d.png").string();
  const Box box{10, 10, 20, 16};
  v.annotations = track_of({box, box, box, box});

  // 0: uniform grey; 1: same grey; 2: much brighter uniform; 3: checkerboard.
  write_image(v.frame_path(0), filled(64, 48, {100, 100, 100}));
  write_image(v.frame_path(1), filled(64, 48, {100, 100, 100}));
  write_image(v.frame_path(2), filled(64, 48, {180, 180, 180}));
  RgbImage checker = filled(64, 48, {100, 100, 100});
  for (int y = 10; y < 26; ++y) {
    for (int x = 10; x < 30; ++x) {
      const uint8_t c = ((x + y) % 2) ? 200 : 0;
      std::fill(checker.pixel(x, y), checker.pixel(x, y) + 3, c);
    }
  }
  write_image(v.frame_path(3), checker);

  const FrameAttributeSet s = pixel_attributes(v);
  EXPECT_EQ(labels(s, Attribute::IV), (std::vector<bool>{false, false, true, false}));
  EXPECT_EQ(labels(s, Attribute::MB), (std::vector<bool>{true, true, true, false}));

  fs::remove(v.frame_path(2));
  EXPECT_THROW(pixel_attributes(v), MissingInputError);

  SequencePair p;
  p.id = "px";
  p.fpv = v;
  p.tpv = v;
  p.tpv.view = View::tpv;
  const PairLabels pl = compute_attributes(p, {.pixel = true, .thresholds = {}});
  EXPECT_FALSE(pl.fpv.available(Attribute::IV));
  EXPECT_TRUE(pl.fpv.available(Attribute::SV));
  ASSERT_FALSE(pl.fpv.notes.empty());
  EXPECT_NE(pl.fpv.notes.back().find("IV/MB unavailable"), std::string::npos);
}

TEST(MotionState, StationaryJumpingAndStraddling) {
  const Box b{100, 100, 10, 10};
  auto shifted = [&](double dx) { return Box{b.x + dx, b.y, b.w, b.h}; };
  PairLabels m = motion_state(pair_of({b, b, b}, {b, b, b}));
  EXPECT_EQ(labels(m.tpv, Attribute::STA), (std::vector<bool>{false, true, true}));

  m = motion_state(pair_of({b, b, b}, {b, shifted(50), shifted(100)}));
  EXPECT_EQ(labels(m.tpv, Attribute::MOV), (std::vector<bool>{false, true, true}));

  // Shifts of 3 px (IoU 70/130 = 0.538) and 4 px (IoU 60/140 = 0.429).
  m = motion_state(pair_of({b, b, b, b, b}, {b, shifted(3), shifted(7), std::nullopt, b}));
  EXPECT_EQ(labels(m.tpv, Attribute::STA), (std::vector<bool>{false, true, false, false, false}));
  EXPECT_EQ(labels(m.tpv, Attribute::MOV), (std::vector<bool>{false, false, true, false, false}));
  EXPECT_EQ(defined(m.tpv, Attribute::STA), (std::vector<bool>{false, true, true, false, false}));
}

TEST(MotionState, LabelsAreIdenticalAcrossViews) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> jump(-12.0, 12.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::optional<Box>> fpv, tpv;
    Box b{200, 200, 20, 20};
    for (int t = 0; t < 40; ++t) {
      const bool gap = t > 0 && rng() % 6 == 0;
      b.x += jump(rng);
      fpv.push_back(gap ? std::nullopt : std::optional<Box>(Box{50, 50, 30, 30}));
      tpv.push_back(gap ? std::nullopt : std::optional<Box>(b));
    }
    const PairLabels m = motion_state(pair_of(fpv, tpv));
    for (Attribute a : {Attribute::STA, Attribute::MOV}) {
      EXPECT_EQ(labels(m.fpv, a), labels(m.tpv, a));
      EXPECT_EQ(defined(m.fpv, a), defined(m.tpv, a));
    }
    for (const FrameAttributes& f : m.tpv.frames()) EXPECT_FALSE(f.has(Attribute::STA) && f.has(Attribute::MOV));
  }
}

TEST(Distractors, Examples) {
  const Box gt{100, 100, 50, 50};
  const AnnotationTrack track = track_of({gt, gt, gt, gt});
  ExternalDetections d;
  d.target_embedding = {1.0f, 0.0f};
  EXPECT_EQ(distractor_attr(track, d).count(Attribute::DIS), 0u);

  d.frames[1].candidates.push_back({Box{102, 102, 50, 50}, {1.0f, 0.0f}});  // same object
  d.frames[2].candidates.push_back({Box{300, 300, 50, 50}, at_cosine(0.4)});  // dissimilar
  // IoU 0.3: overlap w chosen so that w*50 / (5000 - w*50) = 0.3.
  const double w = 0.3 * 100.0 / 1.3;
  d.frames[3].candidates.push_back({Box{100 + 50 - w, 100, 50, 50}, at_cosine(0.6)});
  EXPECT_NEAR(box_iou(d.frames[3].candidates[0].box, gt), 0.3, 1e-12);
  EXPECT_EQ(labels(distractor_attr(track, d), Attribute::DIS), (std::vector<bool>{false, false, false, true}));
}

TEST(Distractors, FileFormatAndErrors) {
  oracle::TempDir dir;
  const fs::path f = dir.path() / "det.jsonl";
  std::ofstream(f) << R"({"t":0,"target_emb":[0.6,0.8]})" << "\n"
                   << R"({"t":1,"candidates":[{"box":[1,2,3,4],"emb":[0.8,0.6]}],"hoi":[{"box":[5,6,7,8],"state":true}]})"
                   << "\n";
  const ExternalDetections d = load_detections(f);
  EXPECT_EQ(d.target_embedding.size(), 2u);
  EXPECT_EQ(d.frames.at(1).candidates.size(), 1u);
  EXPECT_TRUE(d.frames.at(1).hand_objects.at(0).interaction);
  EXPECT_NEAR(cosine_similarity(d.frames.at(1).candidates[0].embedding, d.target_embedding), 0.96, 1e-6);

  std::ofstream(dir.path() / "bad.jsonl") << R"({"t":0,"target_emb":[0.5,0.5]})" << "\n";
  EXPECT_THROW(load_detections(dir.path() / "bad.jsonl"), ParseError);
  EXPECT_THROW(load_detections(dir.path() / "none.jsonl"), MissingInputError);
}

TEST(HandObject, SingleDetectionNeverTurnsOn) {
  const Box g{100, 100, 40, 40};
  const std::vector<std::optional<Box>> boxes(6, g);
  const auto d = hoi_detections({{}, {}, {{g, true}}, {}, {}, {}});
  const PairLabels h = hoi_attr(pair_of(boxes, boxes), d);
  EXPECT_EQ(h.fpv.count(Attribute::HOI), 0u);
}

TEST(HandObject, TwoConsecutiveThenNothingStaysOn) {
  const Box g{100, 100, 40, 40};
  const std::vector<std::optional<Box>> boxes(8, g);
  const auto d = hoi_detections({{}, {{g, true}}, {{g, true}}, {}, {}, {}, {}, {}});
  const PairLabels h = hoi_attr(pair_of(boxes, boxes), d);
  EXPECT_EQ(labels(h.fpv, Attribute::HOI), (std::vector<bool>{false, false, true, true, true, true, true, true}));
  EXPECT_EQ(labels(h.tpv, Attribute::HOI), labels(h.fpv, Attribute::HOI));
}

TEST(HandObject, TwoLowOverlapFramesTurnItOff) {
  const Box g{100, 100, 40, 40};
  // Object box with IoU 0.2 against g.
  const double w = 0.2 * 80.0 / 1.2;
  const Box low{100 + 40 - w, 100, 40, 40};
  ASSERT_NEAR(box_iou(low, g), 0.2, 1e-12);
  const std::vector<std::optional<Box>> boxes(9, g);
  const HandObjectDetection on{g, true}, off{low, false};
  const auto d = hoi_detections({{on}, {on}, {on}, {on}, {off}, {off}, {}, {off}, {}});
  const PairLabels h = hoi_attr(pair_of(boxes, boxes), d);
  EXPECT_EQ(labels(h.fpv, Attribute::HOI),
            (std::vector<bool>{false, true, true, true, true, false, false, false, false}));
}

TEST(HandObject, OneLowFrameOrInteractionWithoutOverlapKeepsItOn) {
  const Box g{100, 100, 40, 40};
  const Box far{400, 300, 40, 40};
  const std::vector<std::optional<Box>> boxes(7, g);
  const HandObjectDetection on{g, true}, off{far, false}, busy{far, true};
  const auto d = hoi_detections({{on}, {on}, {off}, {on}, {busy}, {busy}, {off}});
  const PairLabels h = hoi_attr(pair_of(boxes, boxes), d);
  EXPECT_EQ(labels(h.fpv, Attribute::HOI), (std::vector<bool>{false, true, true, true, true, true, true}));
}

TEST(HandObject, DeterministicAndAbsentTimestampsUnlabelled) {
  std::mt19937 rng(5);
  const Box g{100, 100, 40, 40};
  std::vector<std::optional<Box>> boxes;
  std::vector<std::vector<HandObjectDetection>> det;
  for (int t = 0; t < 60; ++t) {
    boxes.push_back(t > 0 && rng() % 7 == 0 ? std::nullopt : std::optional<Box>(g));
    std::vector<HandObjectDetection> frame;
    if (rng() % 3) frame.push_back({rng() % 2 ? g : Box{0, 0, 10, 10}, rng() % 2 == 0});
    det.push_back(frame);
  }
  const SequencePair p = pair_of(boxes, boxes);
  const auto a = hoi_attr(p, hoi_detections(det));
  const auto b = hoi_attr(p, hoi_detections(det));
  EXPECT_EQ(labels(a.fpv, Attribute::HOI), labels(b.fpv, Attribute::HOI));
  for (const FrameAttributes& f : a.fpv.frames()) {
    if (!f.visible) { EXPECT_FALSE(f.defined(Attribute::HOI)); }
  }
}

TEST(CenterDistanceLabels, MaskBarycenterOrBoxCenter) {
  ViewSequence v;
  v.width = 100;
  v.height = 100;
  oracle::Raster r(100, 100);
  r.at(95, 50) = 1;
  r.at(95, 51) = 1;
  v.annotations = make_track({0, 1, 2}, {Box{45, 45, 11, 11}, BinaryMask::from_raster(100, 100, r.px), Box{0, 0, 2, 2}},
                             3, 1.0, 1.0);
  const CenterDistanceLabels c = center_distance_labels(v);
  EXPECT_EQ(c.from_box, 2u);
  EXPECT_EQ(c.from_mask, 1u);
  EXPECT_EQ(c.bins.at(0), CenterDistanceBin::within_25);
  EXPECT_EQ(c.bins.at(1), CenterDistanceBin::within_50);
  EXPECT_EQ(c.bins.at(2), CenterDistanceBin::within_75);
  EXPECT_EQ(c.bins.size(), 3u);
}

namespace {

SequenceEvaluation eval_of(const std::string& id, View view, const std::vector<double>& overlaps) {
  SequenceEvaluation e;
  e.pair_id = e.source_id = id;
  e.view = view;
  for (size_t i = 0; i < overlaps.size(); ++i) {
    FrameScore f;
    f.t = static_cast<int>(i) + 1;
    f.overlap = f.j = overlaps[i];
    f.distance = 0.0;
    e.frames.push_back(f);
  }
  e.score = summarize(e.frames, id, view, static_cast<double>(overlaps.size() + 1));
  return e;
}

PairLabels flags_on(const std::string&, const std::vector<int>& fpv_ts, const std::vector<int>& tpv_ts, int n) {
  std::vector<std::optional<Box>> boxes(static_cast<size_t>(n), Box{0, 0, 10, 10});
  PairLabels pl{FrameAttributeSet(track_of(boxes)), FrameAttributeSet(track_of(boxes))};
  for (FrameAttributeSet* s : {&pl.fpv, &pl.tpv}) s->mark_available(Attribute::IV);
  for (int t : fpv_ts) pl.fpv.set(t, Attribute::IV, true);
  for (int t : tpv_ts) pl.tpv.set(t, Attribute::IV, true);
  return pl;
}

}  // namespace

TEST(AttributeScores, AllFramesEqualsUnrestricted) {
  const std::vector<SequenceEvaluation> evals = {eval_of("a", View::fpv, {0.9, 0.7, 0.5}),
                                                 eval_of("a", View::tpv, {0.4, 0.4, 0.4}),
                                                 eval_of("b", View::fpv, {1.0}), eval_of("b", View::tpv, {0.0})};
  std::map<std::string, PairLabels> labels{{"a", flags_on("a", {0, 1, 2, 3}, {0, 1, 2, 3}, 4)},
                                           {"b", flags_on("b", {0, 1}, {0, 1}, 2)}};
  const BreakdownRow row = attribute_filtered_scores(evals, labels, Attribute::IV);
  std::vector<SequenceScore> scores;
  for (const auto& e : evals) scores.push_back(e.score);
  const Aggregate all = aggregate_scores(scores, true);
  for (Metric m : kAllMetrics) {
    EXPECT_DOUBLE_EQ(row.fpv->mean(m), all.fpv->mean(m));
    EXPECT_DOUBLE_EQ(row.tpv->mean(m), all.tpv->mean(m));
  }
  EXPECT_EQ(row.frames[0], 6u);
}

TEST(AttributeScores, SubsetMatchesHandComputation) {
  const std::vector<SequenceEvaluation> evals = {eval_of("a", View::fpv, {0.9, 0.7, 0.5}),
                                                 eval_of("a", View::tpv, {0.4, 0.2, 0.6}),
                                                 eval_of("b", View::fpv, {1.0, 0.0}), eval_of("b", View::tpv, {0.3, 0.1})};
  // a: FPV flags t=0 (init) and t=2, 3; TPV flags t=1. b: FPV flags t=2; TPV none.
  std::map<std::string, PairLabels> labels{{"a", flags_on("a", {0, 2, 3}, {1}, 4)}, {"b", flags_on("b", {2}, {}, 3)}};
  const BreakdownRow row = attribute_filtered_scores(evals, labels, Attribute::IV);
  // FPV: a -> frames {0.7, 0.5}, weight 3; b -> frame {0.0}, weight 1.
  EXPECT_NEAR(row.fpv->mean(Metric::auc), (60.0 * 3 + 0.0 * 1) / 4.0, 1e-12);
  // TPV: only a -> {0.4}, weight 1.
  EXPECT_NEAR(row.tpv->mean(Metric::auc), 40.0, 1e-12);
  EXPECT_NEAR((*row.delta)[0], 45.0 - 40.0, 1e-12);
  EXPECT_EQ(row.frames[0], 4u);
  EXPECT_EQ(row.frames[1], 1u);

  std::map<std::string, PairLabels> none{{"a", flags_on("a", {}, {}, 4)}, {"b", flags_on("b", {}, {}, 3)}};
  EXPECT_THROW(attribute_filtered_scores(evals, none, Attribute::IV), MetricError);
  EXPECT_THROW(attribute_filtered_scores(evals, labels, Attribute::DIS), MissingInputError);
}

TEST(ComputeAttributes, DetectionsFileDrivesDisAndHoi) {
  oracle::TempDir dir;
  SynthSpec spec;
  spec.id = "d";
  spec.frame_count = 20;
  SequencePair p = generate_pair(spec, 1);
  PairLabels pl = compute_attributes(p);
  EXPECT_FALSE(pl.fpv.available(Attribute::DIS));
  EXPECT_FALSE(pl.fpv.available(Attribute::HOI));
  EXPECT_TRUE(pl.tpv.available(Attribute::STA));

  p.fpv.detections_path = dir.path() / "missing.jsonl";
  pl = compute_attributes(p);
  EXPECT_FALSE(pl.fpv.available(Attribute::HOI));
  EXPECT_FALSE(pl.fpv.notes.empty());

  const Box g = std::get<Box>(p.fpv.annotations.states[1]);
  const Box g2 = std::get<Box>(p.fpv.annotations.states[2]);
  std::ofstream(dir.path() / "det.jsonl")
      << R"({"t":0,"target_emb":[1,0]})" << "\n"
      << R"({"t":5,"hoi":[{"box":[)" << g.x << "," << g.y << "," << g.w << "," << g.h << R"(],"state":true}]})" << "\n"
      << R"({"t":10,"hoi":[{"box":[)" << g2.x << "," << g2.y << "," << g2.w << "," << g2.h
      << R"(],"state":true}],"candidates":[{"box":[0,0,5,5],"emb":[1,0]}]})" << "\n";
  p.fpv.detections_path = dir.path() / "det.jsonl";
  pl = compute_attributes(p);
  EXPECT_TRUE(pl.tpv.available(Attribute::HOI));
  EXPECT_EQ(labels(pl.fpv, Attribute::HOI), (std::vector<bool>{false, false, true, true}));
  EXPECT_EQ(labels(pl.tpv, Attribute::HOI), labels(pl.fpv, Attribute::HOI));
  EXPECT_EQ(labels(pl.fpv, Attribute::DIS), (std::vector<bool>{false, false, true, false}));
  EXPECT_FALSE(pl.tpv.available(Attribute::DIS));
}
