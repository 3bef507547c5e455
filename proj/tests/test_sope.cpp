#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "vista/error.hpp"
#include "vista/sope.hpp"
#include "vista/synth.hpp"
#include "vista/track_io.hpp"

using namespace vista;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

SynthSpec small_spec(const std::string& id, int frames = 30, std::vector<int> gaps = {}) {
  SynthSpec s;
  s.id = id;
  s.frame_count = frames;
  s.fpv.vx = 2.0;
  s.fpv.vy = 1.0;
  s.tpv.vx = -1.0;
  s.gaps = std::move(gaps);
  return s;
}

std::string mock_command(const std::string& kind, const std::string& extra = "") {
  return std::string("'") + VISTA_MOCK_TRACKER + "' --kind " + kind +
         " --gt {annotations} --view {view} --offset {offset}" + (extra.empty() ? "" : " " + extra);
}

SubprocessOptions options(std::chrono::milliseconds timeout = std::chrono::milliseconds(10'000),
                          bool transcript = false) {
  SubprocessOptions o;
  o.frame_timeout = timeout;
  o.keep_transcript = transcript;
  return o;
}

std::string failure_message(const SequencePair& pair, const TrackerDriver& driver, View view,
                            int* presented = nullptr) {
  try {
    run_sope(pair, driver, view);
  } catch (const RunFailure& e) {
    if (presented) *presented = e.partial().frames_presented;
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

// Overlaps of a run scored against its own view.
std::vector<double> overlaps_of(const RunRecord& r, const SequencePair& pair) {
  const ViewSequence& v = pair.view(r.view);
  return overlap_series(r.predictions, v.annotations, r.repr, v.height, v.width).overlaps;
}

void expect_same_scores(const DatasetEvaluation& a, const DatasetEvaluation& b) {
  ASSERT_EQ(a.sequences.size(), b.sequences.size());
  for (size_t i = 0; i < a.sequences.size(); ++i) {
    const SequenceScore& x = a.sequences[i].score;
    const SequenceScore& y = b.sequences[i].score;
    EXPECT_EQ(x.pair_id, y.pair_id);
    EXPECT_EQ(x.view, y.view);
    for (Metric m : kAllMetrics) EXPECT_EQ(x.value(m), y.value(m)) << x.pair_id << " " << metric_name(m);
    EXPECT_EQ(x.weight, y.weight);
  }
}

}  // namespace

TEST(Replay, PerfectPredictionsScoreOne) {
  oracle::TempDir dir;
  const SequencePair pair = generate_pair(small_spec("r", 40, {3}), 1);
  for (View v : {View::fpv, View::tpv}) {
    write_track_file(dir.path() / pair.id / (std::string(view_name(v)) + ".jsonl"),
                     entries_of(pair.view(v).annotations), false);
  }
  const ReplayDriver driver(dir.path());
  for (View v : {View::fpv, View::tpv}) {
    const RunRecord r = run_sope(pair, driver, v);
    EXPECT_EQ(r.frames_presented, 39);
    const auto o = overlaps_of(r, pair);
    EXPECT_EQ(o.size(), pair.view(v).annotations.weight() - 1);
    for (double x : o) EXPECT_EQ(x, 1.0);
  }
  SequencePair other = pair;
  other.id = "missing";
  EXPECT_TRUE(contains(failure_message(other, driver, View::fpv), "no predictions"));
}

TEST(Sope, PredictionsOnlyAtGridTimestampsAfterInit) {
  const SequencePair pair = generate_pair(small_spec("g", 23), 2);
  const ScriptedDriver driver(ScriptedTracker::parse("perfect"));
  const RunRecord r = run_sope(pair, driver, View::fpv);
  EXPECT_EQ(r.predictions.timestamps, (std::vector<int>{5, 10, 15, 20}));
  EXPECT_EQ(r.frames_presented, 22);
}

TEST(Subprocess, EchoInitMatchesInProcessAndPerFrameIou) {
  oracle::TempDir dir;
  const SequencePair pair = generate_pair(small_spec("e", 40, {2}), 3, dir.path());
  const SubprocessDriver sub(mock_command("echo_init"), options());
  const ScriptedDriver local(ScriptedTracker::parse("echo_init"));
  for (View v : {View::fpv, View::tpv}) {
    const RunRecord a = run_sope(pair, sub, v);
    const RunRecord b = run_sope(pair, local, v);
    EXPECT_EQ(a.predictions.timestamps, b.predictions.timestamps);
    EXPECT_EQ(a.predictions.states, b.predictions.states);

    const AnnotationTrack& gt = pair.view(v).annotations;
    const Box init = std::get<Box>(*gt.find(0));
    std::vector<double> expected;
    for (size_t i = 1; i < gt.timestamps.size(); ++i) {
      if (const Box* g = std::get_if<Box>(&gt.states[i])) expected.push_back(box_iou(init, *g));
    }
    EXPECT_EQ(overlaps_of(a, pair), expected);
  }
}

TEST(Subprocess, PlaceholdersAreShellQuoted) {
  SequencePair pair = generate_pair(small_spec("it's"), 1);
  pair.fpv.frames = "/a b/%06d.png";
  pair.fpv.frame_offset = 12;
  const SubprocessDriver d("t {seq} {view} {frames} {offset}", options());
  EXPECT_EQ(d.expand(pair, View::fpv), "t 'it'\\''s' 'fpv' '/a b/%06d.png' 12");
}

TEST(Subprocess, EachMisbehaviourIsReported) {
  oracle::TempDir dir;
  const SequencePair pair = generate_pair(small_spec("m", 30), 4, dir.path());
  struct Case {
    std::string mode;
    std::string expect;
  };
  const std::vector<Case> cases = {
      {"garbage", "unparseable tracker reply"},
      {"wrong-t", "while frame 3 was requested"},
      {"two-kinds", "exactly one of box/rle/absent"},
      {"crash", "closed its output"},
      {"bad-exit", "exited with status 5"},
      {"chatty-init", "after init"},
  };
  for (const Case& c : cases) {
    const SubprocessDriver d(mock_command("perfect", "--misbehave " + c.mode + " --misbehave-at 3"), options());
    int presented = -1;
    const std::string msg = failure_message(pair, d, View::fpv, &presented);
    EXPECT_TRUE(contains(msg, c.expect)) << c.mode << ": " << msg;
    if (c.mode != "bad-exit" && c.mode != "chatty-init") {
      EXPECT_EQ(presented, 2) << c.mode;
    }
  }
}

TEST(Subprocess, HangingTrackerTimesOut) {
  oracle::TempDir dir;
  const SequencePair pair = generate_pair(small_spec("h", 20), 5, dir.path());
  for (const char* mode : {"hang", "silent"}) {
    const SubprocessDriver d(mock_command("perfect", std::string("--misbehave ") + mode),
                             options(std::chrono::milliseconds(300)));
    const auto start = std::chrono::steady_clock::now();
    const std::string msg = failure_message(pair, d, View::tpv);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_TRUE(contains(msg, "timed out")) << msg;
    EXPECT_LT(secs, 5.0);
  }
}

TEST(Subprocess, MissingExecutableIsADriverFailure) {
  const SequencePair pair = generate_pair(small_spec("x", 10), 6);
  const SubprocessDriver d("/nonexistent/vista-tracker", options());
  EXPECT_FALSE(failure_message(pair, d, View::fpv).empty());
}

TEST(Subprocess, TranscriptIsCausal) {
  oracle::TempDir dir;
  const SequencePair pair = generate_pair(small_spec("c", 26, {1}), 7, dir.path());
  const SubprocessDriver d(mock_command("lose_after:2"), options(std::chrono::milliseconds(10'000), true));
  const RunRecord r = run_sope(pair, d, View::fpv);
  const auto& tr = r.transcript;
  // init, ok, then (track, reply) per frame, then end.
  ASSERT_EQ(tr.size(), 2 + 2 * 25 + 1u);
  EXPECT_EQ(json::parse(tr[0].text).at("cmd"), "init");
  EXPECT_TRUE(tr[0].from_harness);
  EXPECT_FALSE(tr[1].from_harness);
  int expected_t = 1;
  for (size_t i = 2; i + 1 < tr.size(); i += 2) {
    ASSERT_TRUE(tr[i].from_harness);
    ASSERT_FALSE(tr[i + 1].from_harness);
    const json req = json::parse(tr[i].text);
    const json rep = json::parse(tr[i + 1].text);
    EXPECT_EQ(req.at("cmd"), "track");
    EXPECT_EQ(req.at("t").get<int>(), expected_t);
    EXPECT_EQ(rep.at("t").get<int>(), expected_t);
    EXPECT_EQ(req.at("frame").get<std::string>(), pair.fpv.frame_path(expected_t).string());
    ++expected_t;
  }
  EXPECT_EQ(json::parse(tr.back().text).at("cmd"), "end");
}

TEST(Subprocess, MalformedRepliesAreRejected) {
  oracle::TempDir dir;
  SynthSpec spec = small_spec("f", 2);
  spec.fps = 1.0;
  const SequencePair pair = generate_pair(spec, 8, dir.path());
  const std::string valid = R"({"t":1,"box":[1,2,3,4]})";
  std::mt19937 rng(99);
  const std::string alphabet = "{}[]\",:tabx-. 9e";
  std::vector<std::string> lines;
  for (size_t n = 0; n < valid.size(); ++n) lines.push_back(valid.substr(0, n));
  while (lines.size() < 100) {
    std::string s = valid;
    s.insert(s.begin() + static_cast<long>(rng() % (s.size() + 1)), alphabet[rng() % alphabet.size()]);
    lines.push_back(s);
  }
  int rejected = 0;
  for (size_t i = 0; i < lines.size(); ++i) {
    const fs::path reply = dir.path() / ("reply" + std::to_string(i));
    std::ofstream(reply) << lines[i];
    const std::string cmd = "read -r l; echo '{\"status\":\"ok\"}'; read -r l; cat '" + reply.string() +
                            "'; echo; read -r l";
    const SubprocessDriver d(cmd, options(std::chrono::milliseconds(5'000)));
    try {
      const RunRecord r = run_sope(pair, d, View::fpv);
      // Accepted only if the line is itself a well-formed prediction for frame 1.
      const json j = json::parse(lines[i]);
      EXPECT_EQ(j.at("t"), 1) << lines[i];
      EXPECT_EQ(j.size(), 2u) << lines[i];
      EXPECT_EQ(r.predictions.states.at(0), state_from_json(j)) << lines[i];
    } catch (const RunFailure& e) {
      ++rejected;
      EXPECT_FALSE(std::string(e.what()).empty());
    }
  }
  EXPECT_GE(rejected, static_cast<int>(valid.size()));
}

TEST(ShortTerm, RunsOfFiveOneThreeGiveTwoSubPairs) {
  // Annotation indices 0-4 visible, 5 absent, 6 visible, 7 absent, 8-10 visible.
  const SequencePair pair = generate_pair(small_spec("s", 55, {5, 7}), 9);
  ASSERT_EQ(visibility_runs(pair.fpv.annotations).size(), 3u);
  const ShortTermSplit split = extract_short_term(pair, 2);
  EXPECT_EQ(split.dropped, 1);
  ASSERT_EQ(split.pairs.size(), 2u);
  EXPECT_EQ(split.pairs[0].id, "s#0");
  EXPECT_EQ(split.pairs[1].id, "s#2");
  EXPECT_EQ(split.pairs[1].parent_id, "s");
  EXPECT_EQ(split.pairs[1].parent_offset, 40);
  for (const SequencePair& sp : split.pairs) EXPECT_TRUE(validate_pair(sp).empty());
  const SequencePair& last = split.pairs[1];
  EXPECT_EQ(last.fpv.frame_offset, 40);
  EXPECT_EQ(last.tpv.annotations.weight(), 3u);
  EXPECT_EQ(last.fpv.annotations.frame_count, 15);
  EXPECT_EQ(*last.tpv.annotations.find(5), *pair.tpv.annotations.find(45));
  EXPECT_EQ(last.fpv.frame_path(0), pair.fpv.frame_path(40));

  EXPECT_EQ(extract_short_term(pair, 1).pairs.size(), 3u);
}

TEST(ShortTerm, FullyVisibleSequenceIsOneSubPair) {
  const SequencePair pair = generate_pair(small_spec("v", 48), 10);
  const ShortTermSplit split = extract_short_term(pair);
  ASSERT_EQ(split.pairs.size(), 1u);
  SequencePair sub = split.pairs[0];
  EXPECT_EQ(sub.parent_offset, 0);
  sub.id = pair.id;
  EXPECT_TRUE(same_structure(sub, pair));
}

TEST(ShortTerm, SubprocessMatchesInProcess) {
  oracle::TempDir dir;
  const auto specs = make_suite(4, 11);
  const DatasetManifest m = write_dataset(specs, 11, dir.path());
  const EvalOptions opt{Protocol::short_term, {View::fpv, View::tpv}, 2, 2};
  const auto a = evaluate_dataset(m, SubprocessDriver(mock_command("lose_after:3"), options()), opt);
  const auto b = evaluate_dataset(m, ScriptedDriver(ScriptedTracker::parse("lose_after:3")), opt);
  EXPECT_TRUE(a.failures.empty()) << a.failures.front().message;
  expect_same_scores(a, b);

  int runs = 0, dropped = 0;
  for (const SequencePair& p : m.pairs) {
    for (const VisibilityRun& r : visibility_runs(p.fpv.annotations)) (r.length >= 2 ? runs : dropped)++;
  }
  EXPECT_EQ(b.evaluated_pairs, runs);
  EXPECT_EQ(b.short_term_dropped, dropped);
  EXPECT_EQ(b.sequences.size(), 2u * runs);
  for (const SequenceEvaluation& s : b.sequences) {
    EXPECT_NE(s.pair_id, s.source_id);
    EXPECT_TRUE(contains(s.pair_id, s.source_id + "#"));
  }
}

TEST(EvaluateDataset, PerfectTrackerScoresHundredEverywhere) {
  const auto specs = make_suite(5, 12);
  DatasetManifest m;
  for (size_t i = 0; i < specs.size(); ++i) m.pairs.push_back(generate_pair(specs[i], 12 + i));
  const auto ev = evaluate_dataset(m, ScriptedDriver(ScriptedTracker::parse("perfect")), {});
  const Aggregate agg = aggregate_scores(ev.scores(), true);
  for (Metric metric : kAllMetrics) {
    EXPECT_DOUBLE_EQ(agg.fpv->mean(metric), 100.0) << metric_name(metric);
    EXPECT_DOUBLE_EQ(agg.tpv->mean(metric), 100.0);
    EXPECT_EQ(agg.delta(metric)->delta, 0.0);
  }
}

TEST(EvaluateDataset, IndependentOfJobs) {
  oracle::TempDir dir;
  const DatasetManifest m = write_dataset(make_suite(6, 13), 13, dir.path());
  for (Protocol p : {Protocol::long_term, Protocol::short_term}) {
    EvalOptions one{p, {View::fpv, View::tpv}, 1, 2};
    EvalOptions many = one;
    many.jobs = 8;
    const ScriptedDriver local(ScriptedTracker::parse("view_biased:0.9,0.4,0/0.7,0.2"));
    expect_same_scores(evaluate_dataset(m, local, one), evaluate_dataset(m, local, many));
    const SubprocessDriver sub(mock_command("lose_after:4"), options());
    expect_same_scores(evaluate_dataset(m, sub, one), evaluate_dataset(m, sub, many));
  }
}

TEST(EvaluateDataset, FailuresAreIsolatedAndCounted) {
  oracle::TempDir dir;
  DatasetManifest m;
  for (int i = 0; i < 3; ++i) m.pairs.push_back(generate_pair(small_spec("p" + std::to_string(i), 20), i));
  for (const SequencePair& p : m.pairs) {
    for (View v : {View::fpv, View::tpv}) {
      if (p.id == "p1" && v == View::tpv) continue;
      write_track_file(dir.path() / p.id / (std::string(view_name(v)) + ".jsonl"),
                       entries_of(p.view(v).annotations), false);
    }
  }
  const auto ev = evaluate_dataset(m, ReplayDriver(dir.path()), {.jobs = 3});
  EXPECT_EQ(ev.evaluated_pairs, 2);
  EXPECT_EQ(ev.excluded_pairs, 1);
  ASSERT_EQ(ev.failures.size(), 1u);
  EXPECT_EQ(ev.failures[0].pair_id, "p1");
  EXPECT_EQ(ev.failures[0].view, View::tpv);
  EXPECT_EQ(ev.sequences.size(), 4u);
  for (const auto& s : ev.sequences) EXPECT_NE(s.pair_id, "p1");
}

TEST(EvaluateDataset, ViewsAreScoredIndependently) {
  DatasetManifest m;
  const auto specs = make_suite(4, 14);
  for (size_t i = 0; i < specs.size(); ++i) m.pairs.push_back(generate_pair(specs[i], 14 + i));
  const ScriptedDriver d(ScriptedTracker::parse("view_biased:0.8,0.3/0.6"));
  const auto both = evaluate_dataset(m, d, {});

  // Replace every TPV track with a different trajectory; FPV results must not move.
  DatasetManifest changed = m;
  for (size_t i = 0; i < specs.size(); ++i) {
    SynthSpec s = specs[i];
    s.tpv.vx += 3.0;
    changed.pairs[i].tpv = generate_pair(s, 1000 + i).tpv;
  }
  const auto fpv_only = evaluate_dataset(changed, d, {.views = {View::fpv}});
  std::vector<SequenceEvaluation> fpv_both;
  for (const auto& s : both.sequences) {
    if (s.view == View::fpv) fpv_both.push_back(s);
  }
  ASSERT_EQ(fpv_only.sequences.size(), fpv_both.size());
  for (size_t i = 0; i < fpv_both.size(); ++i) {
    for (Metric metric : kAllMetrics) {
      EXPECT_EQ(fpv_only.sequences[i].score.value(metric), fpv_both[i].score.value(metric));
    }
  }
  const Aggregate agg = aggregate_scores(fpv_only.scores(), true);
  EXPECT_FALSE(agg.tpv.has_value());
  EXPECT_TRUE(agg.deltas.empty());
}
