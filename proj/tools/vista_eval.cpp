// vista-eval: run SOPE evaluations, generate synthetic data, validate
// manifests and compare stored reports.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "vista/attributes.hpp"
#include "vista/data_model.hpp"
#include "vista/error.hpp"
#include "vista/reports.hpp"
#include "vista/sope.hpp"
#include "vista/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vista;

namespace {

struct RunArgs {
  std::string manifest;
  std::string driver;
  std::string protocol = "long";
  std::string views = "fpv,tpv";
  std::string out;
  std::string label;
  std::string repr;
  int jobs = 1;
  int min_run_len = 2;
  double timeout = 60.0;
  bool pixel_attributes = false;
  bool no_attributes = false;
};

std::vector<View> parse_views(const std::string& text) {
  std::vector<View> views;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const View v = parse_view(item);
    if (std::find(views.begin(), views.end(), v) == views.end()) views.push_back(v);
  }
  if (views.empty()) throw ParseError("--views lists no view");
  return views;
}

std::unique_ptr<TrackerDriver> make_driver(const RunArgs& args, std::string& default_label) {
  const size_t colon = args.driver.find(':');
  if (colon == std::string::npos) throw ParseError("--driver must be replay:DIR, cmd:COMMAND or scripted:KIND");
  const std::string kind = args.driver.substr(0, colon);
  const std::string value = args.driver.substr(colon + 1);
  std::optional<Representation> repr;
  if (!args.repr.empty()) repr = parse_representation(args.repr);

  if (kind == "replay") {
    default_label = fs::path(value).filename().string();
    return std::make_unique<ReplayDriver>(value, repr);
  }
  if (kind == "cmd") {
    SubprocessOptions options;
    options.repr = repr.value_or(Representation::box);
    options.frame_timeout = std::chrono::milliseconds(static_cast<long long>(args.timeout * 1000.0));
    default_label = "cmd";
    return std::make_unique<SubprocessDriver>(value, options);
  }
  if (kind == "scripted") {
    const ScriptedTracker tracker = ScriptedTracker::parse(value);
    default_label = value.substr(0, value.find(':'));
    return std::make_unique<ScriptedDriver>(tracker, repr.value_or(Representation::box));
  }
  throw ParseError("unknown driver kind '" + kind + "'");
}

int cmd_run(const RunArgs& args) {
  const DatasetManifest manifest = load_manifest(args.manifest);
  std::string default_label;
  const std::unique_ptr<TrackerDriver> driver = make_driver(args, default_label);
  const std::string label = args.label.empty() ? default_label : args.label;

  EvalOptions options;
  options.protocol = parse_protocol(args.protocol);
  options.views = parse_views(args.views);
  options.jobs = args.jobs;
  options.min_run_len = args.min_run_len;

  ReportOptions report_options;
  report_options.attributes = !args.no_attributes;
  report_options.pixel_attributes = args.pixel_attributes;

  EvalReport report;
  report.config = {{"manifest", fs::absolute(args.manifest).lexically_normal().string()},
                   {"driver", driver->describe()},
                   {"label", label},
                   {"protocol", protocol_name(options.protocol)},
                   {"views", args.views},
                   {"min_run_len", options.min_run_len},
                   {"repr", args.repr.empty() ? "auto" : args.repr},
                   {"attributes", report_options.attributes},
                   {"pixel_attributes", report_options.pixel_attributes}};
  report.thresholds = report_options.thresholds;

  const DatasetEvaluation eval = evaluate_dataset(manifest, *driver, options);
  for (const FailureRecord& f : eval.failures) {
    std::cerr << "warning: " << f.pair_id << " " << view_name(f.view) << ": " << f.message << "\n";
  }

  std::vector<std::string> notes;
  std::map<std::string, PairLabels> labels;
  if (report_options.attributes) labels = label_manifest(manifest, report_options, &notes);
  const CenterDistanceIndex index = center_distance_index(manifest);
  TrackerReport tracker = build_tracker_report(label, driver->describe(), eval, labels, index, report_options);
  tracker.notes.insert(tracker.notes.begin(), notes.begin(), notes.end());
  report.trackers.push_back(std::move(tracker));

  const fs::path dir = run_directory(args.out, label, report.config);
  write_run_directory(report, dir);
  std::cout << dir.string() << "\n";
  std::cerr << eval.evaluated_pairs << " pairs evaluated, " << eval.excluded_pairs << " excluded\n";
  return eval.sequences.empty() ? 1 : 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out, std::optional<uint64_t> seed_override) {
  std::ifstream in(spec_path);
  if (!in) throw MissingInputError("cannot open synth spec " + spec_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(spec_path + ": " + e.what());
  }
  const uint64_t seed = seed_override.value_or(doc.value("seed", uint64_t{0}));

  // Either {"suite": N, ...}, {"pairs": [spec, ...]} or a single spec.
  std::vector<SynthSpec> specs;
  if (doc.contains("suite")) {
    const Representation repr = parse_representation(doc.value("repr", std::string("box")));
    specs = make_suite(doc["suite"].get<int>(), seed, repr);
    const bool render = doc.value("render", false);
    for (SynthSpec& s : specs) s.render = render;
  } else if (doc.contains("pairs")) {
    for (const json& p : doc["pairs"]) specs.push_back(synth_spec_from_json(p));
  } else {
    specs.push_back(synth_spec_from_json(doc));
  }
  const DatasetManifest manifest = write_dataset(specs, seed, out);
  std::cout << (fs::path(out) / "manifest.json").string() << "\n";
  std::cerr << manifest.pairs.size() << " pairs written\n";
  return 0;
}

int cmd_validate(const std::string& manifest_path, bool check_frames) {
  const DatasetManifest manifest = load_manifest(manifest_path, false);
  int bad = 0;
  for (const SequencePair& pair : manifest.pairs) {
    for (const Violation& v : validate_pair(pair, ValidateOptions{check_frames})) {
      std::cout << pair.id << ": " << violation_name(v.kind) << ": " << v.message << "\n";
      ++bad;
    }
  }
  std::cout << manifest.pairs.size() << " pairs, " << bad << " violations\n";
  return bad == 0 ? 0 : 2;
}

int cmd_compare(const std::vector<std::string>& reports, const std::string& out) {
  EvalReport merged;
  json sources = json::array();
  for (const std::string& path : reports) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open report " + path);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(path + ": " + e.what());
    }
    EvalReport r = report_from_json(doc);
    sources.push_back(r.config);
    for (TrackerReport& t : r.trackers) merged.trackers.push_back(std::move(t));
  }
  merged.config = {{"compare", sources}};
  write_run_directory(merged, out);
  std::cout << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synchronized FPV/TPV tracker evaluation"};
  app.require_subcommand(1);

  RunArgs run;
  CLI::App* run_cmd = app.add_subcommand("run", "Evaluate a tracker on a manifest");
  run_cmd->add_option("--manifest", run.manifest, "Dataset manifest (JSON)")->required();
  run_cmd->add_option("--driver", run.driver, "replay:DIR | cmd:COMMAND | scripted:KIND")->required();
  run_cmd->add_option("--protocol", run.protocol, "long or short")->check(CLI::IsMember({"long", "short"}));
  run_cmd->add_option("--views", run.views, "Comma-separated views");
  run_cmd->add_option("--out", run.out, "Report base directory")->required();
  run_cmd->add_option("--label", run.label, "Tracker label");
  run_cmd->add_option("--repr", run.repr, "box or mask")->check(CLI::IsMember({"box", "mask"}));
  run_cmd->add_option("--jobs", run.jobs, "Parallel sequence runs")->check(CLI::PositiveNumber);
  run_cmd->add_option("--min-run-len", run.min_run_len, "Shortest visibility run kept (short protocol)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--timeout", run.timeout, "Per-frame tracker timeout in seconds")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--pixel-attributes", run.pixel_attributes, "Compute IV and MB from frames");
  run_cmd->add_flag("--no-attributes", run.no_attributes, "Skip attribute breakdowns");

  std::string spec_path, synth_out;
  std::optional<uint64_t> seed;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--spec", spec_path, "Synth spec (JSON)")->required();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--seed", seed, "Override the spec seed");

  std::string validate_manifest;
  bool check_frames = false;
  CLI::App* validate_cmd = app.add_subcommand("validate", "Check a manifest against the pairing constraints");
  validate_cmd->add_option("--manifest", validate_manifest, "Dataset manifest")->required();
  validate_cmd->add_flag("--check-frames", check_frames, "Require frame images on disk");

  std::vector<std::string> compare_reports;
  std::string compare_out;
  CLI::App* compare_cmd = app.add_subcommand("compare", "Merge reports into joint plots and tables");
  compare_cmd->add_option("--reports", compare_reports, "report.json files")->required();
  compare_cmd->add_option("--out", compare_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*synth_cmd) return cmd_synth(spec_path, synth_out, seed);
    if (*validate_cmd) return cmd_validate(validate_manifest, check_frames);
    if (*compare_cmd) return cmd_compare(compare_reports, compare_out);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConstraintError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
