#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vista/attributes.hpp"
#include "vista/metrics.hpp"
#include "vista/sope.hpp"
#include "vista/stats.hpp"

namespace vista {

/// One tracker on a Bias Plot: x is the TPV score, y the FPV score.
struct BiasPlotPoint {
  std::string label;
  double x = 0.0;
  double y = 0.0;
  double delta = 0.0;
  std::string marker = "circle";
};

BiasPlotPoint bias_point(std::string label, double fpv, double tpv, std::string marker = "circle");

enum class DiagonalSide { above, on, below };
/// Above means the tracker scores higher on FPV.
DiagonalSide diagonal_side(const BiasPlotPoint& p, double tolerance = 1e-9);

/// Scatter over [0, 100]^2 with the identity diagonal; legend ordered by
/// descending delta. Byte-deterministic.
std::string bias_plot_svg(std::span<const BiasPlotPoint> points, const std::string& metric);

/// Columns: tracker, tpv, fpv, delta (input order).
std::string bias_plot_csv(std::span<const BiasPlotPoint> points);
std::vector<BiasPlotPoint> parse_bias_plot_csv(const std::string& text);

struct CenterDistanceCurve {
  std::string tracker;
  /// Weighted AUC per bin and view (index 0 FPV, 1 TPV); nullopt for a bin
  /// without scored frames.
  std::array<std::array<std::optional<double>, kCenterDistanceBins>, 2> auc{};
  /// Annotations per bin and view.
  std::array<std::array<size_t, kCenterDistanceBins>, 2> population{};
  /// Annotations binned from mask barycenters / box centers.
  size_t from_mask = 0;
  size_t from_box = 0;

  bool has_gap() const;
};

using CenterDistanceIndex = std::map<std::string, std::array<CenterDistanceLabels, 2>>;

CenterDistanceIndex center_distance_index(const DatasetManifest& manifest);

CenterDistanceCurve center_distance_curve(const std::string& tracker, std::span<const SequenceEvaluation> evals,
                                          const CenterDistanceIndex& index, bool weighted = true);

std::string center_distance_csv(std::span<const CenterDistanceCurve> curves);
/// AUC against bin; FPV solid, TPV dashed, empty bins break the line.
std::string center_distance_svg(std::span<const CenterDistanceCurve> curves);

struct TrackerReport {
  std::string label;
  std::string driver;
  Protocol protocol = Protocol::long_term;
  std::vector<SequenceScore> sequences;
  std::vector<FailureRecord> failures;
  int evaluated_pairs = 0;
  int excluded_pairs = 0;
  int short_term_dropped = 0;
  Aggregate weighted;
  Aggregate unweighted;
  /// Paired test on per-pair FPV vs TPV AUC.
  std::optional<TTestResult> t_test;
  std::vector<BreakdownRow> attributes;
  std::optional<CenterDistanceCurve> center_distance;
  std::vector<std::string> notes;
};

struct EvalReport {
  nlohmann::json config = nlohmann::json::object();
  AttributeThresholds thresholds;
  std::vector<TrackerReport> trackers;
};

struct ReportOptions {
  bool attributes = true;
  bool pixel_attributes = false;
  bool center_distance = true;
  AttributeThresholds thresholds;
};

/// Per-pair attribute labels for every pair in the manifest. Attributes that
/// cannot be computed (missing frames or detection files) are left
/// unavailable and noted.
std::map<std::string, PairLabels> label_manifest(const DatasetManifest& manifest, const ReportOptions& options,
                                                 std::vector<std::string>* notes = nullptr);

/// Builds one tracker's section. `labels` and `index` may be empty when the
/// corresponding breakdowns are disabled.
TrackerReport build_tracker_report(const std::string& label, const std::string& driver,
                                   const DatasetEvaluation& eval,
                                   const std::map<std::string, PairLabels>& labels,
                                   const CenterDistanceIndex& index, const ReportOptions& options);

nlohmann::json report_to_json(const EvalReport& report);

/// Parses a report and verifies that every stored aggregate and delta is
/// reproduced by its per-sequence scores; throws Error otherwise.
EvalReport report_from_json(const nlohmann::json& j);
void check_consistency(const EvalReport& report, double tolerance = 1e-9);

/// Columns: tracker, pair_id, view, auc, nps, gsr, j, f, jf, weight.
std::string scores_csv(const EvalReport& report);

/// Per-view means and deltas per tracker, weighted and unweighted.
std::string tables_markdown(const EvalReport& report);
std::string tables_csv(const EvalReport& report);

std::string attributes_csv(const EvalReport& report);

/// `<base>/<label>-<16 hex digits of the config hash>`.
std::filesystem::path run_directory(const std::filesystem::path& base, const std::string& label,
                                    const nlohmann::json& config);

/// Writes report.json, scores.csv, bias_<metric>.svg/.csv, attributes.csv,
/// center_distance.csv/.svg, tables.md and tables.csv.
void write_run_directory(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace vista
