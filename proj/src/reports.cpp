#include "vista/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vista/error.hpp"

namespace vista {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

size_t view_index(View v) { return v == View::fpv ? 0 : 1; }

// Plot frame shared by both charts.
struct Frame {
  double left = 70.0, top = 30.0, size = 360.0;
  double px(double x, double lo, double hi) const { return left + (x - lo) / (hi - lo) * size; }
  double py(double y) const { return top + size - y / 100.0 * size; }
};

void svg_axes(std::ostringstream& os, const Frame& f, const std::string& y_title) {
  os << "<rect x=\"" << fixed6(f.left) << "\" y=\"" << fixed6(f.top) << "\" width=\"" << fixed6(f.size)
     << "\" height=\"" << fixed6(f.size) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  for (int v = 0; v <= 100; v += 20) {
    const double y = f.py(v);
    os << "<line x1=\"" << fixed6(f.left - 5.0) << "\" y1=\"" << fixed6(y) << "\" x2=\"" << fixed6(f.left)
       << "\" y2=\"" << fixed6(y) << "\" stroke=\"#000000\"/>\n";
    os << "<text x=\"" << fixed6(f.left - 8.0) << "\" y=\"" << fixed6(y + 4.0)
       << "\" text-anchor=\"end\" font-size=\"11\">" << v << "</text>\n";
  }
  os << "<text x=\"" << fixed6(18.0) << "\" y=\"" << fixed6(f.top + f.size / 2.0)
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18.000000 "
     << fixed6(f.top + f.size / 2.0) << ")\">" << xml_escape(y_title) << "</text>\n";
}

void svg_marker(std::ostringstream& os, const std::string& marker, double x, double y, const char* color) {
  if (marker == "square") {
    os << "<rect x=\"" << fixed6(x - 5.0) << "\" y=\"" << fixed6(y - 5.0)
       << "\" width=\"10.000000\" height=\"10.000000\" fill=\"" << color << "\"/>\n";
  } else if (marker == "triangle") {
    os << "<polygon points=\"" << fixed6(x) << "," << fixed6(y - 6.0) << " " << fixed6(x - 6.0) << ","
       << fixed6(y + 5.0) << " " << fixed6(x + 6.0) << "," << fixed6(y + 5.0) << "\" fill=\"" << color
       << "\"/>\n";
  } else if (marker == "diamond") {
    os << "<polygon points=\"" << fixed6(x) << "," << fixed6(y - 6.0) << " " << fixed6(x - 6.0) << ","
       << fixed6(y) << " " << fixed6(x) << "," << fixed6(y + 6.0) << " " << fixed6(x + 6.0) << ","
       << fixed6(y) << "\" fill=\"" << color << "\"/>\n";
  } else {
    os << "<circle cx=\"" << fixed6(x) << "\" cy=\"" << fixed6(y) << "\" r=\"5.000000\" fill=\"" << color
       << "\"/>\n";
  }
}

std::string signed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%+.1f", v);
  return buf;
}

std::string signed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%+.2f", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Bias plot

BiasPlotPoint bias_point(std::string label, double fpv, double tpv, std::string marker) {
  return BiasPlotPoint{std::move(label), tpv, fpv, fpv - tpv, std::move(marker)};
}

DiagonalSide diagonal_side(const BiasPlotPoint& p, double tolerance) {
  if (p.y - p.x > tolerance) return DiagonalSide::above;
  if (p.x - p.y > tolerance) return DiagonalSide::below;
  return DiagonalSide::on;
}

std::string bias_plot_svg(std::span<const BiasPlotPoint> points, const std::string& metric) {
  std::vector<size_t> order(points.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return points[a].delta > points[b].delta; });

  const Frame f;
  const double width = f.left + f.size + 230.0;
  const double height = f.top + f.size + 60.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed6(width) << "\" height=\""
     << fixed6(height) << "\" viewBox=\"0 0 " << fixed6(width) << " " << fixed6(height) << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << fixed6(width) << "\" height=\"" << fixed6(height)
     << "\" fill=\"#ffffff\"/>\n";
  svg_axes(os, f, "FPV " + metric);
  for (int v = 0; v <= 100; v += 20) {
    const double x = f.px(v, 0.0, 100.0);
    const double y = f.top + f.size;
    os << "<line x1=\"" << fixed6(x) << "\" y1=\"" << fixed6(y) << "\" x2=\"" << fixed6(x) << "\" y2=\""
       << fixed6(y + 5.0) << "\" stroke=\"#000000\"/>\n";
    os << "<text x=\"" << fixed6(x) << "\" y=\"" << fixed6(y + 18.0)
       << "\" text-anchor=\"middle\" font-size=\"11\">" << v << "</text>\n";
  }
  os << "<text x=\"" << fixed6(f.left + f.size / 2.0) << "\" y=\"" << fixed6(f.top + f.size + 40.0)
     << "\" text-anchor=\"middle\" font-size=\"13\">TPV " << xml_escape(metric) << "</text>\n";
  os << "<line class=\"diagonal\" x1=\"" << fixed6(f.px(0.0, 0.0, 100.0)) << "\" y1=\"" << fixed6(f.py(0.0))
     << "\" x2=\"" << fixed6(f.px(100.0, 0.0, 100.0)) << "\" y2=\"" << fixed6(f.py(100.0))
     << "\" stroke=\"#444444\" stroke-width=\"1.5\"/>\n";

  for (size_t rank = 0; rank < order.size(); ++rank) {
    const BiasPlotPoint& p = points[order[rank]];
    const char* color = kPalette[rank % kPaletteSize];
    svg_marker(os, p.marker, f.px(p.x, 0.0, 100.0), f.py(p.y), color);
    const double ly = f.top + 10.0 + 20.0 * static_cast<double>(rank);
    const double lx = f.left + f.size + 25.0;
    svg_marker(os, p.marker, lx, ly, color);
    os << "<text x=\"" << fixed6(lx + 12.0) << "\" y=\"" << fixed6(ly + 4.0) << "\" font-size=\"12\">"
       << xml_escape(p.label) << " (" << signed1(p.delta) << ")</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string bias_plot_csv(std::span<const BiasPlotPoint> points) {
  std::string out = "tracker,tpv,fpv,delta\n";
  for (const BiasPlotPoint& p : points) {
    out += csv_field(p.label) + "," + exact(p.x) + "," + exact(p.y) + "," + exact(p.delta) + "\n";
  }
  return out;
}

std::vector<BiasPlotPoint> parse_bias_plot_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"tracker", "tpv", "fpv", "delta"}) {
    throw ParseError("bias plot CSV must start with tracker,tpv,fpv,delta");
  }
  std::vector<BiasPlotPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw ParseError("bias plot CSV row needs 4 fields: " + line);
    try {
      BiasPlotPoint p;
      p.label = f[0];
      p.x = std::stod(f[1]);
      p.y = std::stod(f[2]);
      p.delta = std::stod(f[3]);
      out.push_back(std::move(p));
    } catch (const std::logic_error&) {
      throw ParseError("bad number in bias plot CSV row: " + line);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Center distance

bool CenterDistanceCurve::has_gap() const {
  for (const auto& view : auc) {
    for (const auto& v : view) {
      if (!v) return true;
    }
  }
  return false;
}

CenterDistanceIndex center_distance_index(const DatasetManifest& manifest) {
  CenterDistanceIndex index;
  for (const SequencePair& pair : manifest.pairs) {
    index[pair.id] = {center_distance_labels(pair.fpv), center_distance_labels(pair.tpv)};
  }
  return index;
}

CenterDistanceCurve center_distance_curve(const std::string& tracker, std::span<const SequenceEvaluation> evals,
                                          const CenterDistanceIndex& index, bool weighted) {
  CenterDistanceCurve curve;
  curve.tracker = tracker;
  for (const SequenceEvaluation& e : evals) {
    if (!index.count(e.source_id)) throw MissingInputError("no center-distance labels for " + e.source_id);
  }
  for (const auto& [id, labels] : index) {
    for (const CenterDistanceLabels& l : labels) {
      curve.from_mask += l.from_mask;
      curve.from_box += l.from_box;
    }
  }
  for (int b = 0; b < kCenterDistanceBins; ++b) {
    const auto bin = static_cast<CenterDistanceBin>(b);
    auto keep = [&](const SequenceEvaluation& e, int t) {
      const auto& bins = index.at(e.source_id)[view_index(e.view)].bins;
      const auto it = bins.find(t);
      return it != bins.end() && it->second == bin;
    };
    try {
      const BreakdownRow row = filtered_breakdown(evals, center_distance_bin_name(bin), keep, weighted);
      for (View v : {View::fpv, View::tpv}) {
        curve.population[view_index(v)][b] = row.frames[view_index(v)];
        if (row.view(v)) curve.auc[view_index(v)][b] = row.view(v)->mean(Metric::auc);
      }
    } catch (const MetricError&) {
      // Empty bin: left as a gap.
    }
  }
  return curve;
}

std::string center_distance_csv(std::span<const CenterDistanceCurve> curves) {
  std::string out = "tracker,view,bin,auc,annotations,empty\n";
  for (const CenterDistanceCurve& c : curves) {
    for (View v : {View::fpv, View::tpv}) {
      for (int b = 0; b < kCenterDistanceBins; ++b) {
        const auto& a = c.auc[view_index(v)][b];
        out += csv_field(c.tracker) + "," + view_name(v) + "," +
               center_distance_bin_name(static_cast<CenterDistanceBin>(b)) + "," + (a ? exact(*a) : "") + "," +
               std::to_string(c.population[view_index(v)][b]) + "," + (a ? "0" : "1") + "\n";
      }
    }
  }
  return out;
}

std::string center_distance_svg(std::span<const CenterDistanceCurve> curves) {
  const Frame f;
  const double width = f.left + f.size + 230.0;
  const double height = f.top + f.size + 60.0;
  auto bin_x = [&](int b) { return f.px(b, -0.5, kCenterDistanceBins - 0.5); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed6(width) << "\" height=\""
     << fixed6(height) << "\" viewBox=\"0 0 " << fixed6(width) << " " << fixed6(height) << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << fixed6(width) << "\" height=\"" << fixed6(height)
     << "\" fill=\"#ffffff\"/>\n";
  svg_axes(os, f, "AUC");
  for (int b = 0; b < kCenterDistanceBins; ++b) {
    os << "<text x=\"" << fixed6(bin_x(b)) << "\" y=\"" << fixed6(f.top + f.size + 18.0)
       << "\" text-anchor=\"middle\" font-size=\"11\">"
       << center_distance_bin_name(static_cast<CenterDistanceBin>(b)) << "</text>\n";
  }
  os << "<text x=\"" << fixed6(f.left + f.size / 2.0) << "\" y=\"" << fixed6(f.top + f.size + 40.0)
     << "\" text-anchor=\"middle\" font-size=\"13\">distance from frame center</text>\n";

  for (size_t i = 0; i < curves.size(); ++i) {
    const CenterDistanceCurve& c = curves[i];
    const char* color = kPalette[i % kPaletteSize];
    for (View v : {View::fpv, View::tpv}) {
      const auto& values = c.auc[view_index(v)];
      const std::string dash = v == View::tpv ? " stroke-dasharray=\"6 4\"" : "";
      // One polyline per run of non-empty bins.
      std::vector<std::pair<double, double>> segment;
      auto flush = [&] {
        if (segment.size() >= 2) {
          os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"" << dash << " points=\"";
          for (size_t k = 0; k < segment.size(); ++k) {
            os << (k ? " " : "") << fixed6(segment[k].first) << "," << fixed6(segment[k].second);
          }
          os << "\"/>\n";
        }
        segment.clear();
      };
      for (int b = 0; b < kCenterDistanceBins; ++b) {
        if (!values[b]) {
          flush();
          continue;
        }
        const double x = bin_x(b), y = f.py(*values[b]);
        segment.emplace_back(x, y);
        os << "<circle cx=\"" << fixed6(x) << "\" cy=\"" << fixed6(y) << "\" r=\"3.000000\" fill=\"" << color
           << "\"/>\n";
      }
      flush();
    }
    const double ly = f.top + 10.0 + 20.0 * static_cast<double>(i);
    const double lx = f.left + f.size + 25.0;
    os << "<line x1=\"" << fixed6(lx - 10.0) << "\" y1=\"" << fixed6(ly) << "\" x2=\"" << fixed6(lx + 6.0)
       << "\" y2=\"" << fixed6(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fixed6(lx + 12.0) << "\" y=\"" << fixed6(ly + 4.0) << "\" font-size=\"12\">"
       << xml_escape(c.tracker) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Building

std::map<std::string, PairLabels> label_manifest(const DatasetManifest& manifest, const ReportOptions& options,
                                                 std::vector<std::string>* notes) {
  std::map<std::string, PairLabels> out;
  AttributeOptions ao;
  ao.pixel = options.pixel_attributes;
  ao.thresholds = options.thresholds;
  for (const SequencePair& pair : manifest.pairs) {
    PairLabels labels = compute_attributes(pair, ao);
    if (notes) {
      for (View v : {View::fpv, View::tpv}) {
        for (const std::string& n : labels.view(v).notes) notes->push_back(pair.id + " " + view_name(v) + ": " + n);
      }
    }
    out.emplace(pair.id, std::move(labels));
  }
  return out;
}

TrackerReport build_tracker_report(const std::string& label, const std::string& driver,
                                   const DatasetEvaluation& eval,
                                   const std::map<std::string, PairLabels>& labels,
                                   const CenterDistanceIndex& index, const ReportOptions& options) {
  TrackerReport r;
  r.label = label;
  r.driver = driver;
  r.protocol = eval.protocol;
  r.sequences = eval.scores();
  r.failures = eval.failures;
  r.evaluated_pairs = eval.evaluated_pairs;
  r.excluded_pairs = eval.excluded_pairs;
  r.short_term_dropped = eval.short_term_dropped;
  if (r.sequences.empty()) {
    r.notes.push_back("no sequence was scored");
    r.weighted.weighted = true;
    r.unweighted.weighted = false;
    return r;
  }
  r.weighted = aggregate_scores(r.sequences, true);
  r.unweighted = aggregate_scores(r.sequences, false);

  std::map<std::string, double> tpv_auc;
  for (const SequenceScore& s : r.sequences) {
    if (s.view == View::tpv) tpv_auc[s.pair_id] = s.auc;
  }
  std::vector<double> a, b;
  for (const SequenceScore& s : r.sequences) {
    if (s.view != View::fpv) continue;
    if (const auto it = tpv_auc.find(s.pair_id); it != tpv_auc.end()) {
      a.push_back(s.auc);
      b.push_back(it->second);
    }
  }
  if (a.size() >= 2) {
    try {
      r.t_test = paired_t_test(a, b);
    } catch (const MetricError& e) {
      r.notes.push_back(std::string("t-test skipped: ") + e.what());
    }
  } else {
    r.notes.push_back("t-test skipped: fewer than two paired sequences");
  }

  if (options.attributes && !labels.empty()) {
    for (Attribute attr : kAllAttributes) {
      try {
        r.attributes.push_back(attribute_filtered_scores(eval.sequences, labels, attr, true));
      } catch (const MissingInputError&) {
        r.notes.push_back(std::string(attribute_name(attr)) + " unavailable");
      } catch (const MetricError&) {
        r.notes.push_back(std::string(attribute_name(attr)) + " labels no scored frame");
      }
    }
  }
  if (options.center_distance && !index.empty()) {
    r.center_distance = center_distance_curve(label, eval.sequences, index, true);
    if (r.center_distance->has_gap()) r.notes.push_back("center-distance curve has empty bins");
  }
  return r;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_number(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json metrics_json(const std::array<double, kAllMetrics.size()>& values) {
  json j = json::object();
  for (size_t k = 0; k < kAllMetrics.size(); ++k) j[metric_name(kAllMetrics[k])] = values[k];
  return j;
}

std::array<double, kAllMetrics.size()> metrics_from_json(const json& j) {
  std::array<double, kAllMetrics.size()> out{};
  for (size_t k = 0; k < kAllMetrics.size(); ++k) {
    const json& v = j.at(metric_name(kAllMetrics[k]));
    out[k] = v.is_null() ? std::nan("") : v.get<double>();
  }
  return out;
}

json view_aggregate_json(const std::optional<ViewAggregate>& v) {
  if (!v) return nullptr;
  return json{{"sequences", v->sequences}, {"total_weight", v->total_weight}, {"means", metrics_json(v->means)}};
}

std::optional<ViewAggregate> view_aggregate_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  ViewAggregate v;
  v.sequences = j.at("sequences").get<size_t>();
  v.total_weight = j.at("total_weight").get<double>();
  v.means = metrics_from_json(j.at("means"));
  return v;
}

json aggregate_json(const Aggregate& a) {
  json deltas = json::object();
  for (const DeltaScore& d : a.deltas) {
    deltas[d.metric] = {{"delta", d.delta}, {"fpv_mean", d.fpv_mean}, {"tpv_mean", d.tpv_mean}};
  }
  return json{{"weighted", a.weighted},
              {"fpv", view_aggregate_json(a.fpv)},
              {"tpv", view_aggregate_json(a.tpv)},
              {"pairs", a.pairs},
              {"deltas", deltas}};
}

Aggregate aggregate_from_json(const json& j) {
  Aggregate a;
  a.weighted = j.at("weighted").get<bool>();
  a.fpv = view_aggregate_from_json(j.at("fpv"));
  a.tpv = view_aggregate_from_json(j.at("tpv"));
  a.pairs = j.at("pairs").get<size_t>();
  for (Metric m : kAllMetrics) {
    const auto it = j.at("deltas").find(metric_name(m));
    if (it == j.at("deltas").end()) continue;
    a.deltas.push_back({metric_name(m), it->at("delta").get<double>(), it->at("fpv_mean").get<double>(),
                        it->at("tpv_mean").get<double>()});
  }
  return a;
}

json score_json(const SequenceScore& s) {
  json j = {{"pair_id", s.pair_id}, {"view", view_name(s.view)}, {"weight", s.weight}};
  for (Metric m : kAllMetrics) j[metric_name(m)] = s.value(m);
  return j;
}

SequenceScore score_from_json(const json& j) {
  SequenceScore s;
  s.pair_id = j.at("pair_id").get<std::string>();
  s.view = parse_view(j.at("view").get<std::string>());
  s.weight = j.at("weight").get<double>();
  s.auc = j.at("auc").get<double>();
  s.nps = j.at("nps").get<double>();
  s.gsr = j.at("gsr").get<double>();
  s.j = j.at("j").get<double>();
  s.f = j.at("f").get<double>();
  s.jf = j.at("jf").get<double>();
  return s;
}

json breakdown_json(const BreakdownRow& row) {
  json j = {{"label", row.label},
            {"annotations", {{"fpv", row.frames[0]}, {"tpv", row.frames[1]}}},
            {"fpv", view_aggregate_json(row.fpv)},
            {"tpv", view_aggregate_json(row.tpv)}};
  j["delta"] = row.delta ? metrics_json(*row.delta) : json(nullptr);
  return j;
}

BreakdownRow breakdown_from_json(const json& j) {
  BreakdownRow row;
  row.label = j.at("label").get<std::string>();
  row.frames = {j.at("annotations").at("fpv").get<size_t>(), j.at("annotations").at("tpv").get<size_t>()};
  row.fpv = view_aggregate_from_json(j.at("fpv"));
  row.tpv = view_aggregate_from_json(j.at("tpv"));
  if (!j.at("delta").is_null()) row.delta = metrics_from_json(j.at("delta"));
  return row;
}

json curve_json(const CenterDistanceCurve& c) {
  json j = {{"tracker", c.tracker}, {"from_mask", c.from_mask}, {"from_box", c.from_box}};
  for (View v : {View::fpv, View::tpv}) {
    json bins = json::array();
    for (int b = 0; b < kCenterDistanceBins; ++b) {
      bins.push_back({{"bin", center_distance_bin_name(static_cast<CenterDistanceBin>(b))},
                      {"auc", nullable(c.auc[view_index(v)][b])},
                      {"annotations", c.population[view_index(v)][b]}});
    }
    j[view_name(v)] = bins;
  }
  return j;
}

CenterDistanceCurve curve_from_json(const json& j) {
  CenterDistanceCurve c;
  c.tracker = j.at("tracker").get<std::string>();
  c.from_mask = j.at("from_mask").get<size_t>();
  c.from_box = j.at("from_box").get<size_t>();
  for (View v : {View::fpv, View::tpv}) {
    const json& bins = j.at(view_name(v));
    if (bins.size() != kCenterDistanceBins) throw ParseError("center-distance curve needs four bins");
    for (int b = 0; b < kCenterDistanceBins; ++b) {
      c.auc[view_index(v)][b] = optional_number(bins[b].at("auc"));
      c.population[view_index(v)][b] = bins[b].at("annotations").get<size_t>();
    }
  }
  return c;
}

json thresholds_json(const AttributeThresholds& t) {
  return json{{"scale_low", t.scale_low},
              {"scale_high", t.scale_high},
              {"illumination", t.illumination},
              {"illumination_distance", "euclidean mean-rgb in [0,1]"},
              {"blur_variance", t.blur_variance},
              {"low_res_area", t.low_res_area},
              {"high_res_area", t.high_res_area},
              {"static_iou", t.static_iou},
              {"distractor_cosine", t.distractor_cosine},
              {"distractor_iou", t.distractor_iou},
              {"hoi_iou", t.hoi_iou}};
}

AttributeThresholds thresholds_from_json(const json& j) {
  AttributeThresholds t;
  t.scale_low = j.value("scale_low", t.scale_low);
  t.scale_high = j.value("scale_high", t.scale_high);
  t.illumination = j.value("illumination", t.illumination);
  t.blur_variance = j.value("blur_variance", t.blur_variance);
  t.low_res_area = j.value("low_res_area", t.low_res_area);
  t.high_res_area = j.value("high_res_area", t.high_res_area);
  t.static_iou = j.value("static_iou", t.static_iou);
  t.distractor_cosine = j.value("distractor_cosine", t.distractor_cosine);
  t.distractor_iou = j.value("distractor_iou", t.distractor_iou);
  t.hoi_iou = j.value("hoi_iou", t.hoi_iou);
  return t;
}

}  // namespace

json report_to_json(const EvalReport& report) {
  json trackers = json::array();
  for (const TrackerReport& r : report.trackers) {
    json t;
    t["label"] = r.label;
    t["driver"] = r.driver;
    t["protocol"] = protocol_name(r.protocol);
    t["evaluated_pairs"] = r.evaluated_pairs;
    t["excluded_pairs"] = r.excluded_pairs;
    t["short_term_dropped"] = r.short_term_dropped;
    t["sequences"] = json::array();
    for (const SequenceScore& s : r.sequences) t["sequences"].push_back(score_json(s));
    t["failures"] = json::array();
    for (const FailureRecord& f : r.failures) {
      t["failures"].push_back({{"pair_id", f.pair_id}, {"view", view_name(f.view)}, {"message", f.message}});
    }
    t["aggregates"] = {{"weighted", aggregate_json(r.weighted)}, {"unweighted", aggregate_json(r.unweighted)}};
    if (r.t_test) {
      t["t_test"] = {{"metric", "auc"},
                     {"t", r.t_test->t},
                     {"p", r.t_test->p},
                     {"dof", r.t_test->dof},
                     {"mean_difference", r.t_test->mean_difference}};
    } else {
      t["t_test"] = nullptr;
    }
    t["attributes"] = json::array();
    for (const BreakdownRow& row : r.attributes) t["attributes"].push_back(breakdown_json(row));
    t["center_distance"] = r.center_distance ? curve_json(*r.center_distance) : json(nullptr);
    t["notes"] = r.notes;
    trackers.push_back(std::move(t));
  }
  return json{{"config", report.config}, {"thresholds", thresholds_json(report.thresholds)}, {"trackers", trackers}};
}

EvalReport report_from_json(const json& j) {
  EvalReport report;
  try {
    report.config = j.value("config", json::object());
    if (j.contains("thresholds")) report.thresholds = thresholds_from_json(j["thresholds"]);
    for (const json& t : j.at("trackers")) {
      TrackerReport r;
      r.label = t.at("label").get<std::string>();
      r.driver = t.value("driver", std::string());
      r.protocol = parse_protocol(t.value("protocol", std::string("long")));
      r.evaluated_pairs = t.value("evaluated_pairs", 0);
      r.excluded_pairs = t.value("excluded_pairs", 0);
      r.short_term_dropped = t.value("short_term_dropped", 0);
      for (const json& s : t.at("sequences")) r.sequences.push_back(score_from_json(s));
      for (const json& f : t.value("failures", json::array())) {
        r.failures.push_back({f.at("pair_id").get<std::string>(), parse_view(f.at("view").get<std::string>()),
                              f.at("message").get<std::string>()});
      }
      r.weighted = aggregate_from_json(t.at("aggregates").at("weighted"));
      r.unweighted = aggregate_from_json(t.at("aggregates").at("unweighted"));
      if (const json& tt = t.value("t_test", json(nullptr)); !tt.is_null()) {
        r.t_test = TTestResult{tt.at("t").get<double>(), tt.at("p").get<double>(), tt.at("dof").get<int>(),
                               tt.at("mean_difference").get<double>()};
      }
      for (const json& row : t.value("attributes", json::array())) r.attributes.push_back(breakdown_from_json(row));
      if (const json& c = t.value("center_distance", json(nullptr)); !c.is_null()) {
        r.center_distance = curve_from_json(c);
      }
      r.notes = t.value("notes", std::vector<std::string>{});
      report.trackers.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
  check_consistency(report);
  return report;
}

void check_consistency(const EvalReport& report, double tolerance) {
  auto close = [tolerance](double a, double b) { return std::abs(a - b) <= tolerance * std::max(1.0, std::abs(b)); };
  for (const TrackerReport& r : report.trackers) {
    if (r.sequences.empty()) continue;
    for (const Aggregate* stored : {&r.weighted, &r.unweighted}) {
      const Aggregate fresh = aggregate_scores(r.sequences, stored->weighted);
      const char* variant = stored->weighted ? "weighted" : "unweighted";
      auto fail = [&](const std::string& what) {
        throw Error("report inconsistent: tracker " + r.label + " " + variant + " " + what +
                    " does not match its per-sequence scores");
      };
      for (View v : {View::fpv, View::tpv}) {
        const auto& a = v == View::fpv ? stored->fpv : stored->tpv;
        const auto& b = v == View::fpv ? fresh.fpv : fresh.tpv;
        if (a.has_value() != b.has_value()) fail(std::string(view_name(v)) + " aggregate");
        if (!a) continue;
        if (a->sequences != b->sequences || !close(a->total_weight, b->total_weight)) {
          fail(std::string(view_name(v)) + " weights");
        }
        for (size_t k = 0; k < kAllMetrics.size(); ++k) {
          if (!close(a->means[k], b->means[k])) fail(std::string(view_name(v)) + " " + metric_name(kAllMetrics[k]));
        }
      }
      if (stored->deltas.size() != fresh.deltas.size()) fail("delta set");
      for (size_t k = 0; k < fresh.deltas.size(); ++k) {
        const DeltaScore& a = stored->deltas[k];
        const DeltaScore& b = fresh.deltas[k];
        if (a.metric != b.metric || !close(a.delta, b.delta) || !close(a.fpv_mean, b.fpv_mean) ||
            !close(a.tpv_mean, b.tpv_mean)) {
          fail("delta " + b.metric);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Tables

std::string scores_csv(const EvalReport& report) {
  std::string out = "tracker,pair_id,view";
  for (Metric m : kAllMetrics) out += std::string(",") + metric_name(m);
  out += ",weight\n";
  for (const TrackerReport& r : report.trackers) {
    for (const SequenceScore& s : r.sequences) {
      out += csv_field(r.label) + "," + csv_field(s.pair_id) + "," + view_name(s.view);
      for (Metric m : kAllMetrics) out += "," + exact(s.value(m));
      out += "," + exact(s.weight) + "\n";
    }
  }
  return out;
}

std::string tables_markdown(const EvalReport& report) {
  std::ostringstream os;
  for (bool weighted : {true, false}) {
    os << "## " << (weighted ? "Weighted by sequence length" : "Unweighted") << "\n\n";
    os << "| tracker |";
    for (const char* v : {"FPV", "TPV"}) {
      for (Metric m : kAllMetrics) os << " " << v << " " << metric_name(m) << " |";
    }
    for (Metric m : kAllMetrics) os << " delta " << metric_name(m) << " |";
    os << "\n|---|";
    for (size_t i = 0; i < 3 * kAllMetrics.size(); ++i) os << "---:|";
    os << "\n";
    for (const TrackerReport& r : report.trackers) {
      const Aggregate& a = weighted ? r.weighted : r.unweighted;
      os << "| " << r.label << " |";
      for (const auto* v : {&a.fpv, &a.tpv}) {
        for (size_t k = 0; k < kAllMetrics.size(); ++k) os << " " << (*v ? fixed2((*v)->means[k]) : "-") << " |";
      }
      for (Metric m : kAllMetrics) {
        const DeltaScore* d = a.delta(m);
        os << " " << (d ? signed2(d->delta) : "-") << " |";
      }
      os << "\n";
    }
    os << "\n";
  }
  return os.str();
}

std::string tables_csv(const EvalReport& report) {
  std::string out = "variant,tracker";
  for (const char* v : {"fpv", "tpv", "delta"}) {
    for (Metric m : kAllMetrics) out += std::string(",") + v + "_" + metric_name(m);
  }
  out += "\n";
  for (bool weighted : {true, false}) {
    for (const TrackerReport& r : report.trackers) {
      const Aggregate& a = weighted ? r.weighted : r.unweighted;
      out += std::string(weighted ? "weighted" : "unweighted") + "," + csv_field(r.label);
      for (const auto* v : {&a.fpv, &a.tpv}) {
        for (size_t k = 0; k < kAllMetrics.size(); ++k) out += "," + (*v ? exact((*v)->means[k]) : "");
      }
      for (Metric m : kAllMetrics) {
        const DeltaScore* d = a.delta(m);
        out += "," + (d ? exact(d->delta) : "");
      }
      out += "\n";
    }
  }
  return out;
}

std::string attributes_csv(const EvalReport& report) {
  std::string out = "tracker,attribute,fpv_annotations,tpv_annotations";
  for (const char* v : {"fpv", "tpv", "delta"}) {
    for (Metric m : kAllMetrics) out += std::string(",") + v + "_" + metric_name(m);
  }
  out += "\n";
  for (const TrackerReport& r : report.trackers) {
    for (const BreakdownRow& row : r.attributes) {
      out += csv_field(r.label) + "," + row.label + "," + std::to_string(row.frames[0]) + "," +
             std::to_string(row.frames[1]);
      for (const auto* v : {&row.fpv, &row.tpv}) {
        for (size_t k = 0; k < kAllMetrics.size(); ++k) out += "," + (*v ? exact((*v)->means[k]) : "");
      }
      for (size_t k = 0; k < kAllMetrics.size(); ++k) out += "," + (row.delta ? exact((*row.delta)[k]) : "");
      out += "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run directory

fs::path run_directory(const fs::path& base, const std::string& label, const json& config) {
  // FNV-1a, 64 bit.
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return base / (label + "-" + hex);
}

void write_run_directory(const EvalReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(dir / "scores.csv", scores_csv(report));
  for (Metric m : kAllMetrics) {
    std::vector<BiasPlotPoint> points;
    for (const TrackerReport& r : report.trackers) {
      if (const DeltaScore* d = r.weighted.delta(m)) points.push_back(bias_point(r.label, d->fpv_mean, d->tpv_mean));
    }
    if (points.empty()) continue;
    const std::string name = std::string("bias_") + metric_name(m);
    write_text(dir / (name + ".svg"), bias_plot_svg(points, metric_name(m)));
    write_text(dir / (name + ".csv"), bias_plot_csv(points));
  }
  write_text(dir / "attributes.csv", attributes_csv(report));
  std::vector<CenterDistanceCurve> curves;
  for (const TrackerReport& r : report.trackers) {
    if (r.center_distance) curves.push_back(*r.center_distance);
  }
  if (!curves.empty()) {
    write_text(dir / "center_distance.csv", center_distance_csv(curves));
    write_text(dir / "center_distance.svg", center_distance_svg(curves));
  }
  write_text(dir / "tables.md", tables_markdown(report));
  write_text(dir / "tables.csv", tables_csv(report));
}

}  // namespace vista
