#include "vista/track_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "vista/error.hpp"

namespace vista {
namespace {

using nlohmann::json;

Box box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("\"box\" must be [x, y, w, h]");
  for (const auto& v : j) {
    if (!v.is_number()) throw ParseError("\"box\" entries must be numbers");
  }
  return Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

BinaryMask rle_from_json(const json& j) {
  if (!j.is_object() || !j.contains("size") || !j.contains("counts")) {
    throw ParseError("\"rle\" must carry \"size\" and \"counts\"");
  }
  const json& size = j.at("size");
  if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() ||
      !size[1].is_number_integer()) {
    throw ParseError("\"rle.size\" must be [height, width]");
  }
  const int h = size[0].get<int>();
  const int w = size[1].get<int>();
  const json& counts = j.at("counts");
  if (counts.is_string()) return decode_counts(h, w, counts.get<std::string>());
  if (counts.is_array()) {
    std::vector<uint32_t> c;
    for (const auto& v : counts) {
      if (!v.is_number_unsigned()) throw ParseError("\"rle.counts\" must be non-negative integers");
      c.push_back(v.get<uint32_t>());
    }
    try {
      return BinaryMask(h, w, std::move(c));
    } catch (const DimensionError& e) {
      throw ParseError(std::string("malformed RLE: ") + e.what());
    }
  }
  throw ParseError("\"rle.counts\" must be a string or an array");
}

}  // namespace

TargetState state_from_json(const json& j) {
  const bool has_box = j.contains("box");
  const bool has_rle = j.contains("rle");
  if (has_box && has_rle) throw ParseError("line carries both \"box\" and \"rle\"");
  if (j.contains("absent") && (has_box || has_rle)) {
    throw ParseError("line carries \"absent\" together with geometry");
  }
  if (has_box) return box_from_json(j.at("box"));
  if (has_rle) return rle_from_json(j.at("rle"));
  return Absent{};
}

void state_to_json(const TargetState& state, json& j) {
  if (const Box* b = std::get_if<Box>(&state)) {
    j["box"] = {b->x, b->y, b->w, b->h};
  } else if (const BinaryMask* m = std::get_if<BinaryMask>(&state)) {
    j["rle"] = {{"size", {m->height(), m->width()}}, {"counts", encode_counts(*m)}};
  }
}

std::vector<TrackEntry> read_track_entries(std::istream& in, const std::string& origin) {
  std::vector<TrackEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("t") || !j.at("t").is_number_integer()) {
      throw ParseError(where + ": missing integer \"t\"");
    }
    TrackEntry entry;
    entry.t = j.at("t").get<int>();
    try {
      entry.state = state_from_json(j);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const DimensionError& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!entries.empty()) {
      if (entry.t == entries.back().t) {
        throw ParseError(where + ": duplicate t " + std::to_string(entry.t));
      }
      if (entry.t < entries.back().t) throw ParseError(where + ": entries not sorted by t");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<TrackEntry> read_track_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open " + path.string());
  return read_track_entries(in, path.string());
}

void write_track_entries(std::ostream& out, const std::vector<TrackEntry>& entries,
                         bool write_absent) {
  for (const TrackEntry& e : entries) {
    if (is_absent(e.state) && !write_absent) continue;
    json j;
    j["t"] = e.t;
    state_to_json(e.state, j);
    out << j.dump() << '\n';
  }
}

void write_track_file(const std::filesystem::path& path, const std::vector<TrackEntry>& entries,
                      bool write_absent) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_track_entries(out, entries, write_absent);
}

PredictionTrack prediction_track(std::vector<TrackEntry> entries) {
  PredictionTrack track;
  for (TrackEntry& e : entries) track.push(e.t, std::move(e.state));
  return track;
}

std::vector<TrackEntry> entries_of(const PredictionTrack& track) {
  std::vector<TrackEntry> out;
  for (size_t i = 0; i < track.timestamps.size(); ++i) {
    out.push_back({track.timestamps[i], track.states[i]});
  }
  return out;
}

std::vector<TrackEntry> entries_of(const AnnotationTrack& track) {
  std::vector<TrackEntry> out;
  for (size_t i = 0; i < track.timestamps.size(); ++i) {
    if (!is_absent(track.states[i])) out.push_back({track.timestamps[i], track.states[i]});
  }
  return out;
}

}  // namespace vista
