#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vista/data_model.hpp"
#include <nlohmann/json.hpp>

namespace vista {

/// One line of an annotation or prediction file.
struct TrackEntry {
  int t = 0;
  TargetState state;
};

/// Parses a state from an object carrying "box", "rle" or neither. Objects
/// with both, or with `{"absent": true}` next to geometry, are rejected.
TargetState state_from_json(const nlohmann::json& j);

/// Adds "box" / "rle" to `j` (nothing for Absent).
void state_to_json(const TargetState& state, nlohmann::json& j);

/// Reads JSON Lines entries. Timestamps must be strictly increasing.
std::vector<TrackEntry> read_track_entries(std::istream& in, const std::string& origin);
std::vector<TrackEntry> read_track_file(const std::filesystem::path& path);

/// Writes one line per entry; Absent entries are written as `{"t": ...}`
/// only when `write_absent` is set.
void write_track_entries(std::ostream& out, const std::vector<TrackEntry>& entries,
                         bool write_absent);
void write_track_file(const std::filesystem::path& path, const std::vector<TrackEntry>& entries,
                      bool write_absent);

PredictionTrack prediction_track(std::vector<TrackEntry> entries);
std::vector<TrackEntry> entries_of(const PredictionTrack& track);

/// Non-Absent entries of a ground-truth track.
std::vector<TrackEntry> entries_of(const AnnotationTrack& track);

}  // namespace vista
