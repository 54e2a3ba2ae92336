#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "passlab/errors.hpp"
#include "passlab/frame.hpp"

namespace passlab {

/// Tracking and event files are JSON Lines. See docs/data_formats.md for the
/// record layouts and the vendor field mapping.

struct LoadReport {
  std::vector<std::string> warnings;  // "tracking.jsonl:12: ..." style
};

/// Parses both files. Malformed records and a non-increasing frame index
/// raise DataError with the file and line; recoverable gaps (missing
/// optional keys, fewer than 22 players) become warnings.
Match load_match(const std::filesystem::path& tracking_path, const std::filesystem::path& events_path,
                 LoadReport* report = nullptr);

/// Stream variants used by load_match; `source` only labels messages.
std::vector<TrackedFrame> read_tracking(std::istream& in, const std::string& source, LoadReport* report = nullptr);
std::vector<Event> read_events(std::istream& in, const std::string& source, LoadReport* report = nullptr);

void write_tracking(std::ostream& out, const std::vector<TrackedFrame>& frames);
void write_events(std::ostream& out, const std::vector<Event>& events);

void save_match(const Match& match, const std::filesystem::path& tracking_path,
                const std::filesystem::path& events_path);

/// A directory holding tracking.jsonl + events.jsonl, or subdirectories that
/// each do. Matches are returned in sorted path order.
std::vector<Match> load_match_dir(const std::filesystem::path& dir, LoadReport* report = nullptr);

}  // namespace passlab
