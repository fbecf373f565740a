#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "voterbias/events.hpp"

namespace voterbias::ingest {

/// Rows parsed from one dump file. `events.size() + skipped + rejected`
/// equals `source_rows`.
template <typename Event>
struct ParseResult {
  std::vector<Event> events;
  std::uint64_t source_rows = 0;
  std::uint64_t skipped = 0;
  std::uint64_t rejected = 0;
};

// Each parser streams `<row .../>` elements from a Stack Exchange dump file
// (Posts.xml, Votes.xml, Badges.xml, Comments.xml). Malformed XML throws
// XmlParseError; rows with missing or invalid required attributes are
// rejected and counted.

/// Keeps PostTypeId 1 (Question) and 2 (Answer); other types are skipped.
ParseResult<PostEvent> parse_posts(std::istream& in);
ParseResult<VoteEvent> parse_votes(std::istream& in);
ParseResult<BadgeEvent> parse_badges(std::istream& in);
ParseResult<CommentEvent> parse_comments(std::istream& in);

struct BuildResult {
  EventStore store;
  IngestReport report;
};

/// Merges parsed sequences into an EventStore. Duplicate post ids keep the
/// last row. Answers whose parent is not a known question, and votes or
/// comments on unknown posts, are dropped and counted as dangling. Parse
/// counters from the ParseResults are carried into the report.
BuildResult build_store(std::string site_name, ParseResult<PostEvent> posts,
                        ParseResult<VoteEvent> votes, ParseResult<BadgeEvent> badges,
                        ParseResult<CommentEvent> comments);

/// Convenience overload for pre-validated event sequences.
BuildResult build_store(std::string site_name, std::vector<PostEvent> posts,
                        std::vector<VoteEvent> votes, std::vector<BadgeEvent> badges,
                        std::vector<CommentEvent> comments);

struct DumpPaths {
  std::string posts;
  std::string votes;
  std::string badges;
  std::string comments;
};

/// Opens and parses the four files (in parallel when OpenMP is available)
/// and builds the store. A missing or unreadable file throws DataError
/// naming the path.
BuildResult ingest_files(const std::string& site_name, const DumpPaths& paths);

}  // namespace voterbias::ingest
