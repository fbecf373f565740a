#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "voterbias/events.hpp"
#include "voterbias/ingest.hpp"
#include "voterbias/variables.hpp"

namespace vbtest {

using namespace voterbias;

struct RawDump {
  std::string site = "test";
  std::vector<PostEvent> posts;
  std::vector<VoteEvent> votes;
  std::vector<BadgeEvent> badges;
  std::vector<CommentEvent> comments;
};

EventStore build(const RawDump& dump);

/// Question 1 with answers 11, 12, 13 and 30 votes, one per day. The first
/// nine votes give the answers +4, -1 and 0; all thirty give +10, -2, +2.
RawDump fig4_dump();

/// Small random dump: at most `max_questions` questions, at most `max_votes`
/// votes, plus comments and badges. Always referentially valid.
RawDump random_dump(std::uint64_t seed, int max_questions = 10, int max_votes = 50);

using Values = std::array<std::optional<std::int64_t>, 42>;

/// Straight-from-the-definitions recomputation of every variable, keyed by
/// answer id. Works on the raw events and shares no code with the compiler.
std::map<PostId, Values> brute_force(const RawDump& dump, const vars::WindowSpec& window);

/// Writes the dump as the four Stack Exchange XML files into `dir`.
ingest::DumpPaths write_xml_dump(const RawDump& dump, const std::string& dir);

/// Fresh empty directory under the system temp dir.
std::string temp_dir(const std::string& name);

}  // namespace vbtest
