#pragma once

#include <string>
#include <vector>

#include "voterbias/events.hpp"

namespace voterbias {

struct StoreBuilder {
  /// Validated events in, canonical store out. Updates kept/dangling/
  /// duplicate counters in `report`.
  static EventStore build(std::string site_name, std::vector<PostEvent> posts,
                          std::vector<VoteEvent> votes, std::vector<BadgeEvent> badges,
                          std::vector<CommentEvent> comments, IngestReport& report);
};

}  // namespace voterbias
