#include "voterbias/ingest.hpp"

#include <expat.h>

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>

#include "store_builder.hpp"
#include "voterbias/error.hpp"

namespace voterbias::ingest {

namespace {

/// Attribute lookup over expat's null-terminated name/value array.
class RowAttributes {
 public:
  explicit RowAttributes(const XML_Char** atts) : atts_(atts) {}

  std::optional<std::string_view> get(std::string_view name) const {
    for (const XML_Char** a = atts_; *a != nullptr; a += 2) {
      if (name == a[0]) return std::string_view(a[1]);
    }
    return std::nullopt;
  }

  std::optional<std::int64_t> integer(std::string_view name) const {
    const auto text = get(name);
    if (!text) return std::nullopt;
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), value);
    if (ec != std::errc{} || ptr != text->data() + text->size()) return std::nullopt;
    return value;
  }

  std::optional<UnixSeconds> timestamp(std::string_view name) const {
    const auto text = get(name);
    if (!text) return std::nullopt;
    return parse_dump_timestamp(*text);
  }

  bool has(std::string_view name) const { return get(name).has_value(); }

 private:
  const XML_Char** atts_;
};

enum class RowOutcome { Kept, Skipped, Rejected };

using RowHandler = std::function<RowOutcome(const RowAttributes&)>;

struct RowStats {
  std::uint64_t source_rows = 0;
  std::uint64_t skipped = 0;
  std::uint64_t rejected = 0;
};

struct ParserState {
  RowHandler* handler;
  RowStats stats;
  int depth = 0;
};

void XMLCALL on_start(void* user, const XML_Char* name, const XML_Char** atts) {
  auto* st = static_cast<ParserState*>(user);
  ++st->depth;
  if (st->depth != 2 || std::strcmp(name, "row") != 0) return;
  ++st->stats.source_rows;
  switch ((*st->handler)(RowAttributes(atts))) {
    case RowOutcome::Kept: break;
    case RowOutcome::Skipped: ++st->stats.skipped; break;
    case RowOutcome::Rejected: ++st->stats.rejected; break;
  }
}

void XMLCALL on_end(void* user, const XML_Char*) { --static_cast<ParserState*>(user)->depth; }

RowStats stream_rows(std::istream& in, RowHandler handler) {
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
      XML_ParserCreate("UTF-8"), &XML_ParserFree);
  if (!parser) throw Error("failed to allocate XML parser");

  ParserState state{&handler, {}, 0};
  XML_SetUserData(parser.get(), &state);
  XML_SetElementHandler(parser.get(), on_start, on_end);

  constexpr int kChunk = 1 << 20;
  for (;;) {
    void* buf = XML_GetBuffer(parser.get(), kChunk);
    if (buf == nullptr) throw Error("XML parser out of memory");
    in.read(static_cast<char*>(buf), kChunk);
    const auto got = static_cast<int>(in.gcount());
    const bool last = got < kChunk;
    if (XML_ParseBuffer(parser.get(), got, last ? 1 : 0) == XML_STATUS_ERROR) {
      throw XmlParseError(XML_ErrorString(XML_GetErrorCode(parser.get())),
                          static_cast<std::uint64_t>(XML_GetCurrentByteIndex(parser.get())));
    }
    if (last) break;
  }
  return state.stats;
}

template <typename Event>
ParseResult<Event> finish(std::vector<Event> events, const RowStats& stats) {
  ParseResult<Event> r;
  r.events = std::move(events);
  r.source_rows = stats.source_rows;
  r.skipped = stats.skipped;
  r.rejected = stats.rejected;
  return r;
}

std::optional<std::int64_t> non_negative(std::optional<std::int64_t> v) {
  if (v && *v < 0) return std::nullopt;
  return v;
}

}  // namespace

ParseResult<PostEvent> parse_posts(std::istream& in) {
  std::vector<PostEvent> out;
  const auto stats = stream_rows(in, [&](const RowAttributes& row) {
    const auto type = row.integer("PostTypeId");
    if (!type) return RowOutcome::Rejected;
    if (*type != 1 && *type != 2) return RowOutcome::Skipped;
    const auto id = row.integer("Id");
    const auto created = row.timestamp("CreationDate");
    if (!id || !created) return RowOutcome::Rejected;

    PostEvent p;
    p.post_id = *id;
    p.kind = *type == 1 ? PostKind::Question : PostKind::Answer;
    p.created_at = *created;
    if (p.kind == PostKind::Answer) {
      p.parent_question_id = row.integer("ParentId");
      if (!p.parent_question_id) return RowOutcome::Rejected;
    }
    p.owner_user_id = row.integer("OwnerUserId");
    if (row.has("Score")) {
      const auto score = row.integer("Score");
      if (!score) return RowOutcome::Rejected;
      p.snapshot_score = *score;
    }
    if (p.kind == PostKind::Question) {
      p.snapshot_view_count = non_negative(row.integer("ViewCount"));
    }
    p.snapshot_favorite_count = non_negative(row.integer("FavoriteCount"));
    p.snapshot_comment_count = non_negative(row.integer("CommentCount")).value_or(0);
    out.push_back(std::move(p));
    return RowOutcome::Kept;
  });
  return finish(std::move(out), stats);
}

ParseResult<VoteEvent> parse_votes(std::istream& in) {
  std::vector<VoteEvent> out;
  const auto stats = stream_rows(in, [&](const RowAttributes& row) {
    const auto id = row.integer("Id");
    const auto post = row.integer("PostId");
    const auto type = row.integer("VoteTypeId");
    const auto created = row.timestamp("CreationDate");
    if (!id || !post || !type || !created) return RowOutcome::Rejected;
    VoteEvent v;
    v.post_id = *post;
    v.type_code = static_cast<std::int32_t>(*type);
    v.kind = vote_kind_from_code(v.type_code);
    v.created_at = day_start(*created);
    v.source_ordinal = *id;
    out.push_back(v);
    return RowOutcome::Kept;
  });
  return finish(std::move(out), stats);
}

ParseResult<BadgeEvent> parse_badges(std::istream& in) {
  std::vector<BadgeEvent> out;
  const auto stats = stream_rows(in, [&](const RowAttributes& row) {
    const auto user = row.integer("UserId");
    const auto cls = row.integer("Class");
    const auto date = row.timestamp("Date");
    if (!user || !cls || !date) return RowOutcome::Rejected;
    if (*cls < 1 || *cls > 3) return RowOutcome::Rejected;
    out.push_back({*user, static_cast<BadgeClass>(*cls), *date});
    return RowOutcome::Kept;
  });
  return finish(std::move(out), stats);
}

ParseResult<CommentEvent> parse_comments(std::istream& in) {
  std::vector<CommentEvent> out;
  const auto stats = stream_rows(in, [&](const RowAttributes& row) {
    const auto post = row.integer("PostId");
    const auto created = row.timestamp("CreationDate");
    if (!post || !created) return RowOutcome::Rejected;
    out.push_back({*post, *created});
    return RowOutcome::Kept;
  });
  return finish(std::move(out), stats);
}

namespace {

template <typename Event>
void seed_counts(CategoryCounts& c, const ParseResult<Event>& r) {
  c.source_rows = r.source_rows;
  c.skipped = r.skipped;
  c.rejected = r.rejected;
}

}  // namespace

BuildResult build_store(std::string site_name, ParseResult<PostEvent> posts,
                        ParseResult<VoteEvent> votes, ParseResult<BadgeEvent> badges,
                        ParseResult<CommentEvent> comments) {
  BuildResult out;
  seed_counts(out.report.posts, posts);
  seed_counts(out.report.votes, votes);
  seed_counts(out.report.badges, badges);
  seed_counts(out.report.comments, comments);
  out.store = StoreBuilder::build(std::move(site_name), std::move(posts.events),
                                  std::move(votes.events), std::move(badges.events),
                                  std::move(comments.events), out.report);
  return out;
}

BuildResult build_store(std::string site_name, std::vector<PostEvent> posts,
                        std::vector<VoteEvent> votes, std::vector<BadgeEvent> badges,
                        std::vector<CommentEvent> comments) {
  const auto wrap = [](auto events) {
    ParseResult<typename decltype(events)::value_type> r;
    r.source_rows = events.size();
    r.events = std::move(events);
    return r;
  };
  return build_store(std::move(site_name), wrap(std::move(posts)), wrap(std::move(votes)),
                     wrap(std::move(badges)), wrap(std::move(comments)));
}

namespace {

template <typename Parse>
auto parse_file(const std::string& path, Parse parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dump file '" + path + "'");
  try {
    return parse(in);
  } catch (const XmlParseError& e) {
    throw XmlParseError(path + ": " + e.what(), e.byte_offset());
  }
}

}  // namespace

BuildResult ingest_files(const std::string& site_name, const DumpPaths& paths) {
  for (const auto* p : {&paths.posts, &paths.votes, &paths.badges, &paths.comments}) {
    if (!std::ifstream(*p)) throw DataError("cannot open dump file '" + *p + "'");
  }

  ParseResult<PostEvent> posts;
  ParseResult<VoteEvent> votes;
  ParseResult<BadgeEvent> badges;
  ParseResult<CommentEvent> comments;
  std::array<std::exception_ptr, 4> errors{};

#pragma omp parallel sections
  {
#pragma omp section
    try {
      posts = parse_file(paths.posts, parse_posts);
    } catch (...) {
      errors[0] = std::current_exception();
    }
#pragma omp section
    try {
      votes = parse_file(paths.votes, parse_votes);
    } catch (...) {
      errors[1] = std::current_exception();
    }
#pragma omp section
    try {
      badges = parse_file(paths.badges, parse_badges);
    } catch (...) {
      errors[2] = std::current_exception();
    }
#pragma omp section
    try {
      comments = parse_file(paths.comments, parse_comments);
    } catch (...) {
      errors[3] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return build_store(site_name, std::move(posts), std::move(votes), std::move(badges),
                     std::move(comments));
}

}  // namespace voterbias::ingest
