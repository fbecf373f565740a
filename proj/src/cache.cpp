#include "voterbias/cache.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "voterbias/error.hpp"
#include "voterbias/ingest.hpp"

namespace voterbias::cache {

namespace {

constexpr std::string_view kMagic{"VBSTORE\0", 8};

template <typename T>
void put_optional(detail::ByteWriter& w, const std::vector<PostEvent>& posts,
                  std::optional<T> PostEvent::*field) {
  w.put_column(posts, [&](const PostEvent& p) { return static_cast<std::uint8_t>((p.*field).has_value()); });
  w.put_column(posts, [&](const PostEvent& p) { return static_cast<std::int64_t>((p.*field).value_or(0)); });
}

std::vector<std::optional<std::int64_t>> get_optional(detail::ByteReader& r, std::size_t n) {
  std::vector<std::uint8_t> present(n);
  for (auto& p : present) p = r.get<std::uint8_t>();
  std::vector<std::optional<std::int64_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = r.get<std::int64_t>();
    if (present[i]) out[i] = v;
  }
  return out;
}

}  // namespace

std::string serialize_store(const EventStore& store) {
  detail::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kStoreFormatVersion);
  w.put_string(store.site_name());

  const std::vector<PostEvent> posts(store.posts().begin(), store.posts().end());
  w.put<std::uint64_t>(posts.size());
  w.put_column(posts, [](const PostEvent& p) { return p.post_id; });
  w.put_column(posts, [](const PostEvent& p) { return static_cast<std::uint8_t>(p.kind); });
  put_optional(w, posts, &PostEvent::parent_question_id);
  put_optional(w, posts, &PostEvent::owner_user_id);
  w.put_column(posts, [](const PostEvent& p) { return p.created_at; });
  w.put_column(posts, [](const PostEvent& p) { return p.snapshot_score; });
  put_optional(w, posts, &PostEvent::snapshot_view_count);
  put_optional(w, posts, &PostEvent::snapshot_favorite_count);
  w.put_column(posts, [](const PostEvent& p) { return p.snapshot_comment_count; });

  const auto& votes = store.all_votes();
  w.put<std::uint64_t>(votes.size());
  w.put_column(votes, [](const VoteEvent& v) { return v.post_id; });
  w.put_column(votes, [](const VoteEvent& v) { return v.type_code; });
  w.put_column(votes, [](const VoteEvent& v) { return v.created_at; });
  w.put_column(votes, [](const VoteEvent& v) { return v.source_ordinal; });

  const auto& badges = store.all_badges();
  w.put<std::uint64_t>(badges.size());
  w.put_column(badges, [](const BadgeEvent& b) { return b.user_id; });
  w.put_column(badges, [](const BadgeEvent& b) { return static_cast<std::uint8_t>(b.badge_class); });
  w.put_column(badges, [](const BadgeEvent& b) { return b.awarded_at; });

  const auto& comments = store.all_comments();
  w.put<std::uint64_t>(comments.size());
  w.put_column(comments, [](const CommentEvent& c) { return c.post_id; });
  w.put_column(comments, [](const CommentEvent& c) { return c.created_at; });

  const auto checksum = detail::fnv1a64(w.bytes());
  w.put<std::uint64_t>(checksum);
  return w.take();
}

EventStore deserialize_store(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 12 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError("not a store cache file");
  }
  const auto body = bytes.substr(0, bytes.size() - 8);
  detail::ByteReader trailer(bytes.substr(bytes.size() - 8));
  if (trailer.get<std::uint64_t>() != detail::fnv1a64(body)) {
    throw DataError("store cache checksum mismatch");
  }

  detail::ByteReader r(body);
  r.get_bytes(kMagic.size());
  const auto version = r.get<std::uint32_t>();
  if (version != kStoreFormatVersion) {
    throw DataError("unsupported store cache version " + std::to_string(version));
  }
  auto site = r.get_string();

  const auto n_posts = r.get<std::uint64_t>();
  std::vector<PostEvent> posts(n_posts);
  for (auto& p : posts) p.post_id = r.get<std::int64_t>();
  for (auto& p : posts) {
    const auto kind = r.get<std::uint8_t>();
    if (kind != 1 && kind != 2) throw DataError("store cache: invalid post kind");
    p.kind = static_cast<PostKind>(kind);
  }
  const auto parents = get_optional(r, n_posts);
  const auto owners = get_optional(r, n_posts);
  for (auto& p : posts) p.created_at = r.get<std::int64_t>();
  for (auto& p : posts) p.snapshot_score = r.get<std::int64_t>();
  const auto views = get_optional(r, n_posts);
  const auto favorites = get_optional(r, n_posts);
  for (auto& p : posts) p.snapshot_comment_count = r.get<std::int64_t>();
  for (std::size_t i = 0; i < n_posts; ++i) {
    posts[i].parent_question_id = parents[i];
    posts[i].owner_user_id = owners[i];
    posts[i].snapshot_view_count = views[i];
    posts[i].snapshot_favorite_count = favorites[i];
    if (posts[i].kind == PostKind::Answer && !posts[i].parent_question_id) {
      throw DataError("store cache: answer without parent");
    }
  }

  std::vector<VoteEvent> votes(r.get<std::uint64_t>());
  for (auto& v : votes) v.post_id = r.get<std::int64_t>();
  for (auto& v : votes) {
    v.type_code = r.get<std::int32_t>();
    v.kind = vote_kind_from_code(v.type_code);
  }
  for (auto& v : votes) v.created_at = r.get<std::int64_t>();
  for (auto& v : votes) v.source_ordinal = r.get<std::int64_t>();

  std::vector<BadgeEvent> badges(r.get<std::uint64_t>());
  for (auto& b : badges) b.user_id = r.get<std::int64_t>();
  for (auto& b : badges) {
    const auto cls = r.get<std::uint8_t>();
    if (cls < 1 || cls > 3) throw DataError("store cache: invalid badge class");
    b.badge_class = static_cast<BadgeClass>(cls);
  }
  for (auto& b : badges) b.awarded_at = r.get<std::int64_t>();

  std::vector<CommentEvent> comments(r.get<std::uint64_t>());
  for (auto& c : comments) c.post_id = r.get<std::int64_t>();
  for (auto& c : comments) c.created_at = r.get<std::int64_t>();

  if (!r.at_end()) throw DataError("store cache: trailing bytes");
  return ingest::build_store(std::move(site), std::move(posts), std::move(votes),
                             std::move(badges), std::move(comments))
      .store;
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_store_file(const std::string& path, const EventStore& store) {
  write_file_atomic(path, serialize_store(store));
}

EventStore read_store_file(const std::string& path) { return deserialize_store(read_file(path)); }

}  // namespace voterbias::cache
