#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "voterbias/timeutil.hpp"

namespace voterbias {

using PostId = std::int64_t;
using UserId = std::int64_t;

enum class PostKind : std::uint8_t { Question = 1, Answer = 2 };

struct PostEvent {
  PostId post_id = 0;
  PostKind kind = PostKind::Question;
  std::optional<PostId> parent_question_id;
  std::optional<UserId> owner_user_id;
  UnixSeconds created_at = 0;
  std::int64_t snapshot_score = 0;
  std::optional<std::int64_t> snapshot_view_count;
  std::optional<std::int64_t> snapshot_favorite_count;
  std::int64_t snapshot_comment_count = 0;

  bool operator==(const PostEvent&) const = default;
};

enum class VoteKind : std::uint8_t { Up, Down, Favorite, Other };

struct VoteEvent {
  PostId post_id = 0;
  VoteKind kind = VoteKind::Other;
  /// Raw VoteTypeId from the dump.
  std::int32_t type_code = 0;
  /// Day-granular: always 00:00:00 UTC of the recorded day.
  UnixSeconds created_at = 0;
  /// Source row id, orders votes within a day.
  std::int64_t source_ordinal = 0;

  /// +1 for Up, -1 for Down, 0 otherwise.
  int score_delta() const noexcept {
    return kind == VoteKind::Up ? 1 : kind == VoteKind::Down ? -1 : 0;
  }

  bool operator==(const VoteEvent&) const = default;
};

VoteKind vote_kind_from_code(std::int32_t code) noexcept;

enum class BadgeClass : std::uint8_t { Gold = 1, Silver = 2, Bronze = 3 };

struct BadgeEvent {
  UserId user_id = 0;
  BadgeClass badge_class = BadgeClass::Bronze;
  UnixSeconds awarded_at = 0;

  bool operator==(const BadgeEvent&) const = default;
};

struct CommentEvent {
  PostId post_id = 0;
  UnixSeconds created_at = 0;

  bool operator==(const CommentEvent&) const = default;
};

/// Total order used by every time comparison involving votes.
struct EventKey {
  UnixSeconds time = 0;
  std::int64_t ordinal = 0;

  auto operator<=>(const EventKey&) const = default;
};

inline EventKey key_of(const VoteEvent& v) noexcept { return {v.created_at, v.source_ordinal}; }

/// Compressed per-entity sequences: values of entity i live in
/// [offsets[i], offsets[i+1]).
template <typename T>
class Grouped {
 public:
  Grouped() : offsets_{0} {}
  Grouped(std::vector<std::uint64_t> offsets, std::vector<T> values)
      : offsets_(std::move(offsets)), values_(std::move(values)) {}

  std::span<const T> at(std::size_t i) const {
    return {values_.data() + offsets_[i], values_.data() + offsets_[i + 1]};
  }
  std::size_t groups() const noexcept { return offsets_.size() - 1; }
  const std::vector<T>& values() const noexcept { return values_; }
  const std::vector<std::uint64_t>& offsets() const noexcept { return offsets_; }

  bool operator==(const Grouped&) const = default;

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<T> values_;
};

/// Per-category counters. kept + skipped + rejected + dangling + duplicates
/// equals source_rows.
struct CategoryCounts {
  std::uint64_t source_rows = 0;
  std::uint64_t kept = 0;
  /// Valid rows outside the modeled subset (e.g. wiki posts).
  std::uint64_t skipped = 0;
  /// Rows missing required attributes or carrying invalid values.
  std::uint64_t rejected = 0;
  /// Rows referencing posts that are not in the store.
  std::uint64_t dangling = 0;
  /// Rows superseded by a later row with the same id (last wins).
  std::uint64_t duplicates = 0;

  std::uint64_t dropped() const noexcept { return skipped + rejected + dangling + duplicates; }
  bool operator==(const CategoryCounts&) const = default;
};

struct IngestReport {
  std::string site_name;
  CategoryCounts posts;
  CategoryCounts votes;
  CategoryCounts badges;
  CategoryCounts comments;
  /// Posts whose Score attribute differs from the recomputed Up - Down total.
  std::uint64_t score_mismatches = 0;
  std::uint64_t answers_without_owner = 0;

  std::string to_text() const;
  /// `key=value` lines, one counter per line.
  std::string to_key_values() const;
};

/// Immutable, time-indexed view of one site's dump.
class EventStore {
 public:
  using PostIndex = std::uint32_t;
  using UserIndex = std::uint32_t;

  EventStore() = default;

  const std::string& site_name() const noexcept { return site_name_; }

  /// Posts sorted by id.
  std::span<const PostEvent> posts() const noexcept { return posts_; }
  std::optional<PostIndex> find_post(PostId id) const;
  const PostEvent& post(PostIndex i) const { return posts_[i]; }

  /// Sorted by (created_at, source_ordinal).
  std::span<const VoteEvent> votes_of(PostIndex i) const { return votes_.at(i); }
  /// Sorted by created_at.
  std::span<const CommentEvent> comments_of(PostIndex i) const { return comments_.at(i); }
  /// Answers of a question sorted by (created_at, post_id). Empty for answers.
  std::span<const PostIndex> answers_of(PostIndex question) const { return answers_.at(question); }

  std::span<const UserId> users() const noexcept { return users_; }
  std::optional<UserIndex> find_user(UserId id) const;
  /// Badges sorted by (awarded_at, class).
  std::span<const BadgeEvent> badges_of(UserIndex u) const { return badges_.at(u); }
  /// Posts owned by the user, sorted by (created_at, post_id).
  std::span<const PostIndex> posts_by(UserIndex u) const { return user_posts_.at(u); }

  std::span<const PostIndex> questions() const noexcept { return questions_; }
  std::span<const PostIndex> answers() const noexcept { return all_answers_; }

  /// Creation time of the earliest post; 0 for an empty store.
  UnixSeconds first_post_time() const noexcept { return first_post_time_; }

  std::size_t vote_count() const noexcept { return votes_.values().size(); }
  std::size_t comment_count() const noexcept { return comments_.values().size(); }
  std::size_t badge_count() const noexcept { return badges_.values().size(); }

  /// Flat canonical sequences, in store order.
  const std::vector<VoteEvent>& all_votes() const noexcept { return votes_.values(); }
  const std::vector<CommentEvent>& all_comments() const noexcept { return comments_.values(); }
  const std::vector<BadgeEvent>& all_badges() const noexcept { return badges_.values(); }

  friend struct StoreBuilder;

 private:
  std::string site_name_;
  std::vector<PostEvent> posts_;
  std::unordered_map<PostId, PostIndex> post_index_;
  Grouped<VoteEvent> votes_;
  Grouped<CommentEvent> comments_;
  Grouped<PostIndex> answers_;
  std::vector<UserId> users_;
  std::unordered_map<UserId, UserIndex> user_index_;
  Grouped<BadgeEvent> badges_;
  Grouped<PostIndex> user_posts_;
  std::vector<PostIndex> questions_;
  std::vector<PostIndex> all_answers_;
  UnixSeconds first_post_time_ = 0;
};

}  // namespace voterbias
