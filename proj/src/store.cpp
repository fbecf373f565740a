#include <algorithm>
#include <numeric>
#include <sstream>

#include "store_builder.hpp"

namespace voterbias {

VoteKind vote_kind_from_code(std::int32_t code) noexcept {
  switch (code) {
    case 2: return VoteKind::Up;
    case 3: return VoteKind::Down;
    case 5: return VoteKind::Favorite;
    default: return VoteKind::Other;
  }
}

std::optional<EventStore::PostIndex> EventStore::find_post(PostId id) const {
  const auto it = post_index_.find(id);
  if (it == post_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<EventStore::UserIndex> EventStore::find_user(UserId id) const {
  const auto it = user_index_.find(id);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

namespace {

void append_counts(std::ostringstream& out, const char* name, const CategoryCounts& c) {
  out << name << ".source_rows=" << c.source_rows << '\n'
      << name << ".kept=" << c.kept << '\n'
      << name << ".skipped=" << c.skipped << '\n'
      << name << ".rejected=" << c.rejected << '\n'
      << name << ".dangling=" << c.dangling << '\n'
      << name << ".duplicates=" << c.duplicates << '\n';
}

void append_line(std::ostringstream& out, const char* name, const CategoryCounts& c) {
  out << "  " << name << ": " << c.source_rows << " rows, " << c.kept << " kept, "
      << c.dropped() << " dropped (skipped " << c.skipped << ", rejected " << c.rejected
      << ", dangling " << c.dangling << ", duplicates " << c.duplicates << ")\n";
}

// `pairs` must already be sorted by group index.
template <typename Index, typename T>
Grouped<T> group_sorted(const std::vector<std::pair<Index, T>>& pairs, std::size_t groups) {
  std::vector<std::uint64_t> offsets(groups + 1, 0);
  std::vector<T> values;
  values.reserve(pairs.size());
  for (const auto& [g, v] : pairs) {
    ++offsets[g + 1];
    values.push_back(v);
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return Grouped<T>(std::move(offsets), std::move(values));
}

}  // namespace

std::string IngestReport::to_text() const {
  std::ostringstream out;
  out << "ingest report for site '" << site_name << "'\n";
  append_line(out, "posts", posts);
  append_line(out, "votes", votes);
  append_line(out, "badges", badges);
  append_line(out, "comments", comments);
  out << "  answers without owner: " << answers_without_owner << '\n'
      << "  posts whose Score differs from recomputed up-down: " << score_mismatches << '\n';
  return out.str();
}

std::string IngestReport::to_key_values() const {
  std::ostringstream out;
  out << "site=" << site_name << '\n';
  append_counts(out, "posts", posts);
  append_counts(out, "votes", votes);
  append_counts(out, "badges", badges);
  append_counts(out, "comments", comments);
  out << "answers_without_owner=" << answers_without_owner << '\n'
      << "score_mismatches=" << score_mismatches << '\n';
  return out.str();
}

EventStore StoreBuilder::build(std::string site_name, std::vector<PostEvent> posts,
                               std::vector<VoteEvent> votes, std::vector<BadgeEvent> badges,
                               std::vector<CommentEvent> comments, IngestReport& report) {
  EventStore s;
  s.site_name_ = std::move(site_name);
  report.site_name = s.site_name_;

  // Last row wins for duplicate ids.
  {
    std::unordered_map<PostId, std::size_t> latest;
    latest.reserve(posts.size());
    for (std::size_t i = 0; i < posts.size(); ++i) latest[posts[i].post_id] = i;
    report.posts.duplicates += posts.size() - latest.size();
    std::vector<PostEvent> unique;
    unique.reserve(latest.size());
    for (std::size_t i = 0; i < posts.size(); ++i) {
      if (latest[posts[i].post_id] == i) unique.push_back(std::move(posts[i]));
    }
    posts = std::move(unique);
  }
  std::sort(posts.begin(), posts.end(),
            [](const PostEvent& a, const PostEvent& b) { return a.post_id < b.post_id; });

  // Answers must reference a question present in the store.
  {
    std::unordered_map<PostId, PostKind> kinds;
    kinds.reserve(posts.size());
    for (const auto& p : posts) kinds.emplace(p.post_id, p.kind);
    const auto before = posts.size();
    std::erase_if(posts, [&](const PostEvent& p) {
      if (p.kind != PostKind::Answer) return false;
      const auto it = kinds.find(*p.parent_question_id);
      return it == kinds.end() || it->second != PostKind::Question;
    });
    report.posts.dangling += before - posts.size();
  }
  report.posts.kept = posts.size();

  s.posts_ = std::move(posts);
  s.post_index_.reserve(s.posts_.size());
  for (EventStore::PostIndex i = 0; i < s.posts_.size(); ++i) {
    s.post_index_.emplace(s.posts_[i].post_id, i);
  }
  const std::size_t n_posts = s.posts_.size();

  // Votes grouped per post, sorted by (created_at, ordinal).
  {
    std::vector<std::pair<EventStore::PostIndex, VoteEvent>> keyed;
    keyed.reserve(votes.size());
    for (auto& v : votes) {
      const auto idx = s.find_post(v.post_id);
      if (!idx) {
        ++report.votes.dangling;
        continue;
      }
      keyed.emplace_back(*idx, v);
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      const auto ka = key_of(a.second), kb = key_of(b.second);
      if (ka != kb) return ka < kb;
      if (a.second.type_code != b.second.type_code) return a.second.type_code < b.second.type_code;
      return a.second.kind < b.second.kind;
    });
    s.votes_ = group_sorted(keyed, n_posts);
    report.votes.kept = s.votes_.values().size();
  }

  {
    std::vector<std::pair<EventStore::PostIndex, CommentEvent>> keyed;
    keyed.reserve(comments.size());
    for (auto& c : comments) {
      const auto idx = s.find_post(c.post_id);
      if (!idx) {
        ++report.comments.dangling;
        continue;
      }
      keyed.emplace_back(*idx, c);
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second.created_at < b.second.created_at;
    });
    s.comments_ = group_sorted(keyed, n_posts);
    report.comments.kept = s.comments_.values().size();
  }

  const auto by_creation = [&s](EventStore::PostIndex a, EventStore::PostIndex b) {
    const auto& pa = s.posts_[a];
    const auto& pb = s.posts_[b];
    if (pa.created_at != pb.created_at) return pa.created_at < pb.created_at;
    return pa.post_id < pb.post_id;
  };

  {
    std::vector<std::pair<EventStore::PostIndex, EventStore::PostIndex>> pairs;
    for (EventStore::PostIndex i = 0; i < n_posts; ++i) {
      const auto& p = s.posts_[i];
      if (p.kind == PostKind::Question) {
        s.questions_.push_back(i);
      } else {
        s.all_answers_.push_back(i);
        pairs.emplace_back(*s.find_post(*p.parent_question_id), i);
        if (!p.owner_user_id) ++report.answers_without_owner;
      }
    }
    std::sort(pairs.begin(), pairs.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return by_creation(a.second, b.second);
    });
    s.answers_ = group_sorted(pairs, n_posts);
  }

  // Users: post owners and badge holders.
  {
    std::vector<UserId> ids;
    for (const auto& p : s.posts_) {
      if (p.owner_user_id) ids.push_back(*p.owner_user_id);
    }
    for (const auto& b : badges) ids.push_back(b.user_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    s.users_ = std::move(ids);
    s.user_index_.reserve(s.users_.size());
    for (EventStore::UserIndex u = 0; u < s.users_.size(); ++u) s.user_index_.emplace(s.users_[u], u);
    const std::size_t n_users = s.users_.size();

    std::vector<std::pair<EventStore::UserIndex, BadgeEvent>> held;
    held.reserve(badges.size());
    for (const auto& b : badges) held.emplace_back(s.user_index_.at(b.user_id), b);
    std::sort(held.begin(), held.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      if (a.second.awarded_at != b.second.awarded_at) {
        return a.second.awarded_at < b.second.awarded_at;
      }
      return a.second.badge_class < b.second.badge_class;
    });
    report.badges.kept = held.size();
    s.badges_ = group_sorted(held, n_users);

    std::vector<std::pair<EventStore::UserIndex, EventStore::PostIndex>> owned;
    for (EventStore::PostIndex i = 0; i < n_posts; ++i) {
      if (const auto& o = s.posts_[i].owner_user_id) owned.emplace_back(s.user_index_.at(*o), i);
    }
    std::sort(owned.begin(), owned.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return by_creation(a.second, b.second);
    });
    s.user_posts_ = group_sorted(owned, n_users);
  }

  if (!s.posts_.empty()) {
    s.first_post_time_ = std::min_element(s.posts_.begin(), s.posts_.end(),
                                          [](const PostEvent& a, const PostEvent& b) {
                                            return a.created_at < b.created_at;
                                          })->created_at;
  }

  for (EventStore::PostIndex i = 0; i < n_posts; ++i) {
    std::int64_t score = 0;
    for (const auto& v : s.votes_of(i)) score += v.score_delta();
    if (score != s.posts_[i].snapshot_score) ++report.score_mismatches;
  }

  return s;
}

}  // namespace voterbias
