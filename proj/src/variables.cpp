#include "voterbias/variables.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "voterbias/error.hpp"

namespace voterbias::vars {

WindowSpec WindowSpec::percentile(int percent) {
  if (percent < 1 || percent > 99) {
    throw UsageError("window percentile must be in 1..99, got " + std::to_string(percent));
  }
  return {Mode::Percentile, percent};
}

WindowSpec WindowSpec::question_day() { return {Mode::QuestionDay, 0}; }

WindowSpec WindowSpec::parse(std::string_view tag) {
  if (tag == "day") return question_day();
  if (tag.starts_with("pct:")) {
    const auto digits = tag.substr(4);
    int p = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), p);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && !digits.empty()) {
      return percentile(p);
    }
  }
  throw UsageError("invalid window '" + std::string(tag) + "' (expected pct:P or day)");
}

std::string WindowSpec::tag() const {
  return mode_ == Mode::QuestionDay ? "day" : "pct:" + std::to_string(percent_);
}

bool is_windowed(int variable) noexcept {
  return std::find(kWindowedVariables.begin(), kWindowedVariables.end(), variable) !=
         kWindowedVariables.end();
}

std::string variable_name(int variable) { return "V" + std::to_string(variable); }

std::string_view variable_label(int variable) {
  static constexpr std::array<std::string_view, 42> kLabels{
      "",
      "Site",
      "T",
      "QuestionViewCount",
      "QuestionFavoriteCount",
      "QuestionScore",
      "QuestionScoreT-",
      "QuestionScoreT+",
      "QuestionCommentCount",
      "QuestionCommentCountT-",
      "QuestionCommentCountT+",
      "QuestionAnswerCount",
      "QuestionAnswerCountT-",
      "QuestionAnswerCountT+",
      "AnswerDayOfWeek",
      "AnswerTimeOfDay",
      "AnswerEpoch",
      "AnswerTimeliness",
      "AnswerOrder",
      "AnswerScore",
      "AnswerScoreT-",
      "AnswerScoreT+",
      "AnswerPosition",
      "AnswerPositionT-",
      "AnswerPositionT+",
      "AnswerCommentCount",
      "AnswerCommentCountT-",
      "AnswerCommentCountT+",
      "AnswererPostCount",
      "AnswererAnswerCount",
      "AnswererActiveAge",
      "AnswererReputation",
      "AnswererReputationViaAnswer",
      "AnswererGoldCount",
      "AnswererSilverCount",
      "AnswererBronzeCount",
      "AnswererBadgeDistribution",
      "AnsweredQuestionViewTotal",
      "AnsweredQuestionFavoriteTotal",
      "AnsweredQuestionScoreTotal",
      "AnsweredQuestionCommentTotal",
      "AnsweredQuestionAnswerTotal",
  };
  if (variable < 1 || variable > 41) return {};
  return kLabels[static_cast<std::size_t>(variable)];
}

std::string AnswerRecord::badge_distribution() const {
  const auto g = get(var::AnswererGoldCount);
  const auto s = get(var::AnswererSilverCount);
  const auto b = get(var::AnswererBronzeCount);
  if (!g || !s || !b) return {};
  return std::to_string(*g) + ";" + std::to_string(*s) + ";" + std::to_string(*b);
}

namespace {

using PostIndex = EventStore::PostIndex;

PostIndex require_post(const EventStore& store, PostId id) {
  const auto idx = store.find_post(id);
  if (!idx) throw UnknownIdError("unknown post id " + std::to_string(id));
  return *idx;
}

PostIndex require_question(const EventStore& store, PostId id) {
  const auto idx = require_post(store, id);
  if (store.post(idx).kind != PostKind::Question) {
    throw UnknownIdError("post " + std::to_string(id) + " is not a question");
  }
  return idx;
}

std::optional<WindowLimit> window_limit(const EventStore& store, PostIndex question,
                                        const WindowSpec& window) {
  if (window.mode() == WindowSpec::Mode::QuestionDay) {
    const auto day = day_start(store.post(question).created_at);
    return WindowLimit{{day, std::numeric_limits<std::int64_t>::max()}, day + kSecondsPerDay};
  }
  std::vector<EventKey> keys;
  for (const auto a : store.answers_of(question)) {
    for (const auto& v : store.votes_of(a)) {
      if (v.score_delta() != 0) keys.push_back(key_of(v));
    }
  }
  if (keys.empty()) return std::nullopt;
  const std::size_t n = keys.size();
  // ceil(P/100 * N) in exact integer arithmetic.
  const std::size_t k = (static_cast<std::size_t>(window.percent()) * n + 99) / 100;
  auto nth = keys.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(keys.begin(), nth, keys.end());
  return WindowLimit{*nth, nth->time};
}

std::int64_t score_until(std::span<const VoteEvent> votes, const std::optional<EventKey>& from,
                         const std::optional<EventKey>& to) {
  std::int64_t s = 0;
  for (const auto& v : votes) {
    const auto k = key_of(v);
    if (from && !(*from < k)) continue;
    if (to && *to < k) continue;
    s += v.score_delta();
  }
  return s;
}

/// Assigns ranks 1..k over `items` (already in (created_at, id) order) by
/// descending score; stable sort keeps the earlier answer first on ties.
std::vector<int> rank_by_score(const std::vector<std::int64_t>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<int> rank(scores.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r) + 1;
  return rank;
}

}  // namespace

std::optional<WindowLimit> bias_formation_time(PostId question_id, const EventStore& store,
                                               const WindowSpec& window) {
  return window_limit(store, require_question(store, question_id), window);
}

std::int64_t score_in_interval(PostId post_id, const EventStore& store,
                               std::optional<EventKey> from_exclusive,
                               std::optional<EventKey> to_inclusive) {
  return score_until(store.votes_of(require_post(store, post_id)), from_exclusive, to_inclusive);
}

std::map<PostId, int> position_at_window(PostId question_id, const EventStore& store,
                                         EventKey limit) {
  const auto q = require_question(store, question_id);
  std::vector<PostIndex> present;
  std::vector<std::int64_t> scores;
  for (const auto a : store.answers_of(q)) {
    if (limit < window_key(store.post(a).created_at)) continue;
    present.push_back(a);
    scores.push_back(score_until(store.votes_of(a), std::nullopt, limit));
  }
  const auto rank = rank_by_score(scores);
  std::map<PostId, int> out;
  for (std::size_t i = 0; i < present.size(); ++i) out.emplace(store.post(present[i]).post_id, rank[i]);
  return out;
}

Reputation reputation_at(UserId user, const EventStore& store, UnixSeconds t) {
  Reputation r;
  const auto u = store.find_user(user);
  if (!u) return r;
  for (const auto p : store.posts_by(*u)) {
    const auto& post = store.post(p);
    if (post.created_at >= t) continue;
    std::int64_t s = 0;
    for (const auto& v : store.votes_of(p)) {
      if (v.created_at < t) s += v.score_delta();
    }
    r.total += s;
    if (post.kind == PostKind::Answer) r.via_answers += s;
  }
  return r;
}

BadgeCounts badges_at(UserId user, const EventStore& store, UnixSeconds t) {
  BadgeCounts c;
  const auto u = store.find_user(user);
  if (!u) return c;
  for (const auto& b : store.badges_of(*u)) {
    if (b.awarded_at >= t) continue;
    switch (b.badge_class) {
      case BadgeClass::Gold: ++c.gold; break;
      case BadgeClass::Silver: ++c.silver; break;
      case BadgeClass::Bronze: ++c.bronze; break;
    }
  }
  return c;
}

AnsweredQuestionTotals answered_question_totals(UserId user, const EventStore& store,
                                                UnixSeconds t) {
  AnsweredQuestionTotals totals;
  const auto u = store.find_user(user);
  if (!u) return totals;
  std::vector<PostIndex> questions;
  for (const auto p : store.posts_by(*u)) {
    const auto& post = store.post(p);
    if (post.kind == PostKind::Answer && post.created_at < t) {
      questions.push_back(*store.find_post(*post.parent_question_id));
    }
  }
  std::sort(questions.begin(), questions.end());
  questions.erase(std::unique(questions.begin(), questions.end()), questions.end());
  for (const auto q : questions) {
    const auto& qp = store.post(q);
    totals.views += qp.snapshot_view_count.value_or(0);
    totals.favorites += qp.snapshot_favorite_count.value_or(0);
    for (const auto& v : store.votes_of(q)) {
      if (v.created_at < t) totals.score += v.score_delta();
    }
    for (const auto& c : store.comments_of(q)) {
      if (c.created_at < t) ++totals.comments;
    }
    for (const auto a : store.answers_of(q)) {
      if (store.post(a).created_at < t) ++totals.answers;
    }
  }
  return totals;
}

namespace {

/// Time-sorted event keys with prefix sums, answering "total of events with
/// key < t" by binary search.
template <std::size_t Width>
class PrefixTimeline {
 public:
  using Values = std::array<std::int64_t, Width>;

  void add(UnixSeconds key, const Values& values) { events_.emplace_back(key, values); }

  void seal() {
    std::sort(events_.begin(), events_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    keys_.resize(events_.size());
    prefix_.assign(events_.size() + 1, Values{});
    for (std::size_t i = 0; i < events_.size(); ++i) {
      keys_[i] = events_[i].first;
      for (std::size_t w = 0; w < Width; ++w) prefix_[i + 1][w] = prefix_[i][w] + events_[i].second[w];
    }
    events_.clear();
    events_.shrink_to_fit();
  }

  const Values& before(UnixSeconds t) const {
    const auto c = std::lower_bound(keys_.begin(), keys_.end(), t) - keys_.begin();
    return prefix_[static_cast<std::size_t>(c)];
  }

 private:
  std::vector<std::pair<UnixSeconds, Values>> events_;
  std::vector<UnixSeconds> keys_;
  std::vector<Values> prefix_;
};

struct UserHistory {
  std::vector<UnixSeconds> post_times;
  PrefixTimeline<1> answers;
  // A vote counts toward reputation at t iff both the post and the vote
  // precede t, i.e. iff max(post time, vote time) < t.
  PrefixTimeline<2> reputation;
  PrefixTimeline<3> badges;
  // Same trick keyed on the user's first answer to each question.
  PrefixTimeline<5> answered;
};

UserHistory build_history(const EventStore& store, EventStore::UserIndex u) {
  UserHistory h;
  std::unordered_map<PostIndex, UnixSeconds> first_answer;
  for (const auto p : store.posts_by(u)) {
    const auto& post = store.post(p);
    const bool is_answer = post.kind == PostKind::Answer;
    h.post_times.push_back(post.created_at);
    h.answers.add(post.created_at, {is_answer ? 1 : 0});
    for (const auto& v : store.votes_of(p)) {
      const int d = v.score_delta();
      if (d == 0) continue;
      h.reputation.add(std::max(post.created_at, v.created_at), {d, is_answer ? d : 0});
    }
    if (is_answer) {
      // posts_by is creation-sorted, so the first insert is the earliest answer.
      first_answer.emplace(*store.find_post(*post.parent_question_id), post.created_at);
    }
  }
  for (const auto& b : store.badges_of(u)) {
    h.badges.add(b.awarded_at, {b.badge_class == BadgeClass::Gold ? 1 : 0,
                                b.badge_class == BadgeClass::Silver ? 1 : 0,
                                b.badge_class == BadgeClass::Bronze ? 1 : 0});
  }
  for (const auto& [q, first] : first_answer) {
    const auto& qp = store.post(q);
    h.answered.add(first, {qp.snapshot_view_count.value_or(0),
                           qp.snapshot_favorite_count.value_or(0), 0, 0, 0});
    for (const auto& v : store.votes_of(q)) {
      if (v.score_delta() != 0) h.answered.add(std::max(first, v.created_at), {0, 0, v.score_delta(), 0, 0});
    }
    for (const auto& c : store.comments_of(q)) {
      h.answered.add(std::max(first, c.created_at), {0, 0, 0, 1, 0});
    }
    for (const auto a : store.answers_of(q)) {
      h.answered.add(std::max(first, store.post(a).created_at), {0, 0, 0, 0, 1});
    }
  }
  h.answers.seal();
  h.reputation.seal();
  h.badges.seal();
  h.answered.seal();
  return h;
}

void fill_answerer(AnswerRecord& r, const UserHistory& h, UnixSeconds t) {
  const auto n_posts = std::lower_bound(h.post_times.begin(), h.post_times.end(), t) -
                       h.post_times.begin();
  r.set(var::AnswererPostCount, n_posts);
  r.set(var::AnswererAnswerCount, h.answers.before(t)[0]);
  r.set(var::AnswererActiveAge, t - h.post_times.front());
  const auto& rep = h.reputation.before(t);
  r.set(var::AnswererReputation, rep[0]);
  r.set(var::AnswererReputationViaAnswer, rep[1]);
  const auto& badges = h.badges.before(t);
  r.set(var::AnswererGoldCount, badges[0]);
  r.set(var::AnswererSilverCount, badges[1]);
  r.set(var::AnswererBronzeCount, badges[2]);
  const auto& aq = h.answered.before(t);
  r.set(var::AnsweredQuestionViewTotal, aq[0]);
  r.set(var::AnsweredQuestionFavoriteTotal, aq[1]);
  r.set(var::AnsweredQuestionScoreTotal, aq[2]);
  r.set(var::AnsweredQuestionCommentTotal, aq[3]);
  r.set(var::AnsweredQuestionAnswerTotal, aq[4]);
}

struct Split {
  std::int64_t whole = 0;
  std::int64_t before = 0;
};

Split split_votes(std::span<const VoteEvent> votes, const std::optional<WindowLimit>& limit) {
  Split s;
  for (const auto& v : votes) {
    s.whole += v.score_delta();
    if (limit && !(limit->key < key_of(v))) s.before += v.score_delta();
  }
  return s;
}

Split split_comments(std::span<const CommentEvent> comments,
                     const std::optional<WindowLimit>& limit) {
  Split s;
  s.whole = static_cast<std::int64_t>(comments.size());
  if (limit) {
    for (const auto& c : comments) {
      if (!(limit->key < window_key(c.created_at))) ++s.before;
    }
  }
  return s;
}

void compile_question(const EventStore& store, PostIndex qi, const WindowSpec& window,
                      const std::vector<UserHistory>& histories,
                      std::vector<AnswerRecord>& out) {
  const auto& q = store.post(qi);
  const auto answers = store.answers_of(qi);
  if (answers.empty()) return;
  const auto limit = window_limit(store, qi, window);

  AnswerRecord base;
  base.question_id = q.post_id;
  base.site = store.site_name();
  if (q.snapshot_view_count) base.set(var::QuestionViewCount, *q.snapshot_view_count);
  base.set(var::QuestionFavoriteCount, q.snapshot_favorite_count.value_or(0));
  const auto q_votes = split_votes(store.votes_of(qi), limit);
  const auto q_comments = split_comments(store.comments_of(qi), limit);
  base.set(var::QuestionScore, q_votes.whole);
  base.set(var::QuestionCommentCount, q_comments.whole);
  base.set(var::QuestionAnswerCount, static_cast<std::int64_t>(answers.size()));

  const std::size_t k = answers.size();
  std::vector<bool> present(k, false);
  std::vector<Split> a_votes(k), a_comments(k);
  std::int64_t answers_before = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& a = store.post(answers[i]);
    a_votes[i] = split_votes(store.votes_of(answers[i]), limit);
    a_comments[i] = split_comments(store.comments_of(answers[i]), limit);
    present[i] = limit && !(limit->key < window_key(a.created_at));
    if (present[i]) ++answers_before;
  }

  if (limit) {
    base.set(var::T, limit->reported_time);
    base.set(var::QuestionScoreBefore, q_votes.before);
    base.set(var::QuestionScoreAfter, q_votes.whole - q_votes.before);
    base.set(var::QuestionCommentCountBefore, q_comments.before);
    base.set(var::QuestionCommentCountAfter, q_comments.whole - q_comments.before);
    base.set(var::QuestionAnswerCountBefore, answers_before);
    base.set(var::QuestionAnswerCountAfter, static_cast<std::int64_t>(k) - answers_before);
  }

  std::vector<std::int64_t> whole(k);
  for (std::size_t i = 0; i < k; ++i) whole[i] = a_votes[i].whole;
  const auto rank_whole = rank_by_score(whole);

  std::vector<std::size_t> present_idx;
  std::vector<std::int64_t> before_scores, after_scores;
  for (std::size_t i = 0; i < k; ++i) {
    if (!present[i]) continue;
    present_idx.push_back(i);
    before_scores.push_back(a_votes[i].before);
    after_scores.push_back(a_votes[i].whole - a_votes[i].before);
  }
  const auto rank_before = rank_by_score(before_scores);
  const auto rank_after = rank_by_score(after_scores);
  std::vector<int> pos_before(k, 0), pos_after(k, 0);
  for (std::size_t j = 0; j < present_idx.size(); ++j) {
    pos_before[present_idx[j]] = rank_before[j];
    pos_after[present_idx[j]] = rank_after[j];
  }

  for (std::size_t i = 0; i < k; ++i) {
    const auto& a = store.post(answers[i]);
    AnswerRecord r = base;
    r.answer_id = a.post_id;
    r.answerer_id = a.owner_user_id;
    const UnixSeconds t = a.created_at;
    r.set(var::AnswerDayOfWeek, day_of_week(t));
    r.set(var::AnswerTimeOfDay, hour_of_day(t));
    r.set(var::AnswerEpoch, t - store.first_post_time());
    r.set(var::AnswerTimeliness, t - q.created_at);
    r.set(var::AnswerOrder, static_cast<std::int64_t>(i) + 1);
    r.set(var::AnswerScore, a_votes[i].whole);
    r.set(var::AnswerPosition, rank_whole[i]);
    r.set(var::AnswerCommentCount, a_comments[i].whole);
    if (present[i]) {
      r.set(var::AnswerScoreBefore, a_votes[i].before);
      r.set(var::AnswerScoreAfter, a_votes[i].whole - a_votes[i].before);
      r.set(var::AnswerPositionBefore, pos_before[i]);
      r.set(var::AnswerPositionAfter, pos_after[i]);
      r.set(var::AnswerCommentCountBefore, a_comments[i].before);
      r.set(var::AnswerCommentCountAfter, a_comments[i].whole - a_comments[i].before);
    }
    if (a.owner_user_id) {
      const auto u = store.find_user(*a.owner_user_id);
      fill_answerer(r, histories[*u], t);
    }
    out.push_back(std::move(r));
  }
}

std::vector<AnswerRecord> compile_impl(const EventStore& store, const WindowSpec& window,
                                       bool parallel) {
  const auto n_users = static_cast<std::int64_t>(store.users().size());
  std::vector<UserHistory> histories(static_cast<std::size_t>(n_users));
#pragma omp parallel for schedule(dynamic, 64) if (parallel)
  for (std::int64_t u = 0; u < n_users; ++u) {
    const auto ui = static_cast<EventStore::UserIndex>(u);
    if (!store.posts_by(ui).empty()) histories[static_cast<std::size_t>(u)] = build_history(store, ui);
  }

  const auto questions = store.questions();
  const auto n_q = static_cast<std::int64_t>(questions.size());
  std::vector<std::vector<AnswerRecord>> per_question(questions.size());
#pragma omp parallel for schedule(dynamic, 64) if (parallel)
  for (std::int64_t i = 0; i < n_q; ++i) {
    const auto qi = static_cast<std::size_t>(i);
    compile_question(store, questions[qi], window, histories, per_question[qi]);
  }

  std::vector<AnswerRecord> out;
  out.reserve(store.answers().size());
  for (auto& chunk : per_question) {
    std::move(chunk.begin(), chunk.end(), std::back_inserter(out));
  }
  std::sort(out.begin(), out.end(),
            [](const AnswerRecord& a, const AnswerRecord& b) { return a.answer_id < b.answer_id; });
  return out;
}

}  // namespace

std::vector<AnswerRecord> compile_records(const EventStore& store, const WindowSpec& window) {
  return compile_impl(store, window, true);
}

std::vector<AnswerRecord> compile_records_serial(const EventStore& store,
                                                 const WindowSpec& window) {
  return compile_impl(store, window, false);
}

}  // namespace voterbias::vars
