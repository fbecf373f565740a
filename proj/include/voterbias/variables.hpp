#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voterbias/events.hpp"

namespace voterbias::vars {

/// How the per-question bias formation time T is chosen.
class WindowSpec {
 public:
  enum class Mode { Percentile, QuestionDay };

  /// T is the key of vote number ceil(P/100 * N) among the question's
  /// answer votes. P must be in 1..99.
  static WindowSpec percentile(int percent);
  /// T is the end of the question's creation day (UTC).
  static WindowSpec question_day();
  /// Accepts "pct:P" or "day". Throws UsageError otherwise.
  static WindowSpec parse(std::string_view tag);

  Mode mode() const noexcept { return mode_; }
  int percent() const noexcept { return percent_; }
  std::string tag() const;

  bool operator==(const WindowSpec&) const = default;

 private:
  WindowSpec(Mode mode, int percent) : mode_(mode), percent_(percent) {}
  Mode mode_;
  int percent_;
};

/// Resolved bias formation time.
struct WindowLimit {
  /// Votes with key <= `key`, and posts/comments with window_key <= `key`,
  /// fall inside the window.
  EventKey key;
  /// The V2 value: vote day for percentile mode, end of day for day mode.
  UnixSeconds reported_time = 0;

  bool operator==(const WindowLimit&) const = default;
};

/// Posts and comments carry exact times while votes are day-granular, so
/// they compare against T at day resolution: an event on T's day counts as
/// inside the window.
inline EventKey window_key(UnixSeconds exact_time) noexcept {
  return {day_start(exact_time), -1};
}

// Table 2 variable numbers. V1 (site) is a string and V36 (badge triple) is
// derived from V33..V35.
namespace var {
inline constexpr int T = 2;
inline constexpr int QuestionViewCount = 3;
inline constexpr int QuestionFavoriteCount = 4;
inline constexpr int QuestionScore = 5;
inline constexpr int QuestionScoreBefore = 6;
inline constexpr int QuestionScoreAfter = 7;
inline constexpr int QuestionCommentCount = 8;
inline constexpr int QuestionCommentCountBefore = 9;
inline constexpr int QuestionCommentCountAfter = 10;
inline constexpr int QuestionAnswerCount = 11;
inline constexpr int QuestionAnswerCountBefore = 12;
inline constexpr int QuestionAnswerCountAfter = 13;
inline constexpr int AnswerDayOfWeek = 14;
inline constexpr int AnswerTimeOfDay = 15;
inline constexpr int AnswerEpoch = 16;
inline constexpr int AnswerTimeliness = 17;
inline constexpr int AnswerOrder = 18;
inline constexpr int AnswerScore = 19;
inline constexpr int AnswerScoreBefore = 20;
inline constexpr int AnswerScoreAfter = 21;
inline constexpr int AnswerPosition = 22;
inline constexpr int AnswerPositionBefore = 23;
inline constexpr int AnswerPositionAfter = 24;
inline constexpr int AnswerCommentCount = 25;
inline constexpr int AnswerCommentCountBefore = 26;
inline constexpr int AnswerCommentCountAfter = 27;
inline constexpr int AnswererPostCount = 28;
inline constexpr int AnswererAnswerCount = 29;
inline constexpr int AnswererActiveAge = 30;
inline constexpr int AnswererReputation = 31;
inline constexpr int AnswererReputationViaAnswer = 32;
inline constexpr int AnswererGoldCount = 33;
inline constexpr int AnswererSilverCount = 34;
inline constexpr int AnswererBronzeCount = 35;
inline constexpr int AnswererBadgeDistribution = 36;
inline constexpr int AnsweredQuestionViewTotal = 37;
inline constexpr int AnsweredQuestionFavoriteTotal = 38;
inline constexpr int AnsweredQuestionScoreTotal = 39;
inline constexpr int AnsweredQuestionCommentTotal = 40;
inline constexpr int AnsweredQuestionAnswerTotal = 41;

inline constexpr int kFirst = 2;
inline constexpr int kLast = 41;
}  // namespace var

/// Variables whose value depends on the window.
inline constexpr std::array<int, 13> kWindowedVariables{2, 6, 7, 9, 10, 12, 13, 20, 21, 23, 24, 26, 27};

bool is_windowed(int variable) noexcept;
/// "V19" etc.
std::string variable_name(int variable);
/// Table 2 mnemonic, e.g. "AnswerScore".
std::string_view variable_label(int variable);

struct AnswerRecord {
  PostId answer_id = 0;
  PostId question_id = 0;
  std::optional<UserId> answerer_id;
  std::string site;
  /// Indexed by variable number; slots 0, 1 and 36 stay empty.
  std::array<std::optional<std::int64_t>, 42> values{};

  std::optional<std::int64_t> get(int variable) const { return values.at(variable); }
  void set(int variable, std::int64_t value) { values.at(variable) = value; }
  /// V33..V35 as "gold;silver;bronze", empty when unknown.
  std::string badge_distribution() const;

  bool operator==(const AnswerRecord&) const = default;
};

std::optional<WindowLimit> bias_formation_time(PostId question_id, const EventStore& store,
                                               const WindowSpec& window);

/// Up minus Down votes on the post with key in (from_exclusive, to_inclusive].
/// nullopt bounds are unbounded.
std::int64_t score_in_interval(PostId post_id, const EventStore& store,
                               std::optional<EventKey> from_exclusive,
                               std::optional<EventKey> to_inclusive);

/// Ranks the answers that exist at `limit` by their score up to `limit`,
/// descending; ties go to the earlier answer, then the smaller id. Ranks
/// are 1..k.
std::map<PostId, int> position_at_window(PostId question_id, const EventStore& store,
                                         EventKey limit);

struct Reputation {
  std::int64_t total = 0;       // V31
  std::int64_t via_answers = 0;  // V32
  bool operator==(const Reputation&) const = default;
};

/// Up minus Down votes cast before `t` on the user's posts created before `t`.
Reputation reputation_at(UserId user, const EventStore& store, UnixSeconds t);

struct BadgeCounts {
  std::int64_t gold = 0;
  std::int64_t silver = 0;
  std::int64_t bronze = 0;
  bool operator==(const BadgeCounts&) const = default;
};

BadgeCounts badges_at(UserId user, const EventStore& store, UnixSeconds t);

/// Totals over the distinct questions the user answered before `t`.
struct AnsweredQuestionTotals {
  std::int64_t views = 0;      // V37, dump-end snapshot
  std::int64_t favorites = 0;  // V38, dump-end snapshot
  std::int64_t score = 0;      // V39, votes before t
  std::int64_t comments = 0;   // V40, comments before t
  std::int64_t answers = 0;    // V41, answers created before t
  bool operator==(const AnsweredQuestionTotals&) const = default;
};

AnsweredQuestionTotals answered_question_totals(UserId user, const EventStore& store,
                                                UnixSeconds t);

/// One record per answer, ordered by answer id. Questions are processed in
/// parallel with OpenMP.
std::vector<AnswerRecord> compile_records(const EventStore& store, const WindowSpec& window);

/// Single-threaded reference for compile_records; produces identical output.
std::vector<AnswerRecord> compile_records_serial(const EventStore& store,
                                                 const WindowSpec& window);

}  // namespace voterbias::vars
