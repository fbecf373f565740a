#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

namespace vbtest {

namespace {

constexpr UnixSeconds kDay = 86400;
// 2017-01-01T00:00:00Z
constexpr UnixSeconds kBase = 1483228800;

UnixSeconds floor_day(UnixSeconds t) { return t - ((t % kDay) + kDay) % kDay; }

}  // namespace

EventStore build(const RawDump& dump) {
  return ingest::build_store(dump.site, dump.posts, dump.votes, dump.badges, dump.comments).store;
}

RawDump fig4_dump() {
  RawDump d;
  d.site = "fig4";
  PostEvent q;
  q.post_id = 1;
  q.kind = PostKind::Question;
  q.owner_user_id = 100;
  q.created_at = kBase + 10 * 3600;
  q.snapshot_view_count = 250;
  q.snapshot_favorite_count = 3;
  d.posts.push_back(q);
  for (int i = 0; i < 3; ++i) {
    PostEvent a;
    a.post_id = 11 + i;
    a.kind = PostKind::Answer;
    a.parent_question_id = 1;
    a.owner_user_id = 101 + i;
    a.created_at = kBase + (11 + i) * 3600;
    d.posts.push_back(a);
  }
  // (answer, up, down) blocks, in time order. The first three blocks hold
  // the nine votes cast by T.
  const std::vector<std::array<int, 3>> blocks{
      {11, 4, 0}, {12, 1, 2}, {13, 1, 1}, {11, 7, 1}, {12, 3, 4}, {13, 4, 2},
  };
  std::int64_t id = 1;
  for (const auto& [post, up, down] : blocks) {
    for (int k = 0; k < up + down; ++k) {
      VoteEvent v;
      v.post_id = post;
      v.type_code = k < up ? 2 : 3;
      v.kind = vote_kind_from_code(v.type_code);
      v.created_at = kBase + id * kDay;
      v.source_ordinal = id;
      d.votes.push_back(v);
      ++id;
    }
  }
  d.comments.push_back({1, kBase + 12 * 3600});
  d.comments.push_back({11, kBase + 3 * kDay + 600});
  d.comments.push_back({13, kBase + 20 * kDay});
  d.badges.push_back({101, BadgeClass::Bronze, kBase - 30 * kDay});
  d.badges.push_back({102, BadgeClass::Silver, kBase - 10 * kDay});
  d.badges.push_back({101, BadgeClass::Gold, kBase + 5 * kDay});
  return d;
}

RawDump random_dump(std::uint64_t seed, int max_questions, int max_votes) {
  std::mt19937_64 rng(seed);
  const auto uniform = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  const auto chance = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };

  RawDump d;
  d.site = "random" + std::to_string(seed % 3);
  const auto owner = [&]() -> std::optional<UserId> {
    if (chance(0.1)) return std::nullopt;
    return uniform(1, 6);
  };

  PostId next_id = 1;
  const auto nq = uniform(1, max_questions);
  std::vector<std::size_t> answer_idx, all_idx;
  for (std::int64_t qn = 0; qn < nq; ++qn) {
    PostEvent q;
    q.post_id = next_id++;
    q.kind = PostKind::Question;
    q.owner_user_id = owner();
    q.created_at = kBase + uniform(0, 10) * kDay + uniform(0, kDay - 1);
    if (chance(0.85)) q.snapshot_view_count = uniform(0, 1000);
    if (chance(0.7)) q.snapshot_favorite_count = uniform(0, 20);
    const auto q_created = q.created_at;
    const auto q_id = q.post_id;
    all_idx.push_back(d.posts.size());
    d.posts.push_back(q);
    const auto na = uniform(0, 4);
    for (std::int64_t an = 0; an < na; ++an) {
      PostEvent a;
      a.post_id = next_id++;
      a.kind = PostKind::Answer;
      a.parent_question_id = q_id;
      a.owner_user_id = owner();
      // Occasionally an exact creation-time tie with a sibling.
      a.created_at = chance(0.1) && an > 0 ? d.posts.back().created_at
                                           : q_created + uniform(0, 5 * kDay);
      if (chance(0.3)) a.snapshot_favorite_count = uniform(0, 5);
      answer_idx.push_back(d.posts.size());
      all_idx.push_back(d.posts.size());
      d.posts.push_back(a);
    }
  }

  const auto nv = uniform(0, max_votes);
  std::vector<std::int64_t> ids(static_cast<std::size_t>(nv));
  std::iota(ids.begin(), ids.end(), 1);
  std::shuffle(ids.begin(), ids.end(), rng);
  static constexpr std::array<int, 9> kCodes{2, 2, 2, 2, 3, 3, 5, 1, 10};
  for (std::int64_t i = 0; i < nv; ++i) {
    const bool on_answer = !answer_idx.empty() && chance(0.75);
    const auto& pool = on_answer ? answer_idx : all_idx;
    const auto& post = d.posts[pool[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(pool.size()) - 1))]];
    VoteEvent v;
    v.post_id = post.post_id;
    v.type_code = kCodes[static_cast<std::size_t>(uniform(0, kCodes.size() - 1))];
    v.kind = vote_kind_from_code(v.type_code);
    v.created_at = floor_day(post.created_at) + uniform(0, 8) * kDay;
    v.source_ordinal = ids[static_cast<std::size_t>(i)];
    d.votes.push_back(v);
  }

  const auto nc = uniform(0, 15);
  for (std::int64_t i = 0; i < nc; ++i) {
    const auto& post = d.posts[all_idx[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(all_idx.size()) - 1))]];
    d.comments.push_back({post.post_id, post.created_at + uniform(0, 6 * kDay)});
  }
  const auto nb = uniform(0, 12);
  for (std::int64_t i = 0; i < nb; ++i) {
    d.badges.push_back({uniform(1, 6), static_cast<BadgeClass>(uniform(1, 3)),
                        kBase + uniform(-5, 15) * kDay + uniform(0, kDay - 1)});
  }
  return d;
}

std::map<PostId, Values> brute_force(const RawDump& dump, const vars::WindowSpec& window) {
  using vars::var::T;
  namespace v = vars::var;
  std::map<PostId, Values> out;

  const auto post_by_id = [&](PostId id) -> const PostEvent& {
    return *std::find_if(dump.posts.begin(), dump.posts.end(), [&](const PostEvent& p) { return p.post_id == id; });
  };
  const auto delta = [](const VoteEvent& e) {
    return e.type_code == 2 ? 1 : e.type_code == 3 ? -1 : 0;
  };
  UnixSeconds first_post = dump.posts.front().created_at;
  for (const auto& p : dump.posts) first_post = std::min(first_post, p.created_at);

  for (const auto& q : dump.posts) {
    if (q.kind != PostKind::Question) continue;
    std::vector<const PostEvent*> answers;
    for (const auto& p : dump.posts) {
      if (p.kind == PostKind::Answer && p.parent_question_id == q.post_id) answers.push_back(&p);
    }
    if (answers.empty()) continue;
    const auto is_answer_of_q = [&](PostId id) {
      return std::any_of(answers.begin(), answers.end(), [&](const PostEvent* a) { return a->post_id == id; });
    };

    // Bias formation time as a predicate over votes and over exact times.
    bool has_t = false;
    UnixSeconds t_day = 0;
    std::int64_t t_ord = 0;
    UnixSeconds reported = 0;
    if (window.mode() == vars::WindowSpec::Mode::QuestionDay) {
      has_t = true;
      t_day = floor_day(q.created_at);
      reported = t_day + kDay;
    } else {
      std::vector<const VoteEvent*> av;
      for (const auto& e : dump.votes) {
        if (delta(e) != 0 && is_answer_of_q(e.post_id)) av.push_back(&e);
      }
      if (!av.empty()) {
        const auto n = static_cast<double>(av.size());
        const auto k = static_cast<std::size_t>(std::ceil(window.percent() * n / 100.0));
        // The k-th vote is the one with exactly k - 1 votes strictly earlier.
        for (const auto* cand : av) {
          std::size_t earlier = 0;
          for (const auto* o : av) {
            if (o->created_at < cand->created_at ||
                (o->created_at == cand->created_at && o->source_ordinal < cand->source_ordinal)) {
              ++earlier;
            }
          }
          if (earlier == k - 1) {
            has_t = true;
            t_day = cand->created_at;
            t_ord = cand->source_ordinal;
            reported = cand->created_at;
          }
        }
      }
    }
    const bool day_mode = window.mode() == vars::WindowSpec::Mode::QuestionDay;
    const auto vote_in = [&](const VoteEvent& e) {
      if (day_mode) return e.created_at <= t_day;
      return e.created_at < t_day || (e.created_at == t_day && e.source_ordinal <= t_ord);
    };
    const auto time_in = [&](UnixSeconds t) { return floor_day(t) <= t_day; };

    const auto score = [&](PostId id, int part) {  // 0 whole, 1 before, 2 after
      std::int64_t s = 0;
      for (const auto& e : dump.votes) {
        if (e.post_id != id) continue;
        const bool in = has_t && vote_in(e);
        if (part == 0 || (part == 1 && in) || (part == 2 && !in)) s += delta(e);
      }
      return s;
    };
    const auto comments = [&](PostId id, int part) {
      std::int64_t c = 0;
      for (const auto& e : dump.comments) {
        if (e.post_id != id) continue;
        const bool in = has_t && time_in(e.created_at);
        if (part == 0 || (part == 1 && in) || (part == 2 && !in)) ++c;
      }
      return c;
    };
    const auto earlier_post = [](const PostEvent* a, const PostEvent* b) {
      return a->created_at < b->created_at || (a->created_at == b->created_at && a->post_id < b->post_id);
    };
    const auto present = [&](const PostEvent* a) { return has_t && time_in(a->created_at); };
    const auto rank = [&](const PostEvent* a, int part, bool only_present) {
      std::int64_t r = 1;
      const auto sa = score(a->post_id, part);
      for (const auto* b : answers) {
        if (b == a || (only_present && !present(b))) continue;
        const auto sb = score(b->post_id, part);
        if (sb > sa || (sb == sa && earlier_post(b, a))) ++r;
      }
      return r;
    };

    std::int64_t n_present = 0;
    for (const auto* a : answers) n_present += present(a) ? 1 : 0;

    for (const auto* a : answers) {
      Values r{};
      if (has_t) {
        r[T] = reported;
        r[v::QuestionScoreBefore] = score(q.post_id, 1);
        r[v::QuestionScoreAfter] = score(q.post_id, 2);
        r[v::QuestionCommentCountBefore] = comments(q.post_id, 1);
        r[v::QuestionCommentCountAfter] = comments(q.post_id, 2);
        r[v::QuestionAnswerCountBefore] = n_present;
        r[v::QuestionAnswerCountAfter] = static_cast<std::int64_t>(answers.size()) - n_present;
      }
      if (q.snapshot_view_count) r[v::QuestionViewCount] = *q.snapshot_view_count;
      r[v::QuestionFavoriteCount] = q.snapshot_favorite_count.value_or(0);
      r[v::QuestionScore] = score(q.post_id, 0);
      r[v::QuestionCommentCount] = comments(q.post_id, 0);
      r[v::QuestionAnswerCount] = static_cast<std::int64_t>(answers.size());

      const UnixSeconds t = a->created_at;
      const std::int64_t secs = ((t % kDay) + kDay) % kDay;
      // 1970-01-01 was a Thursday (Monday = 0 makes it 3).
      r[v::AnswerDayOfWeek] = ((floor_day(t) / kDay) % 7 + 7 + 3) % 7;
      r[v::AnswerTimeOfDay] = secs / 3600;
      r[v::AnswerEpoch] = t - first_post;
      r[v::AnswerTimeliness] = t - q.created_at;
      std::int64_t order = 1;
      for (const auto* b : answers) order += earlier_post(b, a) ? 1 : 0;
      r[v::AnswerOrder] = order;
      r[v::AnswerScore] = score(a->post_id, 0);
      r[v::AnswerPosition] = rank(a, 0, false);
      r[v::AnswerCommentCount] = comments(a->post_id, 0);
      if (present(a)) {
        r[v::AnswerScoreBefore] = score(a->post_id, 1);
        r[v::AnswerScoreAfter] = score(a->post_id, 2);
        r[v::AnswerPositionBefore] = rank(a, 1, true);
        r[v::AnswerPositionAfter] = rank(a, 2, true);
        r[v::AnswerCommentCountBefore] = comments(a->post_id, 1);
        r[v::AnswerCommentCountAfter] = comments(a->post_id, 2);
      }

      if (a->owner_user_id) {
        const UserId u = *a->owner_user_id;
        std::int64_t posts = 0, answered = 0, rep = 0, rep_a = 0;
        UnixSeconds first = t;
        std::set<PostId> questions;
        for (const auto& p : dump.posts) {
          if (p.owner_user_id != u) continue;
          first = std::min(first, p.created_at);
          if (p.created_at >= t) continue;
          ++posts;
          if (p.kind == PostKind::Answer) {
            ++answered;
            questions.insert(*p.parent_question_id);
          }
          for (const auto& e : dump.votes) {
            if (e.post_id == p.post_id && e.created_at < t) {
              rep += delta(e);
              if (p.kind == PostKind::Answer) rep_a += delta(e);
            }
          }
        }
        r[v::AnswererPostCount] = posts;
        r[v::AnswererAnswerCount] = answered;
        r[v::AnswererActiveAge] = t - first;
        r[v::AnswererReputation] = rep;
        r[v::AnswererReputationViaAnswer] = rep_a;
        std::array<std::int64_t, 4> badges{};
        for (const auto& b : dump.badges) {
          if (b.user_id == u && b.awarded_at < t) ++badges[static_cast<std::size_t>(b.badge_class)];
        }
        r[v::AnswererGoldCount] = badges[1];
        r[v::AnswererSilverCount] = badges[2];
        r[v::AnswererBronzeCount] = badges[3];
        std::int64_t views = 0, favs = 0, qscore = 0, qcomments = 0, qanswers = 0;
        for (const auto qid : questions) {
          const auto& qp = post_by_id(qid);
          views += qp.snapshot_view_count.value_or(0);
          favs += qp.snapshot_favorite_count.value_or(0);
          for (const auto& e : dump.votes) {
            if (e.post_id == qid && e.created_at < t) qscore += delta(e);
          }
          for (const auto& c : dump.comments) {
            if (c.post_id == qid && c.created_at < t) ++qcomments;
          }
          for (const auto& p : dump.posts) {
            if (p.kind == PostKind::Answer && p.parent_question_id == qid && p.created_at < t) ++qanswers;
          }
        }
        r[v::AnsweredQuestionViewTotal] = views;
        r[v::AnsweredQuestionFavoriteTotal] = favs;
        r[v::AnsweredQuestionScoreTotal] = qscore;
        r[v::AnsweredQuestionCommentTotal] = qcomments;
        r[v::AnsweredQuestionAnswerTotal] = qanswers;
      }
      out[a->post_id] = r;
    }
  }
  return out;
}

namespace {

std::string xml_time(UnixSeconds t) { return format_timestamp(t) + ".000"; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

}  // namespace

ingest::DumpPaths write_xml_dump(const RawDump& dump, const std::string& dir) {
  std::filesystem::create_directories(dir);
  ingest::DumpPaths paths{dir + "/Posts.xml", dir + "/Votes.xml", dir + "/Badges.xml", dir + "/Comments.xml"};
  const std::string head = "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n";

  std::string posts = head + "<posts>\n";
  for (const auto& p : dump.posts) {
    posts += "  <row Id=\"" + std::to_string(p.post_id) + "\" PostTypeId=\"" +
             std::to_string(static_cast<int>(p.kind)) + "\"";
    if (p.parent_question_id) posts += " ParentId=\"" + std::to_string(*p.parent_question_id) + "\"";
    posts += " CreationDate=\"" + xml_time(p.created_at) + "\" Score=\"" + std::to_string(p.snapshot_score) + "\"";
    if (p.snapshot_view_count) posts += " ViewCount=\"" + std::to_string(*p.snapshot_view_count) + "\"";
    posts += " Body=\"&lt;p&gt;text &amp; more&lt;/p&gt;\"";
    if (p.owner_user_id) posts += " OwnerUserId=\"" + std::to_string(*p.owner_user_id) + "\"";
    posts += " CommentCount=\"" + std::to_string(p.snapshot_comment_count) + "\"";
    if (p.snapshot_favorite_count) posts += " FavoriteCount=\"" + std::to_string(*p.snapshot_favorite_count) + "\"";
    posts += " />\n";
  }
  write_file(paths.posts, posts + "</posts>\n");

  std::string votes = head + "<votes>\n";
  for (const auto& v : dump.votes) {
    votes += "  <row Id=\"" + std::to_string(v.source_ordinal) + "\" PostId=\"" + std::to_string(v.post_id) +
             "\" VoteTypeId=\"" + std::to_string(v.type_code) + "\" CreationDate=\"" + xml_time(v.created_at) +
             "\" />\n";
  }
  write_file(paths.votes, votes + "</votes>\n");

  std::string badges = head + "<badges>\n";
  std::int64_t id = 1;
  for (const auto& b : dump.badges) {
    badges += "  <row Id=\"" + std::to_string(id++) + "\" UserId=\"" + std::to_string(b.user_id) +
              "\" Name=\"Badge\" Date=\"" + xml_time(b.awarded_at) + "\" Class=\"" +
              std::to_string(static_cast<int>(b.badge_class)) + "\" TagBased=\"False\" />\n";
  }
  write_file(paths.badges, badges + "</badges>\n");

  std::string comments = head + "<comments>\n";
  id = 1;
  for (const auto& c : dump.comments) {
    comments += "  <row Id=\"" + std::to_string(id++) + "\" PostId=\"" + std::to_string(c.post_id) +
                "\" Score=\"0\" Text=\"ok\" CreationDate=\"" + xml_time(c.created_at) + "\" />\n";
  }
  write_file(paths.comments, comments + "</comments>\n");
  return paths;
}

std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("voterbias_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace vbtest
