#include "voterbias/records.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "binary_io.hpp"
#include "voterbias/cache.hpp"
#include "voterbias/error.hpp"

namespace voterbias::records {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::string_view kMagic{"VBRECS\0\0", 8};
constexpr std::uint32_t kTableFormatVersion = 1;

std::string format_number(double x) {
  if (std::isnan(x)) return {};
  if (x == std::trunc(x) && std::abs(x) < 9007199254740992.0) {
    return std::to_string(static_cast<std::int64_t>(x));
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_field(std::ostream& out, std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    out << field;
    return;
  }
  out << '"';
  for (const char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

/// RFC-4180 record reader. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (;;) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) {
      if (quoted) throw DataError("records CSV: unterminated quote near line " + std::to_string(line));
      fields.push_back(std::move(field));
      return true;
    }
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(static_cast<char>(c));
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\r' && in.peek() == '\n') {
      continue;
    } else if (c == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(static_cast<char>(c));
      field_started = true;
    }
  }
}

double parse_number(const std::string& text, const std::string& column, std::size_t line) {
  if (text.empty()) return kNaN;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError("records CSV line " + std::to_string(line) + ": column '" + column +
                    "' has non-numeric value '" + text + "'");
  }
  return v;
}

std::int64_t parse_id(const std::string& text, const char* column, std::size_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError("records CSV line " + std::to_string(line) + ": invalid " + column + " '" +
                    text + "'");
  }
  return v;
}

}  // namespace

const std::vector<double>* RecordTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return &columns_[i];
  }
  return nullptr;
}

std::optional<std::string> RecordTable::primary_window() const {
  if (window_.empty() || window_.front().empty()) return std::nullopt;
  for (const auto& w : window_) {
    if (w != window_.front()) return std::nullopt;
  }
  return window_.front();
}

void RecordTable::add_column(std::string name, std::vector<double> values) {
  if (values.size() != rows()) throw Error("column '" + name + "' has wrong row count");
  if (has(name)) throw Error("duplicate column '" + name + "'");
  names_.push_back(std::move(name));
  columns_.push_back(std::move(values));
}

void RecordTable::add_row_keys(std::int64_t answer_id, std::int64_t question_id,
                               double answerer_id, std::string site, std::string window) {
  if (!names_.empty()) throw Error("row keys must be added before columns");
  answer_id_.push_back(answer_id);
  question_id_.push_back(question_id);
  answerer_id_.push_back(answerer_id);
  site_.push_back(std::move(site));
  window_.push_back(std::move(window));
}

bool RecordTable::operator==(const RecordTable& o) const {
  const auto same_doubles = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::isnan(a[i]) != std::isnan(b[i])) return false;
      if (!std::isnan(a[i]) && a[i] != b[i]) return false;
    }
    return true;
  };
  if (answer_id_ != o.answer_id_ || question_id_ != o.question_id_ || site_ != o.site_ ||
      window_ != o.window_ || names_ != o.names_ || !same_doubles(answerer_id_, o.answerer_id_)) {
    return false;
  }
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (!same_doubles(columns_[i], o.columns_[i])) return false;
  }
  return true;
}

std::string windowed_column(int variable, const vars::WindowSpec& window) {
  return vars::variable_name(variable) + "@" + window.tag();
}

RecordTable make_table(std::span<const CompiledWindow> windows) {
  RecordTable t;
  if (windows.empty()) return t;
  const auto& primary = windows.front();
  const auto tag = primary.window.tag();
  for (const auto& r : primary.records) {
    t.add_row_keys(r.answer_id, r.question_id,
                   r.answerer_id ? static_cast<double>(*r.answerer_id) : kNaN, r.site, tag);
  }
  const auto column = [](const std::vector<vars::AnswerRecord>& recs, int v) {
    std::vector<double> col;
    col.reserve(recs.size());
    for (const auto& r : recs) {
      const auto x = r.get(v);
      col.push_back(x ? static_cast<double>(*x) : kNaN);
    }
    return col;
  };
  for (int v = vars::var::kFirst; v <= vars::var::kLast; ++v) {
    if (v == vars::var::AnswererBadgeDistribution) continue;
    t.add_column(vars::variable_name(v), column(primary.records, v));
  }
  for (std::size_t w = 1; w < windows.size(); ++w) {
    const auto& extra = windows[w];
    if (extra.records.size() != primary.records.size()) {
      throw Error("windows compiled over different answer sets");
    }
    for (std::size_t i = 0; i < extra.records.size(); ++i) {
      if (extra.records[i].answer_id != primary.records[i].answer_id) {
        throw Error("windows compiled over different answer orders");
      }
    }
    for (const int v : vars::kWindowedVariables) {
      t.add_column(windowed_column(v, extra.window), column(extra.records, v));
    }
  }
  return t;
}

void write_csv(std::ostream& out, const RecordTable& table) {
  const auto& names = table.numeric_names();
  const auto* gold = table.find("V33");
  const auto* silver = table.find("V34");
  const auto* bronze = table.find("V35");
  const bool badge_triple = gold && silver && bronze;

  out << "answer_id,question_id,answerer_id," << RecordTable::kSiteColumn << ','
      << RecordTable::kWindowColumn;
  for (const auto& n : names) {
    out << ',';
    write_field(out, n);
    if (badge_triple && n == "V35") out << ",V36";
  }
  out << "\r\n";

  std::vector<const std::vector<double>*> cols;
  for (const auto& n : names) cols.push_back(table.find(n));
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out << table.answer_ids()[i] << ',' << table.question_ids()[i] << ','
        << format_number(table.answerer_ids()[i]) << ',';
    write_field(out, table.sites()[i]);
    out << ',';
    write_field(out, table.windows()[i]);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out << ',' << format_number((*cols[c])[i]);
      if (badge_triple && names[c] == "V35" && !std::isnan((*gold)[i])) {
        out << ',' << format_number((*gold)[i]) << ';' << format_number((*silver)[i]) << ';'
            << format_number((*bronze)[i]);
      } else if (badge_triple && names[c] == "V35") {
        out << ',';
      }
    }
    out << "\r\n";
  }
}

std::string to_csv(const RecordTable& table) {
  std::ostringstream out;
  write_csv(out, table);
  return out.str();
}

RecordTable read_csv(std::istream& in) {
  std::vector<std::string> header;
  std::size_t line = 1;
  if (!read_record(in, header, line)) throw DataError("records CSV is empty");

  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!pos.emplace(header[i], i).second) {
      throw DataError("records CSV: duplicate column '" + header[i] + "'");
    }
  }
  for (const char* required : {"answer_id", "question_id", "answerer_id", "V1"}) {
    if (!pos.contains(required)) {
      throw DataError(std::string("records CSV: missing column '") + required + "'");
    }
  }
  const auto window_pos = pos.find(std::string(RecordTable::kWindowColumn));

  std::vector<std::size_t> numeric_pos;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& h = header[i];
    if (h == "answer_id" || h == "question_id" || h == "answerer_id" || h == "V1" ||
        h == RecordTable::kWindowColumn || h == "V36") {
      continue;
    }
    numeric_pos.push_back(i);
  }

  RecordTable t;
  std::vector<std::vector<double>> cols(numeric_pos.size());
  std::vector<std::string> row;
  while (true) {
    const auto row_line = line + 1;
    if (!read_record(in, row, line)) break;
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) {
      throw DataError("records CSV line " + std::to_string(row_line) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(row.size()));
    }
    const auto& answerer = row[pos["answerer_id"]];
    t.add_row_keys(parse_id(row[pos["answer_id"]], "answer_id", row_line),
                   parse_id(row[pos["question_id"]], "question_id", row_line),
                   parse_number(answerer, "answerer_id", row_line), row[pos["V1"]],
                   window_pos == pos.end() ? std::string{} : row[window_pos->second]);
    for (std::size_t c = 0; c < numeric_pos.size(); ++c) {
      cols[c].push_back(parse_number(row[numeric_pos[c]], header[numeric_pos[c]], row_line));
    }
  }
  for (std::size_t c = 0; c < numeric_pos.size(); ++c) {
    t.add_column(header[numeric_pos[c]], std::move(cols[c]));
  }
  return t;
}

std::string serialize_table(const RecordTable& table) {
  detail::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kTableFormatVersion);
  const auto n = table.rows();
  w.put<std::uint64_t>(n);
  for (const auto v : table.answer_ids()) w.put(v);
  for (const auto v : table.question_ids()) w.put(v);
  for (const auto v : table.answerer_ids()) w.put_f64(v);
  for (const auto& s : table.sites()) w.put_string(s);
  for (const auto& s : table.windows()) w.put_string(s);
  w.put<std::uint64_t>(table.numeric_names().size());
  for (const auto& name : table.numeric_names()) {
    w.put_string(name);
    for (const auto v : *table.find(name)) w.put_f64(v);
  }
  const auto checksum = detail::fnv1a64(w.bytes());
  w.put<std::uint64_t>(checksum);
  return w.take();
}

RecordTable deserialize_table(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 12 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError("not a records cache file");
  }
  const auto body = bytes.substr(0, bytes.size() - 8);
  detail::ByteReader trailer(bytes.substr(bytes.size() - 8));
  if (trailer.get<std::uint64_t>() != detail::fnv1a64(body)) {
    throw DataError("records cache checksum mismatch");
  }
  detail::ByteReader r(body);
  r.get_bytes(kMagic.size());
  if (const auto v = r.get<std::uint32_t>(); v != kTableFormatVersion) {
    throw DataError("unsupported records cache version " + std::to_string(v));
  }
  const auto n = r.get<std::uint64_t>();
  std::vector<std::int64_t> answers(n), questions(n);
  std::vector<double> answerers(n);
  std::vector<std::string> sites(n), windows(n);
  for (auto& v : answers) v = r.get<std::int64_t>();
  for (auto& v : questions) v = r.get<std::int64_t>();
  for (auto& v : answerers) v = r.get_f64();
  for (auto& s : sites) s = r.get_string();
  for (auto& s : windows) s = r.get_string();
  RecordTable t;
  for (std::size_t i = 0; i < n; ++i) {
    t.add_row_keys(answers[i], questions[i], answerers[i], std::move(sites[i]),
                   std::move(windows[i]));
  }
  const auto n_cols = r.get<std::uint64_t>();
  for (std::uint64_t c = 0; c < n_cols; ++c) {
    auto name = r.get_string();
    std::vector<double> col(n);
    for (auto& v : col) v = r.get_f64();
    t.add_column(std::move(name), std::move(col));
  }
  if (!r.at_end()) throw DataError("records cache: trailing bytes");
  return t;
}

RecordTable read_table_file(const std::string& path) {
  const auto bytes = cache::read_file(path);
  if (std::string_view(bytes).starts_with(kMagic)) return deserialize_table(bytes);
  std::istringstream in(bytes);
  return read_csv(in);
}

}  // namespace voterbias::records
