#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voterbias/variables.hpp"

namespace voterbias::records {

/// Column-oriented table of compiled records, as read from or written to a
/// records file. Numeric cells use NaN for absent values.
///
/// CSV layout: answer_id, question_id, answerer_id, V1, window, V2..V41,
/// then one `Vnn@<window>` column per windowed variable for every extra
/// window. Plain windowed columns belong to the window named in `window`.
class RecordTable {
 public:
  static constexpr std::string_view kSiteColumn = "V1";
  static constexpr std::string_view kWindowColumn = "window";

  std::size_t rows() const noexcept { return site_.size(); }

  const std::vector<std::string>& numeric_names() const noexcept { return names_; }
  /// nullptr when the column does not exist.
  const std::vector<double>* find(std::string_view name) const;
  bool has(std::string_view name) const { return find(name) != nullptr; }

  const std::vector<std::string>& sites() const noexcept { return site_; }
  const std::vector<std::string>& windows() const noexcept { return window_; }
  const std::vector<std::int64_t>& answer_ids() const noexcept { return answer_id_; }
  const std::vector<std::int64_t>& question_ids() const noexcept { return question_id_; }
  /// NaN when the answerer is unknown.
  const std::vector<double>& answerer_ids() const noexcept { return answerer_id_; }

  /// The single window all rows were compiled with, if any.
  std::optional<std::string> primary_window() const;

  void add_column(std::string name, std::vector<double> values);
  void add_row_keys(std::int64_t answer_id, std::int64_t question_id, double answerer_id,
                    std::string site, std::string window);

  bool operator==(const RecordTable&) const;

 private:
  std::vector<std::int64_t> answer_id_;
  std::vector<std::int64_t> question_id_;
  std::vector<double> answerer_id_;
  std::vector<std::string> site_;
  std::vector<std::string> window_;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
};

/// Column name of a windowed variable compiled under an extra window.
std::string windowed_column(int variable, const vars::WindowSpec& window);

struct CompiledWindow {
  vars::WindowSpec window;
  std::vector<vars::AnswerRecord> records;
};

/// Builds a table from compile_records output. The first window provides the
/// plain V2..V41 columns; later windows add suffixed windowed columns. All
/// windows must hold the same answers in the same order.
RecordTable make_table(std::span<const CompiledWindow> windows);

void write_csv(std::ostream& out, const RecordTable& table);
std::string to_csv(const RecordTable& table);
/// Throws DataError on malformed CSV or non-numeric cells.
RecordTable read_csv(std::istream& in);

/// Columnar binary form ("VBRECS\0\0" magic, little-endian, versioned).
std::string serialize_table(const RecordTable& table);
RecordTable deserialize_table(std::string_view bytes);

/// Reads either format, detected by magic bytes.
RecordTable read_table_file(const std::string& path);

}  // namespace voterbias::records
