#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "voterbias/estimator.hpp"
#include "voterbias/presets.hpp"

namespace voterbias::report {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Three decimals, ties to even on the exact binary value. Negative zero
/// prints as "0.000"; non-finite values as "nan", "inf" or "-inf".
std::string format_fixed3(double value);
/// "0.712 (± 0.014)".
std::string format_cell(double estimate, double half_ci);
std::string format_cell(const est::Coefficient& c);

std::string sha256_hex(std::string_view bytes);
/// Throws DataError when the file cannot be read.
std::string sha256_file(const std::string& path);

/// ISO-8601 UTC time from SOURCE_DATE_EPOCH when set, else the clock.
std::string current_timestamp();

struct RunManifest {
  std::string tool_version{kToolVersion};
  std::string command;
  /// (role, sha256) per input file.
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<std::string> windows;
  std::vector<std::string> models;
  std::vector<std::uint64_t> seeds;
  /// Other settings that influence the outputs.
  std::vector<std::pair<std::string, std::string>> parameters;
  std::string timestamp;

  /// Every field except the timestamp, one `key = value` per line.
  std::string canonical_text() const;
  /// SHA-256 of canonical_text().
  std::string digest() const;
  /// canonical_text() plus timestamp and digest.
  std::string to_text() const;
};

/// One model fitted on one site with one method.
struct ModelFit {
  presets::ModelSpec spec;
  std::string site;
  est::Method method = est::Method::OLS;
  std::optional<est::EstimateResult> result;
  std::size_t rows_total = 0;
  std::size_t rows_dropped = 0;
  /// Skip or failure reason when `result` is empty.
  std::string note;
};

struct RunOptions {
  std::vector<est::Method> methods{est::Method::OLS, est::Method::TSLS};
  est::FitOptions fit;
};

/// Models whose window is missing from the table are reported, not fitted.
struct ModelRun {
  std::vector<ModelFit> fits;
  std::vector<std::string> unavailable;  // "name: reason"
};

/// Resolves every model against the table (throwing UnknownColumnError for
/// the first missing column), then fits all models in parallel. Results are
/// ordered by model, site, method regardless of scheduling.
ModelRun run_models(const records::RecordTable& table, const std::vector<presets::ModelSpec>& models,
                    const RunOptions& options = {});

/// Grid of formatted cells for one family and one site: rows are model row
/// labels, columns are (exposure, method) pairs.
struct ResultTable {
  std::string family;
  std::string site;
  std::string row_header;
  std::vector<std::string> columns;
  std::vector<std::string> row_labels;
  std::vector<std::vector<std::string>> cells;
  /// Fits behind the grid, for the CSV and diagnostics.
  std::vector<const ModelFit*> fits;
  std::vector<std::string> notes;
};

/// One table per (family, site), families in first-seen order, sites sorted.
std::vector<ResultTable> build_tables(const ModelRun& run, const std::vector<est::Method>& methods);

/// Column-aligned markdown with the manifest digest, first-stage section and
/// notes.
std::string to_markdown(const ResultTable& table, const std::string& manifest_digest);
/// Long format: one line per (model, exposure, method).
std::string to_csv(const ResultTable& table, const std::string& manifest_digest);

/// File-name-safe version of a site or family name.
std::string file_stem(std::string_view text);

/// Aligned markdown table; widths count UTF-8 code points.
std::string markdown_grid(const std::vector<std::string>& header,
                          const std::vector<std::vector<std::string>>& rows);

/// RFC-4180 field quoting.
std::string csv_field(std::string_view text);

}  // namespace voterbias::report
