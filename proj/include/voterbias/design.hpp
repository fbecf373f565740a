#pragma once

#include <optional>
#include <string>
#include <vector>

#include "voterbias/estimator.hpp"
#include "voterbias/records.hpp"

namespace voterbias::est {

struct DesignSpec {
  std::string outcome;
  std::vector<std::string> exposures;
  std::vector<std::string> instruments;
  std::vector<std::string> controls;
  /// Columns that receive the log-modulus transform. nullopt means every
  /// used column except the categorical V14 and V15.
  std::optional<std::vector<std::string>> transform;
};

/// Columns that are never transformed.
bool is_categorical(const std::string& column);

struct StratumNote {
  std::string stratum;
  std::size_t rows_total = 0;
  /// Rows dropped because a required field was absent.
  std::size_t rows_dropped = 0;
  bool skipped = false;
  std::string reason;
};

struct DesignSet {
  /// One matrix per site, ordered by site name.
  std::vector<DesignMatrix> strata;
  /// One note per site seen in the table, including skipped ones.
  std::vector<StratumNote> notes;
};

/// Listwise-deletes rows with any absent required field, applies the
/// transform and splits by site (V1). Throws UnknownColumnError for columns
/// missing from the table.
DesignSet build_design(const records::RecordTable& table, const DesignSpec& spec);

}  // namespace voterbias::est
