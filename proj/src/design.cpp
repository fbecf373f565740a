#include "voterbias/design.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "voterbias/error.hpp"

namespace voterbias::est {

bool is_categorical(const std::string& column) {
  const auto base = column.substr(0, column.find('@'));
  return base == "V1" || base == "V14" || base == "V15";
}

DesignSet build_design(const records::RecordTable& table, const DesignSpec& spec) {
  if (spec.exposures.empty()) throw UsageError("model has no exposures");

  std::vector<std::string> used{spec.outcome};
  for (const auto* block : {&spec.exposures, &spec.instruments, &spec.controls}) {
    used.insert(used.end(), block->begin(), block->end());
  }
  std::vector<const std::vector<double>*> cols;
  for (const auto& name : used) {
    const auto* c = table.find(name);
    if (c == nullptr) throw UnknownColumnError(name);
    cols.push_back(c);
  }
  std::vector<bool> transform(used.size(), false);
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (spec.transform) {
      transform[i] = std::find(spec.transform->begin(), spec.transform->end(), used[i]) !=
                     spec.transform->end();
    } else {
      transform[i] = !is_categorical(used[i]);
    }
  }
  if (spec.transform) {
    for (const auto& t : *spec.transform) {
      if (std::find(used.begin(), used.end(), t) == used.end() && !table.has(t)) {
        throw UnknownColumnError(t);
      }
    }
  }

  std::map<std::string, std::vector<std::size_t>> kept;
  std::map<std::string, StratumNote> notes;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto& site = table.sites()[r];
    auto& note = notes[site];
    note.stratum = site;
    ++note.rows_total;
    const bool complete = std::all_of(cols.begin(), cols.end(),
                                      [&](const std::vector<double>* c) { return !std::isnan((*c)[r]); });
    if (complete) {
      kept[site].push_back(r);
    } else {
      ++note.rows_dropped;
    }
  }

  const std::size_t p = spec.exposures.size();
  const std::size_t q = spec.instruments.size();
  const std::size_t c = spec.controls.size();
  const std::size_t min_rows = p + q + c + 2;

  DesignSet out;
  for (auto& [site, note] : notes) {
    const auto it = kept.find(site);
    const std::size_t n = it == kept.end() ? 0 : it->second.size();
    if (n == 0) {
      note.skipped = true;
      note.reason = "no complete rows";
    } else if (n < min_rows) {
      note.skipped = true;
      note.reason = "only " + std::to_string(n) + " complete rows, need at least " +
                    std::to_string(min_rows);
    }
    out.notes.push_back(note);
    if (note.skipped) continue;

    DesignMatrix d;
    d.stratum = site;
    d.outcome_name = spec.outcome;
    d.exposure_names = spec.exposures;
    d.instrument_names = spec.instruments;
    d.control_names = spec.controls;
    const auto rows = static_cast<Eigen::Index>(n);
    d.y.resize(rows);
    d.exposures.resize(rows, static_cast<Eigen::Index>(p));
    d.instruments.resize(rows, static_cast<Eigen::Index>(q));
    d.controls.resize(rows, static_cast<Eigen::Index>(c));
    const auto value = [&](std::size_t col, std::size_t row) {
      const double v = (*cols[col])[row];
      return transform[col] ? log_modulus(v) : v;
    };
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto row = it->second[static_cast<std::size_t>(i)];
      std::size_t col = 0;
      d.y(i) = value(col++, row);
      for (std::size_t j = 0; j < p; ++j) d.exposures(i, static_cast<Eigen::Index>(j)) = value(col++, row);
      for (std::size_t j = 0; j < q; ++j) d.instruments(i, static_cast<Eigen::Index>(j)) = value(col++, row);
      for (std::size_t j = 0; j < c; ++j) d.controls(i, static_cast<Eigen::Index>(j)) = value(col++, row);
    }
    out.strata.push_back(std::move(d));
  }
  return out;
}

}  // namespace voterbias::est
