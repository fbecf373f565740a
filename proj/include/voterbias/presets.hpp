#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voterbias/design.hpp"
#include "voterbias/records.hpp"
#include "voterbias/variables.hpp"

namespace voterbias::presets {

enum class Family { Reputation, Joint, Custom };

std::string_view family_name(Family f) noexcept;

struct ModelSpec {
  std::string name;
  Family family = Family::Custom;
  std::string outcome;
  std::vector<std::string> exposures;
  std::vector<std::string> instruments;
  std::vector<std::string> controls;
  /// Required for the joint family, absent for the reputation family.
  std::optional<vars::WindowSpec> window;
  /// Columns to log-modulus transform; nullopt selects the default.
  std::optional<std::vector<std::string>> transform;
  /// Row label in result tables (instrument + control set, or window).
  std::string row_label;

  /// Throws UsageError when the family invariants do not hold.
  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

/// The 60 reputation-bias models: 5 exposures (V31..V35) x 6 instrument
/// sets (each of V37..V41 alone, then all five) x {no control, paired
/// question-popularity control(s)}. Outcome V19.
std::vector<ModelSpec> enumerate_reputation_models();

/// The 7 joint social-influence/position models: P = 5, 10, ..., 30 and the
/// question-day window. Outcome V21, exposures (V20, V23), instruments
/// (V17, V18), control V32.
std::vector<ModelSpec> enumerate_joint_models();

/// Declarative model file, INI syntax:
///
///   version = 1
///   [model name]
///   family = reputation | joint | custom
///   outcome = V19
///   exposures = V33
///   instruments = V37, V38
///   controls = V3
///   window = pct:30          (optional)
///   transform = V19, V33     (optional; "none" disables)
///   row = label              (optional)
std::string serialize_models(const std::vector<ModelSpec>& models);
/// Throws UsageError on syntax errors, unknown keys or invalid specs.
std::vector<ModelSpec> parse_models(std::string_view text);
std::vector<ModelSpec> load_models(const std::string& path);

/// Column mapping of a model onto a concrete records table. Windowed
/// variables map to plain columns when the table's primary window matches
/// the model window, otherwise to their `Vnn@<window>` columns.
struct ResolvedModel {
  std::optional<est::DesignSpec> design;
  /// Why `design` is absent (window not compiled into the table).
  std::string unavailable_reason;
};

ResolvedModel resolve(const ModelSpec& model, const records::RecordTable& table);

}  // namespace voterbias::presets
