#include "voterbias/presets.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <array>
#include <sstream>

#include "voterbias/cache.hpp"
#include "voterbias/error.hpp"

namespace voterbias::presets {

namespace pt = boost::property_tree;

std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::Reputation: return "reputation";
    case Family::Joint: return "joint";
    case Family::Custom: return "custom";
  }
  return "custom";
}

void ModelSpec::validate() const {
  if (name.empty()) throw UsageError("model without a name");
  if (outcome.empty()) throw UsageError("model '" + name + "' has no outcome");
  if (exposures.empty()) throw UsageError("model '" + name + "' has no exposures");
  // No instruments means an OLS-only model.
  if (!instruments.empty() && instruments.size() < exposures.size()) {
    throw UsageError("model '" + name + "' has fewer instruments than exposures");
  }
  if (family == Family::Reputation && window) {
    throw UsageError("reputation model '" + name + "' must not have a window");
  }
  if (family == Family::Joint) {
    if (!window) throw UsageError("joint model '" + name + "' requires a window");
    if (exposures != std::vector<std::string>{"V20", "V23"}) {
      throw UsageError("joint model '" + name + "' must have exposures V20, V23");
    }
  }
}

namespace {

constexpr std::array<const char*, 5> kReputationExposures{"V31", "V32", "V33", "V34", "V35"};
constexpr std::array<const char*, 5> kReputationInstruments{"V37", "V38", "V39", "V40", "V41"};
// Question-popularity control paired with each instrument.
constexpr std::array<const char*, 5> kPairedControls{"V3", "V4", "V5", "V8", "V11"};

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string row_label(const std::vector<std::string>& instruments,
                      const std::vector<std::string>& controls) {
  std::string label = join(instruments, ", ");
  if (!controls.empty()) label += " + " + join(controls, ", ");
  return label;
}

}  // namespace

std::vector<ModelSpec> enumerate_reputation_models() {
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> sets;
  for (std::size_t i = 0; i < kReputationInstruments.size(); ++i) {
    sets.push_back({{kReputationInstruments[i]}, {}});
    sets.push_back({{kReputationInstruments[i]}, {kPairedControls[i]}});
  }
  const std::vector<std::string> all_z(kReputationInstruments.begin(), kReputationInstruments.end());
  const std::vector<std::string> all_c(kPairedControls.begin(), kPairedControls.end());
  sets.push_back({all_z, {}});
  sets.push_back({all_z, all_c});

  std::vector<ModelSpec> out;
  for (const char* exposure : kReputationExposures) {
    for (const auto& [z, c] : sets) {
      ModelSpec m;
      m.family = Family::Reputation;
      m.outcome = "V19";
      m.exposures = {exposure};
      m.instruments = z;
      m.controls = c;
      m.row_label = row_label(z, c);
      m.name = std::string("reputation/") + exposure + "/" +
               (z.size() == 1 ? z.front() : std::string("all")) + (c.empty() ? "" : "+controls");
      out.push_back(std::move(m));
    }
  }
  return out;
}

std::vector<ModelSpec> enumerate_joint_models() {
  std::vector<vars::WindowSpec> windows;
  for (int p = 5; p <= 30; p += 5) windows.push_back(vars::WindowSpec::percentile(p));
  windows.push_back(vars::WindowSpec::question_day());

  std::vector<ModelSpec> out;
  for (const auto& w : windows) {
    ModelSpec m;
    m.family = Family::Joint;
    m.outcome = "V21";
    m.exposures = {"V20", "V23"};
    m.instruments = {"V17", "V18"};
    m.controls = {"V32"};
    m.window = w;
    m.row_label = w.tag();
    m.name = "joint/" + w.tag();
    out.push_back(std::move(m));
  }
  return out;
}

std::string serialize_models(const std::vector<ModelSpec>& models) {
  std::ostringstream out;
  out << "# voterbias model definitions\n";
  out << "version = 1\n";
  for (const auto& m : models) {
    out << "\n[" << m.name << "]\n";
    out << "family = " << family_name(m.family) << '\n';
    out << "outcome = " << m.outcome << '\n';
    out << "exposures = " << join(m.exposures, ", ") << '\n';
    if (!m.instruments.empty()) out << "instruments = " << join(m.instruments, ", ") << '\n';
    if (!m.controls.empty()) out << "controls = " << join(m.controls, ", ") << '\n';
    if (m.window) out << "window = " << m.window->tag() << '\n';
    if (m.transform) {
      out << "transform = " << (m.transform->empty() ? std::string("none") : join(*m.transform, ", "))
          << '\n';
    }
    if (!m.row_label.empty()) out << "row = " << m.row_label << '\n';
  }
  return out.str();
}

std::vector<ModelSpec> parse_models(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError(std::string("model file: ") + e.what());
  }

  const auto version = tree.get_optional<std::string>("version");
  if (!version) throw UsageError("model file: missing 'version'");
  if (*version != "1") throw UsageError("model file: unsupported version " + *version);

  std::vector<ModelSpec> out;
  for (const auto& [section, body] : tree) {
    if (section == "version") continue;
    if (body.empty()) throw UsageError("model file: unexpected top-level key '" + section + "'");
    ModelSpec m;
    m.name = section;
    for (const auto& [key, node] : body) {
      const auto value = node.get_value<std::string>();
      if (key == "family") {
        if (value == "reputation") {
          m.family = Family::Reputation;
        } else if (value == "joint") {
          m.family = Family::Joint;
        } else if (value == "custom") {
          m.family = Family::Custom;
        } else {
          throw UsageError("model '" + section + "': unknown family '" + value + "'");
        }
      } else if (key == "outcome") {
        m.outcome = value;
      } else if (key == "exposures") {
        m.exposures = split_list(value);
      } else if (key == "instruments") {
        m.instruments = split_list(value);
      } else if (key == "controls") {
        m.controls = split_list(value);
      } else if (key == "window") {
        m.window = vars::WindowSpec::parse(value);
      } else if (key == "transform") {
        m.transform = value == "none" ? std::vector<std::string>{} : split_list(value);
      } else if (key == "row") {
        m.row_label = value;
      } else {
        throw UsageError("model '" + section + "': unknown key '" + key + "'");
      }
    }
    if (m.row_label.empty()) m.row_label = m.name;
    m.validate();
    out.push_back(std::move(m));
  }
  if (out.empty()) throw UsageError("model file defines no models");
  return out;
}

std::vector<ModelSpec> load_models(const std::string& path) {
  std::string text;
  try {
    text = cache::read_file(path);
  } catch (const DataError&) {
    throw UsageError("cannot read model file '" + path + "'");
  }
  return parse_models(text);
}

ResolvedModel resolve(const ModelSpec& model, const records::RecordTable& table) {
  ResolvedModel out;
  std::optional<std::string> suffix;
  if (model.window) {
    const auto tag = model.window->tag();
    if (table.primary_window() != tag) {
      if (!table.has(records::windowed_column(vars::var::AnswerScoreBefore, *model.window))) {
        out.unavailable_reason = "window " + tag + " not compiled into records";
        return out;
      }
      suffix = tag;
    }
  }
  const auto map = [&](const std::vector<std::string>& names) {
    std::vector<std::string> mapped;
    for (const auto& n : names) {
      bool windowed = false;
      if (suffix && n.size() > 1 && n[0] == 'V') {
        try {
          windowed = vars::is_windowed(std::stoi(n.substr(1)));
        } catch (const std::exception&) {
        }
      }
      mapped.push_back(windowed ? n + "@" + *suffix : n);
    }
    return mapped;
  };
  est::DesignSpec d;
  d.outcome = map({model.outcome}).front();
  d.exposures = map(model.exposures);
  d.instruments = map(model.instruments);
  d.controls = map(model.controls);
  if (model.transform) d.transform = map(*model.transform);
  out.design = std::move(d);
  return out;
}

}  // namespace voterbias::presets
