#include "voterbias/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "voterbias/cache.hpp"
#include "voterbias/design.hpp"
#include "voterbias/error.hpp"
#include "voterbias/timeutil.hpp"

namespace voterbias::report {

std::string format_fixed3(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[400];
  const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, 3);
  std::string out(buf, r.ptr);
  if (out == "-0.000") out = "0.000";
  return out;
}

std::string format_cell(double estimate, double half_ci) {
  return format_fixed3(estimate) + " (± " + format_fixed3(half_ci) + ")";
}

std::string format_cell(const est::Coefficient& c) { return format_cell(c.estimate, c.ci_half_width()); }

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xf];
  }
  return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(cache::read_file(path)); }

std::string current_timestamp() {
  UnixSeconds t = 0;
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  bool fixed = false;
  if (env != nullptr && *env != '\0') {
    const std::string_view s(env);
    const auto r = std::from_chars(s.data(), s.data() + s.size(), t);
    fixed = r.ec == std::errc{} && r.ptr == s.data() + s.size();
  }
  if (!fixed) {
    t = std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
  }
  return format_timestamp(t) + "Z";
}

std::string RunManifest::canonical_text() const {
  std::ostringstream out;
  out << "tool_version = " << tool_version << '\n';
  out << "command = " << command << '\n';
  for (const auto& [role, digest] : inputs) out << "input." << role << " = sha256:" << digest << '\n';
  for (const auto& w : windows) out << "window = " << w << '\n';
  for (const auto& m : models) out << "model = " << m << '\n';
  for (const auto s : seeds) out << "seed = " << s << '\n';
  for (const auto& [k, v] : parameters) out << "param." << k << " = " << v << '\n';
  return out.str();
}

std::string RunManifest::digest() const { return sha256_hex(canonical_text()); }

std::string RunManifest::to_text() const {
  return "# voterbias run manifest\n" + canonical_text() + "timestamp = " + timestamp + "\ndigest = " +
         digest() + '\n';
}

ModelRun run_models(const records::RecordTable& table, const std::vector<presets::ModelSpec>& models,
                    const RunOptions& options) {
  struct Job {
    const presets::ModelSpec* spec;
    est::DesignSpec design;
  };
  ModelRun run;
  std::vector<Job> jobs;
  for (const auto& m : models) {
    m.validate();
    auto resolved = presets::resolve(m, table);
    if (!resolved.design) {
      run.unavailable.push_back(m.name + ": " + resolved.unavailable_reason);
      continue;
    }
    const auto& d = *resolved.design;
    std::vector<std::string> used{d.outcome};
    for (const auto* block : {&d.exposures, &d.instruments, &d.controls}) {
      used.insert(used.end(), block->begin(), block->end());
    }
    if (d.transform) used.insert(used.end(), d.transform->begin(), d.transform->end());
    for (const auto& col : used) {
      if (!table.has(col)) throw UnknownColumnError(col);
    }
    jobs.push_back({&m, std::move(*resolved.design)});
  }

  std::vector<std::vector<ModelFit>> per_job(jobs.size());
  const auto count = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    const auto& job = jobs[static_cast<std::size_t>(i)];
    auto& out = per_job[static_cast<std::size_t>(i)];
    try {
      const auto set = est::build_design(table, job.design);
      std::map<std::string, const est::DesignMatrix*> by_site;
      for (const auto& m : set.strata) by_site[m.stratum] = &m;
      for (const auto& note : set.notes) {
        for (const auto method : options.methods) {
          ModelFit f;
          f.spec = *job.spec;
          f.site = note.stratum;
          f.method = method;
          f.rows_total = note.rows_total;
          f.rows_dropped = note.rows_dropped;
          if (note.skipped) {
            f.note = "site skipped: " + note.reason;
          } else {
            try {
              f.result = est::fit(*by_site.at(note.stratum), method, options.fit);
            } catch (const std::exception& e) {
              f.note = std::string(est::method_name(method)) + " failed: " + e.what();
            }
          }
          out.push_back(std::move(f));
        }
      }
    } catch (const std::exception& e) {
      ModelFit f;
      f.spec = *job.spec;
      f.note = e.what();
      out.push_back(std::move(f));
    }
  }
  for (auto& v : per_job) {
    for (auto& f : v) run.fits.push_back(std::move(f));
  }
  return run;
}

namespace {

std::string row_header(std::string_view family) {
  if (family == "reputation") return "Instrument + Control";
  if (family == "joint") return "T";
  return "Model";
}

std::string column_name(const std::string& exposure, est::Method m) {
  return exposure + " " + est::method_name(m);
}

std::string number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string format_stat(double v) {
  if (std::isfinite(v) && std::abs(v) >= 1e6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
  }
  return format_fixed3(v);
}

std::size_t display_width(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

}  // namespace

std::string file_stem(std::string_view text) {
  std::string out;
  for (const char c : text) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '-' || c == '_';
    out += ok ? c : '_';
  }
  if (out.empty()) out = "_";
  return out;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (const char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string markdown_grid(const std::vector<std::string>& header,
                          const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 3);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = std::max(width[c], display_width(header[c]));
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) {
      width[c] = std::max(width[c], display_width(r[c]));
    }
  }
  std::string out;
  const auto line = [&](const std::vector<std::string>& cells) {
    out += '|';
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < cells.size() ? cells[c] : "";
      out += ' ' + cell + std::string(width[c] - display_width(cell), ' ') + " |";
    }
    out += '\n';
  };
  line(header);
  out += '|';
  for (const auto w : width) out += std::string(w + 2, '-') + '|';
  out += '\n';
  for (const auto& r : rows) line(r);
  return out;
}

std::vector<ResultTable> build_tables(const ModelRun& run, const std::vector<est::Method>& methods) {
  std::vector<std::string> families;
  std::set<std::string> sites;
  for (const auto& f : run.fits) {
    const std::string fam(presets::family_name(f.spec.family));
    if (std::find(families.begin(), families.end(), fam) == families.end()) families.push_back(fam);
    if (!f.site.empty()) sites.insert(f.site);
  }

  std::vector<ResultTable> out;
  for (const auto& fam : families) {
    for (const auto& site : sites) {
      ResultTable t;
      t.family = fam;
      t.site = site;
      t.row_header = row_header(fam);
      std::vector<std::string> exposures;
      std::set<std::string> noted;
      for (const auto& f : run.fits) {
        if (presets::family_name(f.spec.family) != fam) continue;
        // Fits that failed before splitting by site apply to every site.
        if (!f.site.empty() && f.site != site) continue;
        t.fits.push_back(&f);
        if (std::find(t.row_labels.begin(), t.row_labels.end(), f.spec.row_label) == t.row_labels.end()) {
          t.row_labels.push_back(f.spec.row_label);
        }
        for (const auto& e : f.spec.exposures) {
          if (std::find(exposures.begin(), exposures.end(), e) == exposures.end()) exposures.push_back(e);
        }
        if (!f.note.empty()) {
          const auto line = f.spec.name + " (" + est::method_name(f.method) + "): " + f.note;
          if (noted.insert(line).second) t.notes.push_back(line);
        }
      }
      if (t.fits.empty()) continue;
      for (const auto& e : exposures) {
        for (const auto m : methods) t.columns.push_back(column_name(e, m));
      }
      t.cells.assign(t.row_labels.size(), std::vector<std::string>(t.columns.size(), "n/a"));
      std::set<std::string> dropped_noted;
      for (const auto* f : t.fits) {
        const auto row = static_cast<std::size_t>(
            std::find(t.row_labels.begin(), t.row_labels.end(), f->spec.row_label) - t.row_labels.begin());
        if (f->rows_dropped > 0 && dropped_noted.insert(f->spec.name).second) {
          t.notes.push_back(f->spec.name + ": " + std::to_string(f->rows_dropped) + " of " +
                            std::to_string(f->rows_total) + " rows dropped for absent fields");
        }
        if (!f->result) continue;
        for (std::size_t k = 0; k < f->spec.exposures.size() && k < f->result->exposures.size(); ++k) {
          const auto col = static_cast<std::size_t>(
              std::find(t.columns.begin(), t.columns.end(), column_name(f->spec.exposures[k], f->method)) -
              t.columns.begin());
          if (col < t.columns.size()) t.cells[row][col] = format_cell(f->result->exposures[k]);
        }
      }
      for (const auto& u : run.unavailable) t.notes.push_back("not estimated: " + u);
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::string to_markdown(const ResultTable& table, const std::string& manifest_digest) {
  std::ostringstream out;
  out << "# " << table.family << " models: " << table.site << "\n\n";
  out << "Manifest digest: `" << manifest_digest << "`\n\n";

  std::vector<std::string> header{table.row_header};
  header.insert(header.end(), table.columns.begin(), table.columns.end());
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < table.row_labels.size(); ++r) {
    std::vector<std::string> row{table.row_labels[r]};
    row.insert(row.end(), table.cells[r].begin(), table.cells[r].end());
    rows.push_back(std::move(row));
  }
  out << markdown_grid(header, rows);

  std::string covariance = "classical";
  for (const auto* f : table.fits) {
    if (f->result) {
      covariance = f->result->covariance == est::Covariance::HC1 ? "HC1 robust" : "classical";
      break;
    }
  }
  out << "\nCells are estimate (± 1.96 x " << covariance << " standard error).\n";

  std::vector<std::vector<std::string>> fs_rows;
  for (const auto* f : table.fits) {
    if (!f->result) continue;
    for (const auto& fs : f->result->first_stage) {
      fs_rows.push_back({f->spec.row_label, fs.exposure, format_stat(fs.f_statistic),
                         std::to_string(fs.df_numerator) + ", " + std::to_string(fs.df_denominator),
                         format_stat(fs.f_p_value), format_fixed3(fs.partial_r2), fs.weak ? "yes" : "no"});
    }
  }
  if (!fs_rows.empty()) {
    out << "\n## First stage\n\n";
    out << markdown_grid({table.row_header, "Exposure", "F", "df", "p", "partial R2", "weak (F < 10)"},
                         fs_rows);
  }

  std::vector<std::string> notes;
  if (table.family == "reputation") {
    notes.push_back(
        "V3, V4, V37 and V38 are dump-end snapshot counts; views and favorites carry no timestamps in "
        "the dump.");
  } else if (table.family == "joint") {
    notes.push_back("Answers with equal scores before T are ranked by earlier creation.");
  }
  notes.insert(notes.end(), table.notes.begin(), table.notes.end());
  if (!notes.empty()) {
    out << "\n## Notes\n\n";
    for (const auto& n : notes) out << "- " << n << '\n';
  }
  return out.str();
}

std::string to_csv(const ResultTable& table, const std::string& manifest_digest) {
  std::ostringstream out;
  const auto end_line = [&] { out << "\r\n"; };
  out << "manifest_digest,family,site,model,row,exposure,method,covariance,n,rows_dropped,estimate,"
         "std_error,ci_half_width,t_stat,p_value,cell,first_stage_f,first_stage_df1,first_stage_df2,"
         "first_stage_p,weak_instrument,note";
  end_line();
  for (const auto* f : table.fits) {
    for (std::size_t k = 0; k < f->spec.exposures.size(); ++k) {
      out << manifest_digest << ',' << csv_field(table.family) << ',' << csv_field(table.site) << ','
          << csv_field(f->spec.name) << ',' << csv_field(f->spec.row_label) << ','
          << csv_field(f->spec.exposures[k]) << ',' << est::method_name(f->method) << ',';
      if (f->result && k < f->result->exposures.size()) {
        const auto& r = *f->result;
        const auto& c = r.exposures[k];
        out << (r.covariance == est::Covariance::HC1 ? "HC1" : "classical") << ',' << r.n << ','
            << f->rows_dropped << ',' << number(c.estimate) << ',' << number(c.std_error) << ','
            << number(c.ci_half_width()) << ',' << number(c.t_stat) << ',' << number(c.p_value) << ','
            << csv_field(format_cell(c)) << ',';
        if (k < r.first_stage.size()) {
          const auto& fs = r.first_stage[k];
          out << number(fs.f_statistic) << ',' << fs.df_numerator << ',' << fs.df_denominator << ','
              << number(fs.f_p_value) << ',' << (fs.weak ? "true" : "false") << ',';
        } else {
          out << ",,,,,";
        }
      } else {
        out << ",," << f->rows_dropped << ",,,,,,n/a,,,,,," << csv_field(f->note);
      }
      end_line();
    }
  }
  return out.str();
}

}  // namespace voterbias::report
