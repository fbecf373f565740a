#include "voterbias/cli.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "voterbias/cache.hpp"
#include "voterbias/error.hpp"
#include "voterbias/ingest.hpp"
#include "voterbias/presets.hpp"
#include "voterbias/records.hpp"
#include "voterbias/report.hpp"
#include "voterbias/synthetic.hpp"
#include "voterbias/variables.hpp"

namespace voterbias::cli {

namespace fs = std::filesystem;

namespace {

void apply_thread_override() {
  const char* env = std::getenv("VOTERBIAS_THREADS");
  if (env == nullptr || *env == '\0') return;
  const std::string_view s(env);
  int threads = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), threads);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || threads < 1) {
    throw UsageError("VOTERBIAS_THREADS must be a positive integer, got '" + std::string(s) + "'");
  }
  omp_set_num_threads(threads);
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory '" + dir + "'");
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// ---- ingest ---------------------------------------------------------------

struct IngestArgs {
  ingest::DumpPaths paths;
  std::string site;
  std::string out;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out) {
  const auto built = ingest::ingest_files(a.site, a.paths);
  cache::write_store_file(a.out, built.store);
  cache::write_file_atomic(a.out + ".report", built.report.to_key_values());
  out << built.report.to_text();
  return kExitOk;
}

// ---- compile --------------------------------------------------------------

struct CompileArgs {
  std::vector<std::string> caches;
  std::vector<std::string> windows;
  std::string out;
};

std::vector<vars::WindowSpec> expand_windows(const std::vector<std::string>& tags) {
  std::vector<vars::WindowSpec> out;
  const auto add = [&](const vars::WindowSpec& w) {
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  };
  for (const auto& t : tags) {
    if (t == "grid") {
      for (int p = 5; p <= 30; p += 5) add(vars::WindowSpec::percentile(p));
      add(vars::WindowSpec::question_day());
    } else {
      add(vars::WindowSpec::parse(t));
    }
  }
  return out;
}

int cmd_compile(const CompileArgs& a, std::ostream& out) {
  const auto windows = expand_windows(a.windows);
  std::vector<records::CompiledWindow> compiled;
  for (const auto& w : windows) compiled.push_back({w, {}});

  report::RunManifest manifest;
  manifest.command = "compile";
  manifest.timestamp = report::current_timestamp();
  for (const auto& w : windows) manifest.windows.push_back(w.tag());
  for (std::size_t i = 0; i < a.caches.size(); ++i) {
    const auto bytes = cache::read_file(a.caches[i]);
    manifest.inputs.emplace_back("cache" + std::to_string(i + 1), report::sha256_hex(bytes));
    const auto store = cache::deserialize_store(bytes);
    for (auto& cw : compiled) {
      auto recs = vars::compile_records(store, cw.window);
      cw.records.insert(cw.records.end(), std::make_move_iterator(recs.begin()),
                        std::make_move_iterator(recs.end()));
    }
  }
  const auto table = records::make_table(compiled);
  cache::write_file_atomic(a.out, records::to_csv(table));
  cache::write_file_atomic(a.out + ".manifest", manifest.to_text());
  out << "compiled " << table.rows() << " answer records";
  for (const auto& w : windows) out << ' ' << w.tag();
  out << " -> " << a.out << '\n';
  return kExitOk;
}

// ---- estimate -------------------------------------------------------------

struct EstimateArgs {
  std::string records;
  std::string models = "reputation";
  std::string method = "both";
  bool robust = false;
  std::string out;
};

std::vector<presets::ModelSpec> select_models(const std::string& which) {
  if (which == "reputation") return presets::enumerate_reputation_models();
  if (which == "joint") return presets::enumerate_joint_models();
  return presets::load_models(which);
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  report::RunOptions options;
  if (a.method == "ols") {
    options.methods = {est::Method::OLS};
  } else if (a.method == "iv") {
    options.methods = {est::Method::TSLS};
  }
  if (a.robust) options.fit.covariance = est::Covariance::HC1;

  const auto models = select_models(a.models);
  const auto bytes = cache::read_file(a.records);
  const auto table = records::read_table_file(a.records);

  report::RunManifest manifest;
  manifest.command = "estimate";
  manifest.timestamp = report::current_timestamp();
  manifest.inputs.emplace_back("records", report::sha256_hex(bytes));
  if (a.models != "reputation" && a.models != "joint") {
    manifest.inputs.emplace_back("models", report::sha256_file(a.models));
  }
  if (auto w = table.primary_window()) manifest.windows.push_back(*w);
  for (const auto& m : models) manifest.models.push_back(m.name);
  manifest.parameters.emplace_back("method", a.method);
  manifest.parameters.emplace_back("covariance", a.robust ? "HC1" : "classical");

  const auto run = report::run_models(table, models, options);
  const auto tables = report::build_tables(run, options.methods);
  const auto digest = manifest.digest();

  ensure_directory(a.out);
  for (const auto& t : tables) {
    const auto stem = report::file_stem(t.family) + "_" + report::file_stem(t.site);
    cache::write_file_atomic(join_path(a.out, stem + ".md"), report::to_markdown(t, digest));
    cache::write_file_atomic(join_path(a.out, stem + ".csv"), report::to_csv(t, digest));
    out << "wrote " << stem << ".md and " << stem << ".csv\n";
  }
  cache::write_file_atomic(join_path(a.out, "manifest.txt"), manifest.to_text());
  for (const auto& u : run.unavailable) err << "warning: not estimated: " << u << '\n';
  if (tables.empty()) err << "warning: no model could be estimated\n";
  return kExitOk;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::optional<long> n;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool export_records = false;
};

struct SimulationTable {
  std::vector<std::string> exposures;
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  std::vector<est::FirstStageDiag> first_stage;
  long n = 0;
  std::vector<std::vector<std::string>> csv_lines;
};

void add_fit_rows(SimulationTable& t, const est::EstimateResult& r) {
  std::vector<std::string> cells;
  for (std::size_t k = 0; k < r.exposures.size(); ++k) {
    const auto& c = r.exposures[k];
    cells.push_back(report::format_cell(c));
    t.csv_lines.push_back({est::method_name(r.method), t.exposures[k], report::format_fixed3(c.estimate),
                           report::format_fixed3(c.ci_half_width()), report::format_cell(c)});
  }
  t.rows.emplace_back(est::method_name(r.method), std::move(cells));
}

void add_value_row(SimulationTable& t, const std::string& label, const std::vector<double>& values) {
  std::vector<std::string> cells;
  for (std::size_t k = 0; k < values.size(); ++k) {
    cells.push_back(report::format_fixed3(values[k]));
    t.csv_lines.push_back({label, t.exposures[k], report::format_fixed3(values[k]), "", ""});
  }
  t.rows.emplace_back(label, std::move(cells));
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  auto scenario = synth::load_scenario(a.scenario);
  std::visit(
      [&](auto& s) {
        if (a.n) s.n = *a.n;
        if (a.seed) s.seed = *a.seed;
        s.validate();
      },
      scenario);

  report::RunManifest manifest;
  manifest.command = "simulate";
  manifest.timestamp = report::current_timestamp();
  manifest.inputs.emplace_back("scenario", report::sha256_file(a.scenario));
  // The effective scenario, overrides applied.
  manifest.parameters.emplace_back("scenario", report::sha256_hex(synth::serialize_scenario(scenario)));

  SimulationTable t;
  est::DesignMatrix d;
  std::vector<double> truth;
  std::optional<synth::PlimResult> plim;
  std::string name;
  if (const auto* s = std::get_if<synth::ScenarioSpec>(&scenario)) {
    d = synth::generate(*s);
    truth = s->beta;
    plim = synth::scenario_plim(*s);
    name = s->name;
    manifest.seeds.push_back(s->seed);
    manifest.parameters.emplace_back("n", std::to_string(s->n));
  } else {
    const auto& j = std::get<synth::JointScenarioSpec>(scenario);
    d = synth::generate_joint_scenario(j);
    truth = {j.beta1, j.beta2};
    name = j.name;
    manifest.seeds.push_back(j.seed);
    manifest.parameters.emplace_back("n", std::to_string(j.n));
  }
  manifest.models.push_back(name);
  t.exposures = d.exposure_names;
  t.n = d.rows();

  const auto ols = est::ols_fit(d);
  const auto iv = est::tsls_fit(d);
  add_fit_rows(t, ols);
  add_fit_rows(t, iv);
  if (plim) {
    add_value_row(t, "plim OLS", plim->ols);
    add_value_row(t, "plim IV", plim->tsls);
  }
  add_value_row(t, "true", truth);

  const auto digest = manifest.digest();
  ensure_directory(a.out);

  std::ostringstream md;
  md << "# simulation: " << name << "\n\nManifest digest: `" << digest << "`\n\n";
  md << "n = " << t.n << "\n\n";
  std::vector<std::string> header{"Row"};
  header.insert(header.end(), t.exposures.begin(), t.exposures.end());
  std::vector<std::vector<std::string>> grid;
  for (const auto& [label, cells] : t.rows) {
    std::vector<std::string> row{label};
    row.insert(row.end(), cells.begin(), cells.end());
    grid.push_back(std::move(row));
  }
  md << report::markdown_grid(header, grid);
  md << "\nCells are estimate (± 1.96 x classical standard error).\n\n## First stage\n\n";
  std::vector<std::vector<std::string>> fs_rows;
  for (const auto& fs : iv.first_stage) {
    fs_rows.push_back({fs.exposure, report::format_fixed3(fs.f_statistic),
                       std::to_string(fs.df_numerator) + ", " + std::to_string(fs.df_denominator),
                       report::format_fixed3(fs.partial_r2), fs.weak ? "yes" : "no"});
  }
  md << report::markdown_grid({"Exposure", "F", "df", "partial R2", "weak (F < 10)"}, fs_rows);

  std::ostringstream csv;
  csv << "manifest_digest,row,exposure,estimate,ci_half_width,cell\r\n";
  for (const auto& line : t.csv_lines) {
    csv << digest;
    for (const auto& f : line) csv << ',' << report::csv_field(f);
    csv << "\r\n";
  }

  cache::write_file_atomic(join_path(a.out, "simulation.md"), md.str());
  cache::write_file_atomic(join_path(a.out, "simulation.csv"), csv.str());
  if (a.export_records) {
    cache::write_file_atomic(join_path(a.out, "records.csv"), records::to_csv(synth::to_records(d)));
  }
  cache::write_file_atomic(join_path(a.out, "manifest.txt"), manifest.to_text());
  out << md.str();
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Voter-bias estimation from Q&A vote logs", "voterbias"};
  app.require_subcommand(1);

  IngestArgs ia;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse a dump into a cache file");
  ingest_cmd->add_option("--posts", ia.paths.posts, "Posts.xml")->required();
  ingest_cmd->add_option("--votes", ia.paths.votes, "Votes.xml")->required();
  ingest_cmd->add_option("--badges", ia.paths.badges, "Badges.xml")->required();
  ingest_cmd->add_option("--comments", ia.paths.comments, "Comments.xml")->required();
  ingest_cmd->add_option("--site", ia.site, "Site name (V1)")->required();
  ingest_cmd->add_option("--out", ia.out, "Cache file to write")->required();

  CompileArgs ca;
  auto* compile_cmd = app.add_subcommand("compile", "Compile per-answer records");
  compile_cmd->add_option("--cache", ca.caches, "Cache file (repeat for several sites)")->required();
  compile_cmd->add_option("--window", ca.windows, "pct:P, day or grid (repeatable)")->required();
  compile_cmd->add_option("--out", ca.out, "Records CSV to write")->required();

  EstimateArgs ea;
  auto* estimate_cmd = app.add_subcommand("estimate", "Fit OLS and IV models");
  estimate_cmd->add_option("--records", ea.records, "Records CSV")->required();
  estimate_cmd->add_option("--models", ea.models, "reputation, joint or a model file")->required();
  estimate_cmd->add_option("--method", ea.method, "both, ols or iv")
      ->check(CLI::IsMember({"both", "ols", "iv"}));
  estimate_cmd->add_flag("--robust-se", ea.robust, "HC1 standard errors");
  estimate_cmd->add_option("--out", ea.out, "Output directory")->required();

  SimulateArgs sa;
  auto* simulate_cmd = app.add_subcommand("simulate", "Fit a synthetic scenario");
  simulate_cmd->add_option("--scenario", sa.scenario, "Scenario file")->required();
  simulate_cmd->add_option("--n", sa.n, "Sample size override");
  simulate_cmd->add_option("--seed", sa.seed, "Seed override");
  simulate_cmd->add_option("--out", sa.out, "Output directory")->required();
  simulate_cmd->add_flag("--export-records", sa.export_records, "Also write records.csv");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    apply_thread_override();
    if (*ingest_cmd) return cmd_ingest(ia, out);
    if (*compile_cmd) return cmd_compile(ca, out);
    if (*estimate_cmd) return cmd_estimate(ea, out, err);
    if (*simulate_cmd) return cmd_simulate(sa, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const SingularDesignError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace voterbias::cli
