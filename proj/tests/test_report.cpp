#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <limits>

#include "voterbias/error.hpp"
#include "voterbias/report.hpp"

using namespace voterbias;
using namespace voterbias::report;

TEST(Format, TiesGoToEven) {
  EXPECT_EQ(format_fixed3(0.0625), "0.062");
  EXPECT_EQ(format_fixed3(0.3125), "0.312");
  EXPECT_EQ(format_fixed3(0.1875), "0.188");
  EXPECT_EQ(format_fixed3(0.4375), "0.438");
  EXPECT_EQ(format_fixed3(-0.0625), "-0.062");
}

TEST(Format, ExactBinaryValueDecides) {
  // 0.0005 is stored slightly above the tie.
  EXPECT_EQ(format_fixed3(0.0005), "0.001");
  EXPECT_EQ(format_fixed3(1.0005), "1.000");
}

TEST(Format, NegativeZero) {
  EXPECT_EQ(format_fixed3(-0.0), "0.000");
  EXPECT_EQ(format_fixed3(-0.0004), "0.000");
  EXPECT_EQ(format_fixed3(-0.0006), "-0.001");
}

TEST(Format, NonFinite) {
  EXPECT_EQ(format_fixed3(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_fixed3(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Format, Cell) {
  EXPECT_EQ(format_cell(0.7123, 0.0141), "0.712 (± 0.014)");
  est::Coefficient c;
  c.estimate = -1.5;
  c.std_error = 0.5;
  EXPECT_EQ(format_cell(c), "-1.500 (± 0.980)");
}

TEST(Hash, KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Manifest, DigestIgnoresTimestamp) {
  RunManifest m;
  m.command = "estimate";
  m.inputs = {{"records", sha256_hex("x")}};
  m.models = {"a", "b"};
  m.timestamp = "2020-01-01T00:00:00Z";
  const auto d = m.digest();
  m.timestamp = "2021-01-01T00:00:00Z";
  EXPECT_EQ(m.digest(), d);
  m.models.push_back("c");
  EXPECT_NE(m.digest(), d);
  EXPECT_NE(m.to_text().find(m.digest()), std::string::npos);
}

TEST(Manifest, SourceDateEpoch) {
  ::setenv("SOURCE_DATE_EPOCH", "86400", 1);
  EXPECT_EQ(current_timestamp(), "1970-01-02T00:00:00Z");
  ::unsetenv("SOURCE_DATE_EPOCH");
}

TEST(Markdown, ColumnsAlignByCodePoint) {
  const auto grid = markdown_grid({"row", "V31 OLS"}, {{"V37", "0.712 (± 0.014)"}, {"all", "n/a"}});
  std::vector<std::size_t> widths;
  std::size_t start = 0;
  while (start < grid.size()) {
    const auto end = grid.find('\n', start);
    const auto line = grid.substr(start, end - start);
    std::size_t cp = 0;
    for (unsigned char ch : line) cp += (ch & 0xC0) != 0x80;
    widths.push_back(cp);
    start = end + 1;
  }
  ASSERT_EQ(widths.size(), 4u);
  for (auto w : widths) EXPECT_EQ(w, widths.front());
}

TEST(Csv, FieldQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("x\ny"), "\"x\ny\"");
}

TEST(Stem, SafeNames) {
  EXPECT_EQ(file_stem("stats.stackexchange.com"), "stats.stackexchange.com");
  EXPECT_EQ(file_stem("a/b c"), "a_b_c");
}

namespace {

records::RecordTable toy_table() {
  records::RecordTable t;
  const int n = 40;
  std::vector<double> y, x, z;
  for (int i = 0; i < n; ++i) {
    t.add_row_keys(i + 1, 1, i, i % 2 ? "beta" : "alpha", "pct:30");
    z.push_back(i % 7);
    x.push_back(2.0 * (i % 7) + (i % 3));
    y.push_back(0.5 * x.back() + (i % 5));
  }
  t.add_column("Y", y);
  t.add_column("X", x);
  t.add_column("Z", z);
  return t;
}

presets::ModelSpec toy_model() {
  presets::ModelSpec m;
  m.name = "toy";
  m.outcome = "Y";
  m.exposures = {"X"};
  m.instruments = {"Z"};
  m.transform = std::vector<std::string>{};
  m.row_label = "Z";
  return m;
}

}  // namespace

TEST(Tables, RunAndRender) {
  const auto run = run_models(toy_table(), {toy_model()});
  ASSERT_EQ(run.fits.size(), 4u);
  EXPECT_EQ(run.fits[0].site, "alpha");
  EXPECT_EQ(run.fits[0].method, est::Method::OLS);
  EXPECT_EQ(run.fits[1].method, est::Method::TSLS);
  const auto tables = build_tables(run, {est::Method::OLS, est::Method::TSLS});
  ASSERT_EQ(tables.size(), 2u);
  EXPECT_EQ(tables[0].site, "alpha");
  EXPECT_EQ(tables[0].columns, (std::vector<std::string>{"X OLS", "X IV"}));
  EXPECT_EQ(tables[0].cells[0][0], format_cell(run.fits[0].result->exposures[0]));

  const auto md = to_markdown(tables[0], "deadbeef");
  EXPECT_NE(md.find("deadbeef"), std::string::npos);
  EXPECT_NE(md.find(tables[0].cells[0][1]), std::string::npos);

  const auto csv = to_csv(tables[0], "deadbeef");
  EXPECT_EQ(csv.rfind("manifest_digest,family,site,model,row,exposure,method,", 0), 0u);
  std::size_t lines = 0;
  for (std::size_t p = csv.find("\r\n"); p != std::string::npos; p = csv.find("\r\n", p + 2)) ++lines;
  EXPECT_EQ(lines, 3u);
}

TEST(Tables, UnknownColumnStopsTheRun) {
  auto m = toy_model();
  m.controls = {"V99"};
  EXPECT_THROW(run_models(toy_table(), {m}), UnknownColumnError);
}
