#include <gtest/gtest.h>

#include <set>

#include "support.hpp"
#include "voterbias/design.hpp"
#include "voterbias/error.hpp"
#include "voterbias/presets.hpp"

using namespace voterbias;
using namespace voterbias::presets;

TEST(Presets, ReputationGrid) {
  const auto models = enumerate_reputation_models();
  ASSERT_EQ(models.size(), 60u);
  std::set<std::string> names;
  for (const auto& m : models) {
    names.insert(m.name);
    EXPECT_EQ(m.outcome, "V19");
    EXPECT_EQ(m.exposures.size(), 1u);
    EXPECT_FALSE(m.window.has_value());
    EXPECT_NO_THROW(m.validate());
  }
  EXPECT_EQ(names.size(), 60u);
  EXPECT_EQ(models[0].instruments, std::vector<std::string>{"V37"});
  EXPECT_TRUE(models[0].controls.empty());
  EXPECT_EQ(models[1].controls, std::vector<std::string>{"V3"});
  EXPECT_EQ(models[1].row_label, "V37 + V3");
  EXPECT_EQ(models[7].controls, std::vector<std::string>{"V8"});
  EXPECT_EQ(models[11].row_label, "V37, V38, V39, V40, V41 + V3, V4, V5, V8, V11");
  EXPECT_EQ(models[12].exposures.front(), "V32");
}

TEST(Presets, JointGrid) {
  const auto models = enumerate_joint_models();
  ASSERT_EQ(models.size(), 7u);
  EXPECT_EQ(models.front().row_label, "pct:5");
  EXPECT_EQ(models.back().row_label, "day");
  for (const auto& m : models) {
    EXPECT_EQ(m.outcome, "V21");
    EXPECT_EQ(m.exposures, (std::vector<std::string>{"V20", "V23"}));
    EXPECT_EQ(m.instruments, (std::vector<std::string>{"V17", "V18"}));
    EXPECT_EQ(m.controls, std::vector<std::string>{"V32"});
    ASSERT_TRUE(m.window.has_value());
  }
}

TEST(Presets, IniRoundTrip) {
  auto models = enumerate_reputation_models();
  const auto joint = enumerate_joint_models();
  models.insert(models.end(), joint.begin(), joint.end());
  ModelSpec custom;
  custom.name = "mine";
  custom.outcome = "V19";
  custom.exposures = {"V31", "V34"};
  custom.instruments = {"V37", "V40"};
  custom.transform = std::vector<std::string>{};
  custom.row_label = "custom row";
  models.push_back(custom);
  EXPECT_EQ(parse_models(serialize_models(models)), models);
}

TEST(Presets, ParsesHandWrittenFile) {
  const auto models = parse_models(
      "version = 1\n"
      "[fast]\n"
      "outcome = V19\n"
      "exposures = V33\n"
      "instruments = V38, V39\n"
      "controls = V4\n"
      "transform = V19, V33\n");
  ASSERT_EQ(models.size(), 1u);
  EXPECT_EQ(models[0].family, Family::Custom);
  EXPECT_EQ(models[0].instruments, (std::vector<std::string>{"V38", "V39"}));
  EXPECT_EQ(*models[0].transform, (std::vector<std::string>{"V19", "V33"}));
}

TEST(Presets, RejectsBadFiles) {
  EXPECT_THROW(parse_models("[m]\noutcome = V19\nexposures = V31\n"), UsageError);
  EXPECT_THROW(parse_models("version = 2\n[m]\noutcome = V19\nexposures = V31\n"), UsageError);
  EXPECT_THROW(parse_models("version = 1\n[m]\noutcome = V19\nexposures = V31\ncolour = red\n"),
               UsageError);
  EXPECT_THROW(parse_models("version = 1\n[m]\noutcome = V19\n"), UsageError);
  EXPECT_THROW(parse_models("version = 1\n[m]\nfamily = joint\noutcome = V21\nexposures = V20\n"),
               UsageError);
  EXPECT_THROW(parse_models("version = 1\n[m]\noutcome = V19\nexposures = V31\nwindow = pct:0\n"),
               UsageError);
  EXPECT_THROW(load_models("/nonexistent/models.ini"), UsageError);
}

TEST(Presets, UnderidentifiedIsRejected) {
  ModelSpec m;
  m.name = "x";
  m.outcome = "V21";
  m.exposures = {"V20", "V23"};
  m.instruments = {"V17"};
  EXPECT_THROW(m.validate(), UsageError);
}

TEST(Presets, EveryPresetBuildsOnCompiledTable) {
  const auto store = vbtest::build(vbtest::random_dump(11, 10, 50));
  std::vector<records::CompiledWindow> cw;
  cw.push_back({vars::WindowSpec::percentile(30), vars::compile_records(store, vars::WindowSpec::percentile(30))});
  for (int p = 5; p <= 25; p += 5) {
    const auto w = vars::WindowSpec::percentile(p);
    cw.push_back({w, vars::compile_records(store, w)});
  }
  cw.push_back({vars::WindowSpec::question_day(), vars::compile_records(store, vars::WindowSpec::question_day())});
  const auto table = records::make_table(cw);

  auto models = enumerate_reputation_models();
  const auto joint = enumerate_joint_models();
  models.insert(models.end(), joint.begin(), joint.end());
  for (const auto& m : models) {
    const auto r = resolve(m, table);
    ASSERT_TRUE(r.design.has_value()) << m.name << ": " << r.unavailable_reason;
    EXPECT_NO_THROW(est::build_design(table, *r.design)) << m.name;
  }
  const auto pct30 = resolve(joint[5], table);
  EXPECT_EQ(pct30.design->exposures, (std::vector<std::string>{"V20", "V23"}));
  const auto pct5 = resolve(joint[0], table);
  EXPECT_EQ(pct5.design->outcome, "V21@pct:5");
}

TEST(Presets, MissingWindowIsUnavailable) {
  const auto store = vbtest::build(vbtest::fig4_dump());
  std::vector<records::CompiledWindow> cw{
      {vars::WindowSpec::percentile(30), vars::compile_records(store, vars::WindowSpec::percentile(30))}};
  const auto table = records::make_table(cw);
  const auto r = resolve(enumerate_joint_models().front(), table);
  EXPECT_FALSE(r.design.has_value());
  EXPECT_NE(r.unavailable_reason.find("pct:5"), std::string::npos);
}
