#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "voterbias/error.hpp"
#include "voterbias/estimator.hpp"
#include "voterbias/synthetic.hpp"

using namespace voterbias;
using namespace voterbias::synth;

TEST(SplitMix64, ReferenceSequence) {
  SplitMix64 g(1234567);
  EXPECT_EQ(g(), 6457827717110365317ULL);
  EXPECT_EQ(g(), 3203168211198807973ULL);
  EXPECT_EQ(g(), 9817491932198370423ULL);
  EXPECT_EQ(g(), 4593380528125082431ULL);
  EXPECT_EQ(g(), 16408922859458223821ULL);
}

TEST(NormalStream, MomentsAndDeterminism) {
  NormalStream a(5), b(5);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = a.next();
    EXPECT_EQ(x, b.next());
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(Scenario, ReferencePlim) {
  const auto plim = scenario_plim(reference_scenario());
  ASSERT_EQ(plim.ols.size(), 1u);
  // Var(X) = 3, Cov(X, U) = 1, so OLS = 0.5 + 0.9 / 3.
  EXPECT_NEAR(plim.ols[0], 0.8, 1e-12);
  EXPECT_NEAR(plim.tsls[0], 0.5, 1e-12);
}

TEST(Scenario, NoConfoundingMeansNoBias) {
  auto s = reference_scenario();
  s.gamma = 0;
  EXPECT_NEAR(scenario_plim(s).ols[0], 0.5, 1e-12);
  s = reference_scenario();
  s.delta = 0;
  EXPECT_NEAR(scenario_plim(s).ols[0], 0.5, 1e-12);
}

TEST(Scenario, TwoExposurePlimAgainstHandInverse) {
  ScenarioSpec s;
  s.beta = {0.5, -0.2};
  s.alpha = {1.0, 2.0};
  // Var(X) = [[3, 1], [1, 6]], Cov(X, U) = (1, 1), det = 17.
  const auto plim = scenario_plim(s);
  EXPECT_NEAR(plim.ols[0], 0.5 + 0.9 * (6 - 1) / 17.0, 1e-12);
  EXPECT_NEAR(plim.ols[1], -0.2 + 0.9 * (3 - 1) / 17.0, 1e-12);
}

TEST(Scenario, GenerateIsDeterministic) {
  auto s = reference_scenario(500, 9);
  const auto a = generate(s);
  const auto b = generate(s);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.exposures, b.exposures);
  s.seed = 10;
  EXPECT_NE(generate(s).y, a.y);
}

TEST(Scenario, LargeSampleMatchesPlim) {
  const auto d = generate(reference_scenario(1000000, 42));
  const auto ols = est::ols_fit(d);
  const auto iv = est::tsls_fit(d);
  EXPECT_NEAR(ols.exposures[0].estimate, 0.8, 0.01);
  EXPECT_NEAR(iv.exposures[0].estimate, 0.5, 0.01);
  EXPECT_FALSE(iv.first_stage[0].weak);
}

TEST(Scenario, IrrelevantInstrumentIsWeak) {
  auto s = reference_scenario(10000, 7);
  s.alpha = {0.0};
  const auto iv = est::tsls_fit(generate(s));
  EXPECT_TRUE(iv.first_stage[0].weak);
  EXPECT_LT(iv.first_stage[0].f_statistic, 10.0);
}

TEST(Scenario, IvSpreadShrinksWithRootN) {
  // log(sd) against log(n) has slope -1/2.
  std::vector<double> log_n, log_sd;
  for (long n : {500L, 2000L, 8000L}) {
    std::vector<double> est;
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
      est.push_back(est::tsls_fit(generate(reference_scenario(n, seed))).exposures[0].estimate);
    }
    const double mean = std::accumulate(est.begin(), est.end(), 0.0) / est.size();
    double ss = 0;
    for (double e : est) ss += (e - mean) * (e - mean);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_sd.push_back(0.5 * std::log(ss / (est.size() - 1)));
  }
  const double slope = (log_sd.back() - log_sd.front()) / (log_n.back() - log_n.front());
  EXPECT_NEAR(slope, -0.5, 0.1);
}

TEST(JointScenario, RecoversBothEffects) {
  JointScenarioSpec s;
  s.n = 100000;
  s.seed = 42;
  const auto iv = est::tsls_fit(generate_joint_scenario(s));
  EXPECT_NEAR(iv.exposures[0].estimate, 0.4, 0.03);
  EXPECT_NEAR(iv.exposures[1].estimate, 0.3, 0.03);
}

TEST(JointScenario, DeterministicRankIsSingular) {
  JointScenarioSpec s;
  s.n = 200;
  s.alpha2 = 0;
  s.sigma_rank = 0;
  EXPECT_THROW(generate_joint_scenario(s), SingularDesignError);
}

TEST(Scenario, ValidationErrors) {
  auto s = reference_scenario(3, 1);
  EXPECT_THROW(s.validate(), UsageError);
  s = reference_scenario();
  s.alpha = {1.0, 1.0};
  EXPECT_THROW(s.validate(), UsageError);
  s = reference_scenario();
  s.sigma_u = -1;
  EXPECT_THROW(s.validate(), UsageError);
}

TEST(Scenario, IniRoundTrip) {
  ScenarioSpec s;
  s.name = "two";
  s.beta = {0.25, 0.125};
  s.alpha = {1.5, 0.5};
  s.seed = 123456789012345ULL;
  EXPECT_TRUE(std::get<ScenarioSpec>(parse_scenario(serialize_scenario(s))) == s);
  JointScenarioSpec j;
  j.group_size = 7;
  j.sigma_rank = 0.1;
  EXPECT_TRUE(std::get<JointScenarioSpec>(parse_scenario(serialize_scenario(j))) == j);
  EXPECT_THROW(parse_scenario("version = 1\n[scenario]\nkind = triple\n"), UsageError);
  EXPECT_THROW(parse_scenario("[scenario]\nkind = single\n"), UsageError);
}

TEST(Scenario, ToRecordsUsesDesignNames) {
  const auto d = generate(reference_scenario(20, 3));
  const auto t = to_records(d);
  EXPECT_EQ(t.rows(), 20u);
  ASSERT_TRUE(t.has("Y"));
  ASSERT_TRUE(t.has("X1"));
  ASSERT_TRUE(t.has("Z1"));
  EXPECT_EQ((*t.find("X1"))[4], d.exposures(4, 0));
}
