#include "dynfair/scenarios.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include "dynfair/builtin_scenarios.hpp"
#include "dynfair/scenario_io.hpp"
#include "gtest/gtest.h"
#include "test_support.hpp"

#ifndef DYNFAIR_SOURCE_DIR
#define DYNFAIR_SOURCE_DIR "."
#endif

namespace dynfair {
namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json boards_json() { return nlohmann::json::parse(*builtin_scenario_text("boards_quota")); }

void expect_identical(const Trajectory& a, const Trajectory& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a.steps[t].population, b.steps[t].population) << "step " << t;
    EXPECT_EQ(a.steps[t].policy, b.steps[t].policy) << "step " << t;
    EXPECT_EQ(a.steps[t].delta_mu, b.steps[t].delta_mu) << "step " << t;
    EXPECT_EQ(a.steps[t].utility, b.steps[t].utility) << "step " << t;
    EXPECT_EQ(a.steps[t].metrics.dp_gap, b.steps[t].metrics.dp_gap) << "step " << t;
  }
}

// Two identical groups, group-blind max-utility rule, no dynamics.
ScenarioConfig symmetric_config() {
  ScenarioConfig cfg;
  cfg.name = "symmetric";
  cfg.population.grid = ScoreGrid::uniform(0, 1, 4);
  cfg.population.groups = {{"W", 0.5, {0.1, 0.2, 0.3, 0.4}}, {"M", 0.5, {0.1, 0.2, 0.3, 0.4}}};
  cfg.outcome = OutcomeModel::shared({"W", "M"}, {0.2, 0.4, 0.7, 0.9}, 1, 1);
  cfg.policy_rule.kind = PolicyRuleKind::MaxUtility;
  cfg.horizon = 6;
  return cfg;
}

TEST(LoadScenario, BuiltIns) {
  const auto boards = load_scenario("boards_quota");
  EXPECT_EQ(boards.name, "boards_quota");
  const auto& quota = std::get<QuotaRule>(boards.interventions.at(0).rule);
  EXPECT_EQ(quota.share, 0.40);
  EXPECT_EQ(quota.group, "W");
  const auto lending = load_scenario("lending_liu");
  EXPECT_EQ(lending.population.labels(), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(lending.policy_rule.kind, PolicyRuleKind::Constrained);
}

TEST(LoadScenario, EmbeddedTextMatchesShippedFiles) {
  for (const char* name : {"lending_liu", "boards_quota"}) {
    const auto path = std::filesystem::path(DYNFAIR_SOURCE_DIR) / "scenarios" / (std::string(name) + ".json");
    EXPECT_EQ(std::string(*builtin_scenario_text(name)), read_file(path)) << name;
    EXPECT_EQ(load_scenario(path.string()).population, load_scenario(name).population);
  }
}

TEST(LoadScenario, QuotaShareOutOfRange) {
  auto j = boards_json();
  j["interventions"][0]["share"] = 1.3;
  const auto dir = std::filesystem::temp_directory_path() / "dynfair_scenarios_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "bad_quota.json").string();
  std::ofstream(path) << j.dump(2);
  try {
    load_scenario(path);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("q out of [0,1]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("interventions[0].share"), std::string::npos) << msg;
    EXPECT_NE(msg.find(path), std::string::npos) << msg;
  }
  std::filesystem::remove_all(dir);
}

TEST(LoadScenario, UnknownNameAndBadFields) {
  try {
    load_scenario("no_such_scenario");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no_such_scenario"), std::string::npos);
  }
  auto j = boards_json();
  j["population"]["groups"][0]["pmf"][0] = 0.5;
  EXPECT_THROW(scenario_from_string(j.dump(), "x.json"), ValidationError);
  j = boards_json();
  j["unexpected_key"] = 1;
  EXPECT_THROW(scenario_from_string(j.dump(), "x.json"), ValidationError);
  EXPECT_THROW(scenario_from_string("{ not json", "x.json"), ValidationError);
}

TEST(RunScenario, NoInterventionsIsPlainSimulation) {
  auto cfg = load_scenario("lending_liu");
  cfg.horizon = 5;
  ASSERT_TRUE(cfg.interventions.empty());
  const auto traj = run_scenario(cfg);
  const auto direct =
      simulate(cfg.population, make_policy_rule(cfg), cfg.outcome, cfg.institution, 5, cfg.simulation_options());
  expect_identical(traj, direct);

  auto fixed = symmetric_config();
  fixed.policy_rule.kind = PolicyRuleKind::Fixed;
  fixed.policy_rule.fixed = Policy::constant(fixed.population, 0.5);
  expect_identical(run_scenario(fixed), simulate(fixed.population, fixed_policy(fixed.policy_rule.fixed), fixed.outcome,
                                                 fixed.institution, fixed.horizon, fixed.simulation_options()));
}

TEST(RunScenario, SymmetricQuotaNeverBinds) {
  const auto plain = symmetric_config();
  auto with_quota = plain;
  with_quota.interventions.push_back({"quota", QuotaRule{"W", 0.5, 0.0, 1000}, 0, std::nullopt});
  const auto a = run_scenario(plain), b = run_scenario(with_quota);
  expect_identical(a, b);
  for (const auto& rec : b.steps) EXPECT_TRUE(rec.intervention_active("quota"));
}

TEST(RunScenario, BoardsQuotaShareHoldsWhileActive) {
  const auto cfg = load_scenario("boards_quota");
  for (const auto& [name, ivs] : cfg.variants) {
    const auto traj = run_scenario(with_interventions(cfg, ivs));
    std::size_t active_steps = 0;
    for (const auto& rec : traj.steps) {
      if (!rec.intervention_active("quota")) continue;
      ++active_steps;
      const auto share = accepted_share(rec.population, rec.policy, "W");
      ASSERT_TRUE(share.has_value());
      EXPECT_GE(*share, 0.40 - 1e-9) << name << " step " << rec.step;
    }
    EXPECT_GT(active_steps, 0u) << name;
  }
}

TEST(RunScenario, SunsetIsPermanent) {
  const auto cfg = load_scenario("boards_quota");
  for (const auto& [name, ivs] : cfg.variants) {
    const auto traj = run_scenario(with_interventions(cfg, ivs));
    bool retired = false, was_active = false;
    for (const auto& rec : traj.steps) {
      const bool a = rec.intervention_active("quota");
      if (retired) {
        EXPECT_FALSE(a) << name << " step " << rec.step;
      }
      if (was_active && !a) retired = true;
      was_active = was_active || a;
    }
  }
}

TEST(RunScenario, ScheduledWindowIsRespected) {
  const auto cfg = with_interventions(load_scenario("boards_quota"), {"pipeline"});
  const auto traj = run_scenario(cfg);
  for (const auto& rec : traj.steps) EXPECT_EQ(rec.intervention_active("pipeline"), rec.step < 10);
}

TEST(RunScenario, QuotaOnEmptyGroupIsInfeasible) {
  auto cfg = symmetric_config();
  cfg.population.groups[0].proportion = 0.0;
  cfg.population.groups[1].proportion = 1.0;
  cfg.interventions.push_back({"quota", QuotaRule{"W", 0.4, 0.0, 1}, 0, std::nullopt});
  EXPECT_THROW(run_scenario(cfg), InfeasibleError);
}

TEST(EnforceQuota, ScalesOthersWhenFullAcceptanceIsShort) {
  Population pop;
  pop.grid = ScoreGrid::uniform(0, 1, 2);
  pop.groups = {{"W", 0.1, {0.5, 0.5}}, {"M", 0.9, {0.5, 0.5}}};
  const auto p = enforce_quota(pop, Policy::constant(pop, 1.0), {"W", 0.4, 0.0, 1});
  EXPECT_NEAR(*accepted_share(pop, p, "W"), 0.4, 1e-12);
  EXPECT_EQ(p.at("W"), (std::vector<double>{1.0, 1.0}));
  // nobody accepted: nothing to enforce
  EXPECT_EQ(enforce_quota(pop, Policy::constant(pop, 0.0), {"W", 0.4, 0.0, 1}), Policy::constant(pop, 0.0));
}

TEST(PipelineShift, PreservesMassAndRaisesMean) {
  std::mt19937_64 rng(71);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = testing::uniform_index(rng, 2, 20);
    const auto grid = ScoreGrid::uniform(0, testing::uniform(rng, 0.1, 10), n);
    const GroupState g{"W", 1.0, testing::random_pmf(rng, n, 0.3)};
    const GroupState shifted{"W", 1.0, pipeline_shift(g.pmf, testing::uniform(rng))};
    EXPECT_NEAR(detail::kahan_sum(shifted.pmf), 1.0, 1e-12);
    for (double v : shifted.pmf) EXPECT_GE(v, 0.0);
    EXPECT_GE(group_mean(shifted, grid), group_mean(g, grid) - 1e-12);
  }
}

TEST(CompareInterventions, VariantAgainstItself) {
  const auto cfg = load_scenario("boards_quota");
  const auto table = compare_interventions(cfg, {resolve_variant(cfg, "quota_only"), {"again", {"quota"}}});
  const auto &a = table.rows[0], &b = table.rows[1];
  EXPECT_EQ(a.final_goal_value, b.final_goal_value);
  EXPECT_EQ(a.steps_to_goal, b.steps_to_goal);
  EXPECT_EQ(a.persists_after_sunset, b.persists_after_sunset);
  EXPECT_EQ(a.final_delta_mu, b.final_delta_mu);
  EXPECT_THROW(compare_interventions(cfg, {resolve_variant(cfg, "none")}), DomainError);
}

TEST(CompareInterventions, ZeroHorizon) {
  auto cfg = load_scenario("boards_quota");
  cfg.horizon = 0;
  const auto table = compare_interventions(cfg, {resolve_variant(cfg, "none"), resolve_variant(cfg, "quota_only")});
  // initial max-utility appointments are far from parity; the quota narrows but does not close the gap at once
  EXPECT_FALSE(table.row("none").steps_to_goal.has_value());
  for (const auto& row : table.rows)
    EXPECT_EQ(row.steps_to_goal.has_value(), goal_met(cfg.goal, row.final_goal_value)) << row.variant;
}

TEST(CompareInterventions, BoardsContrast) {
  const auto cfg = load_scenario("boards_quota");
  const auto table =
      compare_interventions(cfg, {resolve_variant(cfg, "quota_only"), resolve_variant(cfg, "quota_pipeline")});
  EXPECT_FALSE(table.row("quota_only").persists_after_sunset);
  EXPECT_TRUE(table.row("quota_pipeline").persists_after_sunset);
  EXPECT_EQ(table.groups, (std::vector<std::string>{"W", "M"}));
}

TEST(ResolveVariant, Tokens) {
  const auto cfg = load_scenario("boards_quota");
  EXPECT_TRUE(resolve_variant(cfg, "none").interventions.empty());
  EXPECT_EQ(resolve_variant(cfg, "quota+pipeline").interventions, (std::vector<std::string>{"quota", "pipeline"}));
  EXPECT_EQ(resolve_variant(cfg, "quota_pipeline").interventions, (std::vector<std::string>{"quota", "pipeline"}));
  EXPECT_THROW(resolve_variant(cfg, "quota+nothing"), ValidationError);
}

TEST(SensitivitySweep, ZeroPerturbationHasNoSpread) {
  auto cfg = load_scenario("lending_liu");
  cfg.horizon = 5;
  const auto rep = sensitivity_sweep(cfg, 0.0, 4, 1);
  EXPECT_EQ(rep.spread, 0.0);
  EXPECT_FALSE(rep.unreliable);
}

TEST(SensitivitySweep, SingleDraw) {
  const auto cfg = load_scenario("boards_quota");
  const auto rep = sensitivity_sweep(cfg, 0.05, 1, 3);
  EXPECT_EQ(rep.min, rep.max);
  EXPECT_THROW(sensitivity_sweep(cfg, -0.1, 1, 3), DomainError);
  EXPECT_THROW(sensitivity_sweep(cfg, 0.1, 0, 3), DomainError);
}

TEST(SensitivitySweep, PerturbationStaysWithinBudget) {
  std::mt19937_64 rng(72);
  for (int i = 0; i < 300; ++i) {
    const auto pmf = testing::random_pmf(rng, testing::uniform_index(rng, 2, 20), 0.3);
    const double eps = testing::uniform(rng, 0.0, 0.2);
    const auto p = perturb_pmf(pmf, eps, rng);
    EXPECT_LE(total_variation(pmf, p), eps + 1e-12);
    EXPECT_NEAR(detail::kahan_sum(p), 1.0, 1e-12);
  }
}

TEST(SensitivitySweep, LendingIsDeterministicAndIndependentOfWorkers) {
  const auto cfg = load_scenario("lending_liu");
  const auto a = sensitivity_sweep(cfg, 0.01, 100, 11, 1);
  const auto b = sensitivity_sweep(cfg, 0.01, 100, 11, 4);
  EXPECT_EQ(a.values, b.values);
  EXPECT_TRUE(std::isfinite(a.spread));
  EXPECT_EQ(a.unreliable, a.spread > 0.1);
}

}  // namespace
}  // namespace dynfair
