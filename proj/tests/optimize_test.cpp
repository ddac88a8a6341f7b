#include "dynfair/optimize.hpp"

#include <random>

#include "gtest/gtest.h"
#include "test_support.hpp"

namespace dynfair {
namespace {

Population pair_pop(std::vector<double> pi0, std::vector<double> pi1, double p0 = 0.5) {
  Population p;
  p.grid = ScoreGrid::uniform(0, 1, pi0.size());
  p.groups = {{"g0", p0, std::move(pi0)}, {"g1", 1.0 - p0, std::move(pi1)}};
  return p;
}

// Random two-group instance with u+ > 0 > u-.
struct Instance {
  Population pop;
  OutcomeModel outcome;
  InstitutionModel inst;
};

Instance random_instance(std::mt19937_64& rng, bool monotone) {
  Instance in;
  in.pop = testing::random_population(rng, testing::uniform_index(rng, 2, 10), 2, 0.2);
  in.outcome = testing::random_outcome(rng, in.pop, monotone);
  in.inst = {testing::uniform(rng, 0.1, 2.0), testing::uniform(rng, -4.0, -0.1)};
  return in;
}

TEST(RateGrid, NestsUnderHalving) {
  const auto coarse = rate_grid(0.1);
  const auto fine = rate_grid(0.05);
  ASSERT_EQ(coarse.size(), 11u);
  ASSERT_EQ(fine.size(), 21u);
  for (std::size_t i = 0; i < coarse.size(); ++i) EXPECT_EQ(coarse[i], fine[2 * i]);
  EXPECT_EQ(rate_grid(0.3).back(), 1.0);
  EXPECT_THROW(rate_grid(0.0), DomainError);
  EXPECT_THROW(rate_grid(1.5), DomainError);
}

TEST(MaxUtility, CostlessFailureAcceptsEveryone) {
  const auto pop = pair_pop({0.5, 0.5}, {0.8, 0.2});
  const auto out = OutcomeModel::shared({"g0", "g1"}, {0.1, 0.6}, 1, 1);
  EXPECT_EQ(max_utility_policy(pop, out, {1.0, 0.0}), Policy::constant(pop, 1.0));
}

TEST(MaxUtility, LossesEverywhereAcceptsNobody) {
  const auto pop = pair_pop({0.5, 0.5}, {0.8, 0.2});
  const auto out = OutcomeModel::shared({"g0", "g1"}, {0.1, 0.6}, 1, 1);
  EXPECT_EQ(max_utility_policy(pop, out, {-1.0, -0.5}), Policy::constant(pop, 0.0));
}

TEST(MaxUtility, MatchesExhaustiveSearch) {
  const auto pop = pair_pop({0.5, 0.5}, {0.3, 0.7});
  const auto out = OutcomeModel::shared({"g0", "g1"}, {0.7, 0.9}, 1, 1);
  const InstitutionModel inst{1.0, -4.0};
  const auto p = max_utility_policy(pop, out, inst);
  EXPECT_EQ(p.at("g0"), (std::vector<double>{0.0, 1.0}));
  // every deterministic policy per group
  for (const auto& g : pop.groups) {
    double best = -1.0;
    std::vector<double> arg;
    for (int mask = 0; mask < 4; ++mask) {
      const std::vector<double> tau{double(mask & 1), double((mask >> 1) & 1)};
      const double u = testing::oracle_group_utility(testing::enumerate_outcomes(g.pmf, out.rho_for(g.label), tau), inst);
      if (u > best) best = u, arg = tau;
    }
    EXPECT_EQ(p.at(g.label), arg);
  }
}

TEST(MaxUtility, ZeroGainBinsAreRejected) {
  const auto pop = pair_pop({0.5, 0.5}, {0.5, 0.5});
  const auto out = OutcomeModel::shared({"g0", "g1"}, {0.5, 0.9}, 1, 1);
  EXPECT_EQ(max_utility_policy(pop, out, {1.0, -1.0}).at("g0"), (std::vector<double>{0.0, 1.0}));
}

TEST(ConstrainedPolicy, IdenticalGroupsMatchBestThreshold) {
  const auto pop = pair_pop({0.2, 0.3, 0.5}, {0.2, 0.3, 0.5});
  const auto out = OutcomeModel::shared({"g0", "g1"}, {0.2, 0.6, 0.9}, 1, 1);
  const InstitutionModel inst{1.0, -1.0};
  const auto r = constrained_policy(pop, out, inst, FairnessConstraint::DemographicParity, 0.01);
  EXPECT_EQ(r.policy.at("g0"), r.policy.at("g1"));
  EXPECT_EQ(demographic_parity_gap(pop, out, r.policy, "g0", "g1"), 0.0);
  // accept bins 1 and 2 (positive gain), reject bin 0: rate 0.8
  EXPECT_NEAR(r.rate, 0.8, 1e-12);
  EXPECT_NEAR(r.utility, institution_utility(max_utility_policy(pop, out, inst), pop, out, inst), 1e-12);
}

TEST(ConstrainedPolicy, ParityHoldsByConstruction) {
  const auto pop = pair_pop({0.5, 0.5}, {0.8, 0.2});
  for (const auto& rho : {std::vector<double>{0.2, 0.8}, std::vector<double>{0.9, 0.1}}) {
    const auto out = OutcomeModel::shared({"g0", "g1"}, rho, 1, 1);
    const auto r = constrained_policy(pop, out, {1.0, -1.0}, FairnessConstraint::DemographicParity);
    EXPECT_LE(demographic_parity_gap(pop, out, r.policy, "g0", "g1"), 1e-9);
  }
}

TEST(ConstrainedPolicy, MatchesBruteForceScan) {
  const auto pop = pair_pop({0.2, 0.8}, {0.8, 0.2});
  const auto out = OutcomeModel::shared({"g0", "g1"}, {0.4, 0.9}, 1, 1);
  const InstitutionModel inst{1.0, -1.0};
  const auto r = constrained_policy(pop, out, inst, FairnessConstraint::DemographicParity, 0.01);
  const auto oracle = testing::brute_force_constrained(pop, out, inst, false, 0.01);
  EXPECT_EQ(r.rate, oracle.rate);
  EXPECT_NEAR(r.utility, oracle.utility, 1e-12);
  // gain is 0.8 at the top bin and -0.2 at the bottom; utility rises until g0's top bin is exhausted
  EXPECT_EQ(r.rate, 0.8);
}

TEST(ConstrainedPolicy, Preconditions) {
  const auto pop = pair_pop({0.5, 0.5}, {0.8, 0.2});
  const auto out = OutcomeModel::shared({"g0", "g1"}, {0.9, 0.1}, 1, 1);
  EXPECT_THROW(constrained_policy(pop, out, {}, FairnessConstraint::EqualOpportunity), PreconditionError);
  Population three = pop;
  three.groups[0].proportion = 0.25;
  three.groups.push_back({"g2", 0.25, {0.5, 0.5}});
  const auto out3 = OutcomeModel::shared({"g0", "g1", "g2"}, {0.1, 0.9}, 1, 1);
  EXPECT_THROW(constrained_policy(three, out3, {}, FairnessConstraint::DemographicParity), PreconditionError);
}

TEST(OutcomeOptimal, NonPositiveDeltasRejectTarget) {
  const auto pop = pair_pop({0.5, 0.5}, {0.8, 0.2});
  const auto out = OutcomeModel::shared({"g0", "g1"}, {0.2, 0.5}, 1, 1);  // delta = -0.6, 0
  const auto r = outcome_optimal_policy(pop, out, {1.0, -1.0}, "g1", -INFINITY);
  EXPECT_EQ(r.policy.at("g1"), (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(r.target_delta_mu, 0.0);
}

TEST(OutcomeOptimal, PositiveDeltasAcceptTarget) {
  const auto pop = pair_pop({0.5, 0.5}, {0.8, 0.2});
  const auto out = OutcomeModel::shared({"g0", "g1"}, {0.6, 0.9}, 1, 1);
  const auto r = outcome_optimal_policy(pop, out, {1.0, -1.0}, "g1", -INFINITY);
  EXPECT_EQ(r.policy.at("g1"), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(r.target_rate, 1.0);
}

TEST(OutcomeOptimal, MixedSignsMatchBruteForce) {
  // bin 0: delta < 0; bin 1: delta > 0. Floors sweep from unconstrained to binding.
  const auto pop = pair_pop({0.6, 0.4}, {0.3, 0.7}, 0.4);
  const auto out = OutcomeModel::shared({"g0", "g1"}, {0.3, 0.8}, 1, 1);
  const InstitutionModel inst{1.0, -3.0};
  const auto rates = rate_grid(0.01);
  // others: best-utility rate for g0 by brute force
  double others = -INFINITY;
  for (double b : rates) {
    const auto tau = testing::bisect_cut(pop.groups[0].pmf, b);
    others = std::max(others, 0.4 * testing::oracle_group_utility(
                                        testing::enumerate_outcomes(pop.groups[0].pmf, {0.3, 0.8}, tau), inst));
  }
  for (double floor : std::vector<double>{-INFINITY, -0.2, -0.05, 0.0, 0.05}) {
    double best_dmu = -INFINITY;
    for (double b : rates) {
      const auto tau = testing::bisect_cut(pop.groups[1].pmf, b);
      const auto outs = testing::enumerate_outcomes(pop.groups[1].pmf, {0.3, 0.8}, tau);
      const double u = others + 0.6 * testing::oracle_group_utility(outs, inst);
      if (u < floor - 1e-12) continue;
      best_dmu = std::max(best_dmu, testing::oracle_delta_mu(pop.groups[1].pmf, {0.3, 0.8}, tau, 1.0, -1.0));
    }
    if (best_dmu == -INFINITY) {
      EXPECT_THROW(outcome_optimal_policy(pop, out, inst, "g1", floor), InfeasibleError);
      continue;
    }
    const auto r = outcome_optimal_policy(pop, out, inst, "g1", floor);
    EXPECT_NEAR(r.target_delta_mu, best_dmu, 1e-12) << "floor " << floor;
    EXPECT_GE(r.utility, floor);
  }
}

TEST(OutcomeOptimal, InfeasibleFloorReportsMaximum) {
  const auto pop = pair_pop({0.5, 0.5}, {0.8, 0.2});
  const auto out = OutcomeModel::shared({"g0", "g1"}, {0.2, 0.8}, 1, 1);
  try {
    outcome_optimal_policy(pop, out, {1.0, -1.0}, "g1", 10.0);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("max achievable utility"), std::string::npos);
  }
  EXPECT_THROW(outcome_optimal_policy(pop, out, {1.0, -1.0}, "zz", 0.0), KeyError);
}

TEST(OptimizeProperties, ConstraintsOnlyCostUtility) {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 200; ++i) {
    const auto in = random_instance(rng, true);
    const double u_max = institution_utility(max_utility_policy(in.pop, in.outcome, in.inst), in.pop, in.outcome, in.inst);
    for (auto c : {FairnessConstraint::DemographicParity, FairnessConstraint::EqualOpportunity}) {
      const auto r = constrained_policy(in.pop, in.outcome, in.inst, c, 0.05);
      EXPECT_LE(r.utility, u_max + 1e-12);
      EXPECT_GE(r.utility, -1e-12);
    }
  }
}

TEST(OptimizeProperties, ConstraintsAreSatisfied) {
  std::mt19937_64 rng(52);
  for (int i = 0; i < 200; ++i) {
    const auto in = random_instance(rng, true);
    const auto dp = constrained_policy(in.pop, in.outcome, in.inst, FairnessConstraint::DemographicParity);
    EXPECT_LE(demographic_parity_gap(in.pop, in.outcome, dp.policy, "g0", "g1"), 1e-9);
    const auto eo = constrained_policy(in.pop, in.outcome, in.inst, FairnessConstraint::EqualOpportunity);
    EXPECT_LE(equal_opportunity_gap(in.pop, in.outcome, eo.policy, "g0", "g1"), 1e-9);
  }
}

TEST(OptimizeProperties, DpScanMatchesBruteForceOracle) {
  std::mt19937_64 rng(53);
  for (int i = 0; i < 40; ++i) {
    const auto in = random_instance(rng, false);
    const auto r = constrained_policy(in.pop, in.outcome, in.inst, FairnessConstraint::DemographicParity, 0.02);
    const auto oracle = testing::brute_force_constrained(in.pop, in.outcome, in.inst, false, 0.02);
    EXPECT_NEAR(r.utility, oracle.utility, 1e-10);
  }
}

TEST(OptimizeProperties, RefiningResolutionNeverLosesUtility) {
  std::mt19937_64 rng(54);
  for (int i = 0; i < 100; ++i) {
    const auto in = random_instance(rng, true);
    for (auto c : {FairnessConstraint::DemographicParity, FairnessConstraint::EqualOpportunity}) {
      const auto coarse = constrained_policy(in.pop, in.outcome, in.inst, c, 0.1);
      const auto fine = constrained_policy(in.pop, in.outcome, in.inst, c, 0.05);
      EXPECT_GE(fine.utility, coarse.utility);
    }
  }
}

TEST(OptimizeProperties, OutcomeOptimalBeatsParityOnTargetDeltaMu) {
  std::mt19937_64 rng(55);
  for (int i = 0; i < 100; ++i) {
    const auto in = random_instance(rng, false);
    const auto dp = constrained_policy(in.pop, in.outcome, in.inst, FairnessConstraint::DemographicParity);
    const auto& g1 = in.pop.groups[1];
    const double dp_dmu = group_delta_mu(g1, dp.policy, in.outcome, in.pop.grid);
    const auto oo = outcome_optimal_policy(in.pop, in.outcome, in.inst, "g1", dp.utility - 1e-12);
    EXPECT_GE(oo.target_delta_mu, dp_dmu - 1e-12);
    EXPECT_GE(oo.utility, dp.utility - 1e-12);
  }
}

}  // namespace
}  // namespace dynfair
