#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dynfair/dynamics.hpp"
#include "dynfair/metrics.hpp"
#include "dynfair/policy.hpp"

namespace dynfair {

inline constexpr double kDefaultResolution = 0.01;

// Rates {0, r, 2r, ..., 1}. When 1/r is an integer n the points are i/n, so
// halving r yields a superset of the same doubles.
inline std::vector<double> rate_grid(double resolution) {
  if (!(resolution > 0.0 && resolution <= 1.0)) throw DomainError("resolution must lie in (0,1]");
  const double inv = 1.0 / resolution;
  const double n_round = std::round(inv);
  std::vector<double> out;
  if (std::abs(inv - n_round) <= 1e-9 * inv) {
    const auto n = static_cast<std::size_t>(n_round);
    for (std::size_t i = 0; i <= n; ++i) out.push_back(static_cast<double>(i) / static_cast<double>(n));
  } else {
    for (std::size_t i = 0; static_cast<double>(i) * resolution < 1.0; ++i)
      out.push_back(static_cast<double>(i) * resolution);
    out.push_back(1.0);
  }
  return out;
}

// Accepts exactly the bins with strictly positive expected institution gain.
inline Policy max_utility_policy(const Population& pop, const OutcomeModel& outcome, const InstitutionModel& inst) {
  Policy p;
  for (const auto& g : pop.groups) {
    const auto& rho = outcome.rho_for(g.label);
    check_length(rho.size(), pop.grid.size(), "rho of group '" + g.label + "'");
    std::vector<double> tau(rho.size());
    for (std::size_t x = 0; x < rho.size(); ++x) tau[x] = inst.expected_gain(rho[x]) > 0.0 ? 1.0 : 0.0;
    p.acceptance[g.label] = std::move(tau);
  }
  return p;
}

enum class FairnessConstraint { DemographicParity, EqualOpportunity };

inline const char* to_string(FairnessConstraint c) {
  return c == FairnessConstraint::DemographicParity ? "dp" : "eo";
}

// Threshold rule whose true-positive rate (acceptance among the qualified) equals `tpr`.
inline ThresholdRule threshold_policy_for_tpr(const GroupState& group, std::span<const double> rho, double tpr) {
  if (!(tpr >= 0.0 && tpr <= 1.0)) throw DomainError("target true-positive rate outside [0,1]");
  check_length(rho.size(), group.pmf.size(), "rho of group '" + group.label + "'");
  std::vector<double> qualified(rho.size());
  double total = 0.0;
  for (std::size_t x = 0; x < rho.size(); ++x) total += (qualified[x] = group.pmf[x] * rho[x]);
  if (!(total > 0.0)) throw UndefinedConditionalError(group.label, "Y=1");
  if (tpr >= 1.0) {
    // lowest bin that still carries qualified mass, accepted fully
    std::size_t lo = 0;
    while (lo + 1 < qualified.size() && !(qualified[lo] > 0.0)) ++lo;
    return {lo, 1.0};
  }
  return detail::threshold_for_weighted_target(qualified, tpr * total);
}

struct ConstrainedPolicyResult {
  Policy policy;
  double utility = 0.0;
  double rate = 0.0;  // the common acceptance rate (DP) or true-positive rate (EO)
};

namespace detail {

inline bool nondecreasing(std::span<const double> v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1]) return false;
  return true;
}

}  // namespace detail

// Scans the common rate over `rate_grid(resolution)`, realizing each rate in
// both groups with a randomized threshold, and keeps the utility maximizer.
// Ties go to the larger rate.
inline ConstrainedPolicyResult constrained_policy(const Population& pop, const OutcomeModel& outcome,
                                                  const InstitutionModel& inst, FairnessConstraint constraint,
                                                  double resolution = kDefaultResolution) {
  if (pop.groups.size() != 2)
    throw PreconditionError("constrained policy needs exactly two groups, got " + std::to_string(pop.groups.size()));
  require_valid(pop);
  validate_outcome(pop, outcome);
  const auto& g0 = pop.groups[0];
  const auto& g1 = pop.groups[1];
  if (constraint == FairnessConstraint::EqualOpportunity) {
    for (const auto* g : {&g0, &g1}) {
      if (!detail::nondecreasing(outcome.rho_for(g->label)))
        throw PreconditionError("equal opportunity search needs rho nondecreasing in score (group '" + g->label + "')");
    }
  }

  const std::size_t bins = pop.grid.size();
  bool found = false;
  ConstrainedPolicyResult best;
  for (double beta : rate_grid(resolution)) {
    Policy p;
    for (const auto* g : {&g0, &g1}) {
      const ThresholdRule rule = constraint == FairnessConstraint::DemographicParity
                                     ? threshold_policy_for_rate(*g, beta)
                                     : threshold_policy_for_tpr(*g, outcome.rho_for(g->label), beta);
      p.acceptance[g->label] = rule.expand(bins);
    }
    const double gap = constraint == FairnessConstraint::DemographicParity
                           ? demographic_parity_gap(pop, outcome, p, g0.label, g1.label)
                           : equal_opportunity_gap(pop, outcome, p, g0.label, g1.label);
    if (!(gap <= 1e-9)) continue;
    const double u = institution_utility(p, pop, outcome, inst);
    if (!found || u >= best.utility) {
      best = {std::move(p), u, beta};
      found = true;
    }
  }
  if (!found) throw InfeasibleError(std::string("no feasible common rate for constraint ") + to_string(constraint));
  return best;
}

struct OutcomeOptimalResult {
  Policy policy;
  double utility = 0.0;
  double target_delta_mu = 0.0;
  double target_rate = 0.0;
};

// Maximizes the target group's delta_mu over per-group randomized-threshold
// policies (rates on the resolution grid) subject to institution utility >=
// `utility_floor`. Ties: higher utility, then lower target acceptance rate.
// Non-target groups take their utility-maximizing grid rate, since utility is
// separable across groups and their choice does not move the target's delta_mu.
inline OutcomeOptimalResult outcome_optimal_policy(const Population& pop, const OutcomeModel& outcome,
                                                   const InstitutionModel& inst, std::string_view target,
                                                   double utility_floor,
                                                   double resolution = kDefaultResolution) {
  require_valid(pop);
  validate_outcome(pop, outcome);
  const auto& tg = pop.group(target);
  const std::size_t bins = pop.grid.size();
  const auto rates = rate_grid(resolution);

  Policy base;
  double others_utility = 0.0;
  for (const auto& g : pop.groups) {
    if (g.label == tg.label) continue;
    const auto& rho = outcome.rho_for(g.label);
    double best_u = -std::numeric_limits<double>::infinity();
    std::vector<double> best_tau;
    for (double beta : rates) {
      auto tau = threshold_policy_for_rate(g, beta).expand(bins);
      const double u = g.proportion * group_utility(tau, g, rho, inst);
      if (u >= best_u) {
        best_u = u;
        best_tau = std::move(tau);
      }
    }
    others_utility += best_u;
    base.acceptance[g.label] = std::move(best_tau);
  }

  const auto& rho_t = outcome.rho_for(tg.label);
  bool found = false;
  double max_utility = -std::numeric_limits<double>::infinity();
  OutcomeOptimalResult best;
  std::vector<double> best_tau;
  for (double beta : rates) {
    auto tau = threshold_policy_for_rate(tg, beta).expand(bins);
    const double u = others_utility + tg.proportion * group_utility(tau, tg, rho_t, inst);
    max_utility = std::max(max_utility, u);
    if (!(u >= utility_floor)) continue;
    Policy probe;
    probe.acceptance[tg.label] = tau;
    const double dmu = group_delta_mu(tg, probe, outcome, pop.grid);
    const bool better = !found || dmu > best.target_delta_mu ||
                        (dmu == best.target_delta_mu && u > best.utility);
    if (better) {
      best.utility = u;
      best.target_delta_mu = dmu;
      best.target_rate = beta;
      best_tau = std::move(tau);
      found = true;
    }
  }
  if (!found)
    throw InfeasibleError("utility floor " + detail::fmt_num(utility_floor) +
                          " unreachable; max achievable utility " + detail::fmt_num(max_utility));
  base.acceptance[tg.label] = std::move(best_tau);
  best.policy = std::move(base);
  return best;
}

}  // namespace dynfair
