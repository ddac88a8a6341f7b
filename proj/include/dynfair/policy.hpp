#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dynfair/outcome.hpp"
#include "dynfair/population.hpp"

namespace dynfair {

// Acceptance probability per group per score bin.
struct Policy {
  std::map<std::string, std::vector<double>, std::less<>> acceptance;

  const std::vector<double>& at(std::string_view label) const {
    auto it = acceptance.find(label);
    if (it == acceptance.end()) throw KeyError("policy has no acceptance vector for group '" + std::string(label) + "'");
    return it->second;
  }

  static Policy constant(const Population& pop, double tau) {
    Policy p;
    for (const auto& g : pop.groups) p.acceptance[g.label] = std::vector<double>(pop.grid.size(), tau);
    return p;
  }

  bool operator==(const Policy&) const = default;
};

inline void validate_policy(const Population& pop, const Policy& policy) {
  for (const auto& g : pop.groups) {
    const auto& tau = policy.at(g.label);
    check_length(tau.size(), pop.grid.size(), "policy of group '" + g.label + "'");
    for (double t : tau)
      if (!(t >= 0.0 && t <= 1.0))
        throw ValidationError("policy of group '" + g.label + "' has entry " + detail::fmt_num(t) + " out of [0,1]");
  }
}

// Accept every bin above `threshold_bin`, the threshold bin itself with
// probability `boundary_acceptance`, and nothing below.
struct ThresholdRule {
  std::size_t threshold_bin = 0;
  double boundary_acceptance = 0.0;

  std::vector<double> expand(std::size_t bins) const {
    if (threshold_bin >= bins)
      throw DomainError("threshold bin " + std::to_string(threshold_bin) + " outside grid of " +
                        std::to_string(bins) + " bins");
    std::vector<double> tau(bins, 0.0);
    tau[threshold_bin] = boundary_acceptance;
    for (std::size_t x = threshold_bin + 1; x < bins; ++x) tau[x] = 1.0;
    return tau;
  }

  bool operator==(const ThresholdRule&) const = default;
};

// One threshold rule per group.
struct RandomizedThresholdPolicy {
  std::map<std::string, ThresholdRule, std::less<>> rules;

  Policy expand(std::size_t bins) const {
    Policy p;
    for (const auto& [label, rule] : rules) p.acceptance[label] = rule.expand(bins);
    return p;
  }
};

namespace detail {

// Threshold rule whose acceptance, weighted by `weights`, sums to `target`
// (a value in [0, sum(weights)]). Mass is taken from the top bin downward.
inline ThresholdRule threshold_for_weighted_target(std::span<const double> weights, double target) {
  const std::size_t n = weights.size();
  if (n == 0) throw DimensionError("empty weight vector");
  if (target <= 0.0) return {n - 1, 0.0};
  double above = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double w = weights[i];
    if (w > 0.0 && above + w >= target) {
      const double b = std::clamp((target - above) / w, 0.0, 1.0);
      return {i, b};
    }
    above += w;
  }
  // target at or beyond the total weight: accept everything
  return {0, 1.0};
}

}  // namespace detail

inline double acceptance_rate(const Policy& policy, const GroupState& group) {
  const auto& tau = policy.at(group.label);
  check_length(tau.size(), group.pmf.size(), "policy of group '" + group.label + "'");
  double r = 0.0;
  for (std::size_t x = 0; x < tau.size(); ++x) r += group.pmf[x] * tau[x];
  return r;
}

// Randomized threshold rule for `group` with acceptance rate exactly `target_rate`.
inline ThresholdRule threshold_policy_for_rate(const GroupState& group, double target_rate) {
  if (!(target_rate >= 0.0 && target_rate <= 1.0))
    throw DomainError("target rate " + detail::fmt_num(target_rate) + " outside [0,1]");
  if (target_rate >= 1.0) return {0, 1.0};
  return detail::threshold_for_weighted_target(group.pmf, target_rate);
}

// Utility contribution of a single group, not yet weighted by its proportion.
inline double group_utility(std::span<const double> tau, const GroupState& group, std::span<const double> rho,
                            const InstitutionModel& inst) {
  check_length(tau.size(), group.pmf.size(), "policy of group '" + group.label + "'");
  check_length(rho.size(), group.pmf.size(), "rho of group '" + group.label + "'");
  double u = 0.0;
  for (std::size_t x = 0; x < tau.size(); ++x) u += group.pmf[x] * tau[x] * inst.expected_gain(rho[x]);
  return u;
}

inline double institution_utility(const Policy& policy, const Population& pop, const OutcomeModel& outcome,
                                  const InstitutionModel& inst) {
  double u = 0.0;
  for (const auto& g : pop.groups)
    u += g.proportion * group_utility(policy.at(g.label), g, outcome.rho_for(g.label), inst);
  return u;
}

}  // namespace dynfair
