#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dynfair/outcome.hpp"
#include "dynfair/policy.hpp"
#include "dynfair/population.hpp"

// Observational fairness metrics, evaluated exactly over the discrete model.
//
// The decision F is Bernoulli(tau_k(x)) and the label Y is Bernoulli(rho_k(x)),
// conditionally independent given (group k, bin x). Hence
//   p(F=1 | A=k)        = sum_x pi_k tau_k
//   p(F=1 | A=k, Y=1)   = sum_x pi_k tau_k rho_k / sum_x pi_k rho_k
//   p(F=1 | A=k, Y=0)   = sum_x pi_k tau_k (1-rho_k) / sum_x pi_k (1-rho_k)

namespace dynfair {

struct GroupRates {
  double acceptance = 0.0;
  std::optional<double> true_positive;   // empty when the group has no qualified mass
  std::optional<double> false_positive;  // empty when the group has no unqualified mass
};

struct MetricReport {
  std::string group0, group1;
  std::map<std::string, GroupRates, std::less<>> rates;
  double dp_gap = 0.0;
  std::optional<double> eo_gap;
  std::optional<double> eodds_gap;
};

namespace detail {

struct GroupView {
  const GroupState& group;
  const std::vector<double>& tau;
  const std::vector<double>& rho;
};

inline GroupView view(const Population& pop, const OutcomeModel& outcome, const Policy& policy,
                      std::string_view label) {
  const auto& g = pop.group(label);
  GroupView v{g, policy.at(label), outcome.rho_for(label)};
  check_length(v.tau.size(), g.pmf.size(), "policy of group '" + g.label + "'");
  check_length(v.rho.size(), g.pmf.size(), "rho of group '" + g.label + "'");
  return v;
}

// p(F=1 | A=k, Y=y)
inline double conditional_acceptance(const GroupView& v, bool qualified) {
  double num = 0.0, den = 0.0;
  for (std::size_t x = 0; x < v.tau.size(); ++x) {
    const double w = v.group.pmf[x] * (qualified ? v.rho[x] : 1.0 - v.rho[x]);
    num += w * v.tau[x];
    den += w;
  }
  if (!(den > 0.0)) throw UndefinedConditionalError(v.group.label, qualified ? "Y=1" : "Y=0");
  return std::clamp(num / den, 0.0, 1.0);
}

}  // namespace detail

inline double true_positive_rate(const Population& pop, const OutcomeModel& outcome, const Policy& policy,
                                 std::string_view label) {
  return detail::conditional_acceptance(detail::view(pop, outcome, policy, label), true);
}

inline double false_positive_rate(const Population& pop, const OutcomeModel& outcome, const Policy& policy,
                                  std::string_view label) {
  return detail::conditional_acceptance(detail::view(pop, outcome, policy, label), false);
}

inline double demographic_parity_gap(const Population& pop, const OutcomeModel& outcome, const Policy& policy,
                                     std::string_view a0, std::string_view a1) {
  const auto v0 = detail::view(pop, outcome, policy, a0);
  const auto v1 = detail::view(pop, outcome, policy, a1);
  return std::abs(acceptance_rate(policy, v0.group) - acceptance_rate(policy, v1.group));
}

inline double equal_opportunity_gap(const Population& pop, const OutcomeModel& outcome, const Policy& policy,
                                    std::string_view a0, std::string_view a1) {
  const auto v0 = detail::view(pop, outcome, policy, a0);
  const auto v1 = detail::view(pop, outcome, policy, a1);
  return std::abs(detail::conditional_acceptance(v0, true) - detail::conditional_acceptance(v1, true));
}

inline double equalized_odds_gap(const Population& pop, const OutcomeModel& outcome, const Policy& policy,
                                 std::string_view a0, std::string_view a1) {
  const auto v0 = detail::view(pop, outcome, policy, a0);
  const auto v1 = detail::view(pop, outcome, policy, a1);
  const double tpr_gap = std::abs(detail::conditional_acceptance(v0, true) - detail::conditional_acceptance(v1, true));
  const double fpr_gap =
      std::abs(detail::conditional_acceptance(v0, false) - detail::conditional_acceptance(v1, false));
  return std::max(tpr_gap, fpr_gap);
}

// Full report for the pair (a0, a1). Conditionals on empty events are left
// empty instead of throwing so that degenerate simulation steps can be recorded.
inline MetricReport evaluate_metrics(const Population& pop, const OutcomeModel& outcome, const Policy& policy,
                                     std::string_view a0, std::string_view a1) {
  MetricReport r;
  r.group0 = a0;
  r.group1 = a1;
  for (const auto& g : pop.groups) {
    const auto v = detail::view(pop, outcome, policy, g.label);
    GroupRates gr;
    gr.acceptance = acceptance_rate(policy, g);
    try {
      gr.true_positive = detail::conditional_acceptance(v, true);
    } catch (const UndefinedConditionalError&) {
    }
    try {
      gr.false_positive = detail::conditional_acceptance(v, false);
    } catch (const UndefinedConditionalError&) {
    }
    r.rates[g.label] = gr;
  }
  const auto& r0 = r.rates.at(r.group0);
  const auto& r1 = r.rates.at(r.group1);
  r.dp_gap = std::abs(r0.acceptance - r1.acceptance);
  if (r0.true_positive && r1.true_positive) {
    r.eo_gap = std::abs(*r0.true_positive - *r1.true_positive);
    if (r0.false_positive && r1.false_positive)
      r.eodds_gap = std::max(*r.eo_gap, std::abs(*r0.false_positive - *r1.false_positive));
  }
  return r;
}

// An individual is identified by (group, bin).
struct Individual {
  std::string group;
  std::size_t bin = 0;
};

struct IndividualFairnessViolation {
  Individual first, second;
  double slack = 0.0;  // D - L*d, positive
};

// Checks D(F(x1), F(x2)) <= L*|x1 - x2| with D the absolute difference of
// acceptance probabilities.
inline std::vector<IndividualFairnessViolation> individual_fairness_violations(
    const Population& pop, const Policy& policy, double lipschitz,
    const std::vector<std::pair<Individual, Individual>>& pairs) {
  if (!(lipschitz > 0.0)) throw DomainError("Lipschitz constant must be positive");
  std::vector<IndividualFairnessViolation> out;
  for (const auto& [i1, i2] : pairs) {
    const auto& t1 = policy.at(i1.group);
    const auto& t2 = policy.at(i2.group);
    if (i1.bin >= pop.grid.size() || i2.bin >= pop.grid.size() || i1.bin >= t1.size() || i2.bin >= t2.size())
      throw DimensionError("individual bin outside grid");
    const double output_distance = std::abs(t1[i1.bin] - t2[i2.bin]);
    const double input_distance = lipschitz * std::abs(pop.grid.bin_scores[i1.bin] - pop.grid.bin_scores[i2.bin]);
    if (output_distance > input_distance + 1e-12) out.push_back({i1, i2, output_distance - input_distance});
  }
  return out;
}

// True iff the decision is a function of score alone.
inline bool unawareness_check(const Policy& policy) {
  if (policy.acceptance.size() < 2) throw DomainError("unawareness check needs a policy over at least two groups");
  const auto& ref = policy.acceptance.begin()->second;
  for (const auto& [label, tau] : policy.acceptance) {
    if (tau.size() != ref.size()) return false;
    for (std::size_t x = 0; x < tau.size(); ++x)
      if (std::abs(tau[x] - ref[x]) > 1e-12) return false;
  }
  return true;
}

}  // namespace dynfair
