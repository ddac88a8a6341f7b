#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dynfair/metrics.hpp"
#include "dynfair/outcome.hpp"
#include "dynfair/policy.hpp"
#include "dynfair/population.hpp"

// One-step feedback model: a selected individual at bin x succeeds with
// probability rho(x) and moves `steps_up` bins up, otherwise `steps_down`
// bins down (clamped at the grid ends). Unselected individuals stay put.

namespace dynfair {

enum class Regime { Improvement, Stagnation, Decline };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Improvement: return "improvement";
    case Regime::Stagnation: return "stagnation";
    case Regime::Decline: return "decline";
  }
  return "?";
}

// GroupWide averages over the whole group (unselected contribute 0);
// SelectedOnly averages over the accepted mass only.
enum class DeltaMuMode { GroupWide, SelectedOnly };

inline double expected_delta(std::size_t bin, std::string_view label, const OutcomeModel& outcome,
                             const ScoreGrid& grid) {
  const auto& rho = outcome.rho_for(label);
  if (bin >= rho.size()) throw DimensionError("bin " + std::to_string(bin) + " outside rho vector");
  const double r = rho[bin];
  return grid.bin_width * (outcome.steps_up * r - outcome.steps_down * (1.0 - r));
}

inline double group_delta_mu(const GroupState& group, const Policy& policy, const OutcomeModel& outcome,
                             const ScoreGrid& grid, DeltaMuMode mode = DeltaMuMode::GroupWide) {
  const auto& tau = policy.at(group.label);
  check_length(group.pmf.size(), grid.size(), "pmf of group '" + group.label + "'");
  check_length(tau.size(), grid.size(), "policy of group '" + group.label + "'");
  check_length(outcome.rho_for(group.label).size(), grid.size(), "rho of group '" + group.label + "'");
  double total = 0.0, selected = 0.0;
  for (std::size_t x = 0; x < grid.size(); ++x) {
    const double a = group.pmf[x] * tau[x];
    total += a * expected_delta(x, group.label, outcome, grid);
    selected += a;
  }
  if (mode == DeltaMuMode::SelectedOnly) return selected > 0.0 ? total / selected : 0.0;
  return total;
}

inline Regime classify_regime(double delta_mu, double tol) {
  if (!std::isfinite(delta_mu)) throw DomainError("delta_mu is not finite");
  if (!(tol > 0.0)) throw DomainError("regime tolerance must be positive");
  if (delta_mu > tol) return Regime::Improvement;
  if (delta_mu < -tol) return Regime::Decline;
  return Regime::Stagnation;
}

// Advances every group's pmf by one decision round. Proportions are unchanged.
inline Population step(const Population& pop, const Policy& policy, const OutcomeModel& outcome) {
  require_valid(pop);
  validate_policy(pop, policy);
  validate_outcome(pop, outcome);
  const std::size_t n = pop.grid.size();
  const auto up = static_cast<std::size_t>(outcome.steps_up);
  const auto down = static_cast<std::size_t>(outcome.steps_down);
  Population next = pop;
  for (auto& g : next.groups) {
    const auto& tau = policy.at(g.label);
    const auto& rho = outcome.rho_for(g.label);
    const auto& pi = pop.group(g.label).pmf;
    std::vector<double> out(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      const double accepted = pi[x] * tau[x];
      out[x] += pi[x] - accepted;
      const double success = accepted * rho[x];
      out[std::min(x + up, n - 1)] += success;
      out[x >= down ? x - down : 0] += accepted - success;
    }
    g.pmf = std::move(out);
  }
  return next;
}

struct StepRecord {
  std::size_t step = 0;
  Population population;
  Policy policy;
  MetricReport metrics;
  std::map<std::string, double, std::less<>> delta_mu;
  std::map<std::string, Regime, std::less<>> regimes;
  // (intervention name, active) in declaration order
  std::vector<std::pair<std::string, bool>> interventions;
  double utility = 0.0;

  bool any_intervention_active() const {
    return std::any_of(interventions.begin(), interventions.end(), [](const auto& p) { return p.second; });
  }
  bool intervention_active(std::string_view name) const {
    for (const auto& [n, a] : interventions)
      if (n == name) return a;
    return false;
  }
};

struct Trajectory {
  std::vector<StepRecord> steps;

  std::size_t size() const noexcept { return steps.size(); }
  const StepRecord& back() const { return steps.back(); }
};

// What the decision process does at a step: the (possibly modified)
// population the decision is made on, the policy applied to it, and the
// activity of any interventions.
struct StepPlan {
  Population state;
  Policy policy;
  std::vector<std::pair<std::string, bool>> interventions;
};

using PolicyRule = std::function<Policy(const Population&, std::size_t step)>;
using Controller = std::function<StepPlan(const Population&, std::size_t step, const Trajectory& history)>;

inline PolicyRule fixed_policy(Policy p) {
  return [p = std::move(p)](const Population&, std::size_t) { return p; };
}

struct SimulationOptions {
  double regime_tol = 1e-9;
  std::size_t max_steps = 100000;
  // pair used for the gap metrics; defaults to the first two groups
  std::string metric_group0, metric_group1;
  DeltaMuMode delta_mu_mode = DeltaMuMode::GroupWide;
};

namespace detail {

inline std::pair<std::string, std::string> metric_pair(const Population& pop, const SimulationOptions& opts) {
  if (!opts.metric_group0.empty() && !opts.metric_group1.empty()) return {opts.metric_group0, opts.metric_group1};
  if (pop.groups.size() >= 2) return {pop.groups[0].label, pop.groups[1].label};
  return {pop.groups[0].label, pop.groups[0].label};
}

}  // namespace detail

inline StepRecord make_record(std::size_t t, StepPlan plan, const OutcomeModel& outcome,
                              const InstitutionModel& inst, const SimulationOptions& opts) {
  require_valid(plan.state);
  validate_policy(plan.state, plan.policy);
  StepRecord rec;
  rec.step = t;
  const auto [a0, a1] = detail::metric_pair(plan.state, opts);
  rec.metrics = evaluate_metrics(plan.state, outcome, plan.policy, a0, a1);
  for (const auto& g : plan.state.groups) {
    const double dmu = group_delta_mu(g, plan.policy, outcome, plan.state.grid, opts.delta_mu_mode);
    rec.delta_mu[g.label] = dmu;
    rec.regimes[g.label] = classify_regime(dmu, opts.regime_tol);
  }
  rec.utility = institution_utility(plan.policy, plan.state, outcome, inst);
  rec.population = std::move(plan.state);
  rec.policy = std::move(plan.policy);
  rec.interventions = std::move(plan.interventions);
  return rec;
}

// Runs T transitions; the trajectory holds T+1 records (states 0..T).
inline Trajectory simulate_controlled(const Population& initial, const Controller& controller,
                                      const OutcomeModel& outcome, const InstitutionModel& inst, std::size_t horizon,
                                      const SimulationOptions& opts = {}) {
  if (horizon > opts.max_steps)
    throw DomainError("horizon " + std::to_string(horizon) + " exceeds maximum " + std::to_string(opts.max_steps));
  if (!(opts.regime_tol > 0.0)) throw DomainError("regime tolerance must be positive");
  require_valid(initial);
  validate_outcome(initial, outcome);
  validate_institution(inst);

  Trajectory traj;
  traj.steps.reserve(horizon + 1);
  Population current = initial;
  for (std::size_t t = 0; t <= horizon; ++t) {
    StepPlan plan;
    try {
      plan = controller(current, t, traj);
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("step " + std::to_string(t) + ": " + e.what());
    }
    traj.steps.push_back(make_record(t, std::move(plan), outcome, inst, opts));
    if (t < horizon) {
      const auto& rec = traj.steps.back();
      current = step(rec.population, rec.policy, outcome);
    }
  }
  return traj;
}

inline Trajectory simulate(const Population& initial, const PolicyRule& rule, const OutcomeModel& outcome,
                           const InstitutionModel& inst, std::size_t horizon, const SimulationOptions& opts = {}) {
  Controller c = [&rule](const Population& pop, std::size_t t, const Trajectory&) {
    return StepPlan{pop, rule(pop, t), {}};
  };
  return simulate_controlled(initial, c, outcome, inst, horizon, opts);
}

// True iff over the last `window` transitions every group pmf moved less
// than `eps` in total variation.
inline bool is_stationary(const Trajectory& traj, std::size_t window, double eps) {
  if (window == 0) throw DomainError("stationarity window must be positive");
  if (traj.size() < window + 1)
    throw DomainError("window " + std::to_string(window) + " longer than trajectory of " +
                      std::to_string(traj.size()) + " states");
  const std::size_t last = traj.size() - 1;
  for (std::size_t t = last - window + 1; t <= last; ++t) {
    const auto& prev = traj.steps[t - 1].population;
    const auto& cur = traj.steps[t].population;
    for (const auto& g : cur.groups)
      if (!(total_variation(prev.group(g.label).pmf, g.pmf) < eps)) return false;
  }
  return true;
}

struct MonteCarloGroupReport {
  std::string group;
  std::size_t samples = 0;
  double acceptance_rate = 0.0;
  double acceptance_rate_se = 0.0;
  double delta_mu = 0.0;
  double delta_mu_se = 0.0;
  double exact_acceptance_rate = 0.0;
  double exact_delta_mu = 0.0;
};

struct MonteCarloReport {
  std::vector<MonteCarloGroupReport> groups;

  const MonteCarloGroupReport& group(std::string_view label) const {
    for (const auto& g : groups)
      if (g.group == label) return g;
    throw KeyError("no Monte Carlo report for group '" + std::string(label) + "'");
  }
};

namespace detail {

// Uniform in [0,1) from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

// Samples `n` individuals per group (bin ~ pi, acceptance ~ tau, outcome ~
// rho) and reports empirical acceptance rate and realized mean score change.
inline MonteCarloReport monte_carlo_validate(const Population& pop, const Policy& policy, const OutcomeModel& outcome,
                                             std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample count must be positive");
  require_valid(pop);
  validate_policy(pop, policy);
  validate_outcome(pop, outcome);
  std::mt19937_64 rng(seed);
  const double c_plus = outcome.c_plus(pop.grid);
  const double c_minus = outcome.c_minus(pop.grid);
  MonteCarloReport report;
  for (const auto& g : pop.groups) {
    const auto& tau = policy.at(g.label);
    const auto& rho = outcome.rho_for(g.label);
    std::vector<double> cdf(g.pmf.size());
    double acc = 0.0;
    for (std::size_t x = 0; x < g.pmf.size(); ++x) cdf[x] = (acc += g.pmf[x]);
    std::size_t last_support = 0;
    for (std::size_t x = 0; x < g.pmf.size(); ++x)
      if (g.pmf[x] > 0.0) last_support = x;

    std::size_t accepted = 0;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = detail::unit_uniform(rng) * acc;
      auto bin = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      bin = std::min(bin, last_support);
      if (detail::unit_uniform(rng) < tau[bin]) {
        ++accepted;
        const double change = detail::unit_uniform(rng) < rho[bin] ? c_plus : c_minus;
        sum += change;
        sum_sq += change * change;
      }
    }
    MonteCarloGroupReport r;
    r.group = g.label;
    r.samples = n;
    const double nn = static_cast<double>(n);
    r.acceptance_rate = static_cast<double>(accepted) / nn;
    r.acceptance_rate_se = std::sqrt(r.acceptance_rate * (1.0 - r.acceptance_rate) / nn);
    r.delta_mu = sum / nn;
    const double var = n > 1 ? std::max(0.0, (sum_sq - nn * r.delta_mu * r.delta_mu) / (nn - 1.0)) : 0.0;
    r.delta_mu_se = std::sqrt(var / nn);
    r.exact_acceptance_rate = acceptance_rate(policy, g);
    r.exact_delta_mu = group_delta_mu(g, policy, outcome, pop.grid);
    report.groups.push_back(std::move(r));
  }
  return report;
}

}  // namespace dynfair
