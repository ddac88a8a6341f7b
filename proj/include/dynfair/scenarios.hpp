#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "dynfair/dynamics.hpp"
#include "dynfair/metrics.hpp"
#include "dynfair/optimize.hpp"

// A scenario declares (1) an ethical goal and the metric that formalises it,
// (2) the decision rule, and (3) the downstream model (population, outcome
// model, interventions, horizon) used to judge the goal over time.

namespace dynfair {

enum class GoalMetric { DpGap, EoGap, EoddsGap, DeltaMu };

inline const char* to_string(GoalMetric m) {
  switch (m) {
    case GoalMetric::DpGap: return "dp_gap";
    case GoalMetric::EoGap: return "eo_gap";
    case GoalMetric::EoddsGap: return "eodds_gap";
    case GoalMetric::DeltaMu: return "delta_mu";
  }
  return "?";
}

struct Goal {
  std::string label;
  GoalMetric metric = GoalMetric::DpGap;
  std::string group;        // target group, delta_mu only
  double tolerance = 0.01;  // gaps: met iff value <= tol; delta_mu: met iff value >= -tol
};

enum class PolicyRuleKind { Fixed, MaxUtility, Constrained, OutcomeOptimal };

struct PolicyRuleSpec {
  PolicyRuleKind kind = PolicyRuleKind::MaxUtility;
  Policy fixed;                                                     // Fixed
  FairnessConstraint constraint = FairnessConstraint::DemographicParity;  // Constrained
  std::string group;                                                // OutcomeOptimal target
  double utility_floor = -std::numeric_limits<double>::infinity();  // OutcomeOptimal
};

// Minimum share q of the protected group among the accepted. Retired for good
// once the realized share stays within `sunset_eps` of q for `sunset_window`
// consecutive active steps.
struct QuotaRule {
  std::string group;
  double share = 0.0;
  double sunset_eps = 0.0;
  std::size_t sunset_window = 1;
};

// Before each step, fraction `shift` of every non-top bin's mass moves up one bin.
struct PipelineRule {
  std::string group;
  double shift = 0.0;
};

// The group's applicant proportion is its base proportion times
// (1 + strength * r), r = its share among the previous step's accepted.
struct RoleModelRule {
  std::string group;
  double strength = 0.0;
};

struct InterventionRule {
  std::string name;
  std::variant<QuotaRule, PipelineRule, RoleModelRule> rule;
  std::size_t active_from = 0;
  std::optional<std::size_t> active_until;  // exclusive

  const std::string& group() const {
    return std::visit([](const auto& r) -> const std::string& { return r.group; }, rule);
  }
  bool scheduled(std::size_t t) const { return t >= active_from && (!active_until || t < *active_until); }
};

struct Tolerances {
  double regime = 1e-9;
  double stationarity_eps = 1e-6;
  std::size_t stationarity_window = 5;
};

struct ScenarioConfig {
  std::string name;
  std::string notes;
  Goal goal;
  Population population;
  OutcomeModel outcome;
  InstitutionModel institution;
  PolicyRuleSpec policy_rule;
  std::vector<InterventionRule> interventions;
  std::map<std::string, std::vector<std::string>> variants;  // named subsets of `interventions`
  std::size_t horizon = 0;
  Tolerances tolerances;
  std::uint64_t seed = 0;
  double resolution = kDefaultResolution;
  std::string metric_group0, metric_group1;
  DeltaMuMode delta_mu_mode = DeltaMuMode::GroupWide;

  SimulationOptions simulation_options() const {
    SimulationOptions o;
    o.regime_tol = tolerances.regime;
    o.metric_group0 = metric_group0;
    o.metric_group1 = metric_group1;
    o.delta_mu_mode = delta_mu_mode;
    return o;
  }
};

inline void validate_config(const ScenarioConfig& cfg) {
  auto fail = [](const std::string& path, const std::string& msg) { throw ValidationError(path + ": " + msg); };
  const auto& pop = cfg.population;
  if (auto r = validate_population(pop); !r.ok()) fail("population", r.to_string());
  try {
    validate_outcome(pop, cfg.outcome);
  } catch (const Error& e) {
    fail("outcome", e.what());
  }
  try {
    validate_institution(cfg.institution);
  } catch (const Error& e) {
    fail("institution", e.what());
  }
  auto require_group = [&](const std::string& path, const std::string& label) {
    if (!pop.has_group(label)) fail(path, "unknown group '" + label + "'");
  };
  if (cfg.goal.metric == GoalMetric::DeltaMu) require_group("goal.group", cfg.goal.group);
  if (!(cfg.goal.tolerance >= 0.0)) fail("goal.tolerance", "must be nonnegative");
  if (cfg.metric_group0.empty() != cfg.metric_group1.empty()) fail("metric_groups", "give both groups or neither");
  if (!cfg.metric_group0.empty()) {
    require_group("metric_groups[0]", cfg.metric_group0);
    require_group("metric_groups[1]", cfg.metric_group1);
  }
  if (cfg.goal.metric != GoalMetric::DeltaMu && pop.groups.size() < 2)
    fail("goal.metric", "gap metrics need at least two groups");
  switch (cfg.policy_rule.kind) {
    case PolicyRuleKind::Fixed:
      try {
        validate_policy(pop, cfg.policy_rule.fixed);
      } catch (const Error& e) {
        fail("policy_rule.policy", e.what());
      }
      break;
    case PolicyRuleKind::Constrained:
      if (pop.groups.size() != 2) fail("policy_rule", "constrained rules need exactly two groups");
      break;
    case PolicyRuleKind::OutcomeOptimal:
      require_group("policy_rule.group", cfg.policy_rule.group);
      break;
    case PolicyRuleKind::MaxUtility:
      break;
  }
  if (!(cfg.resolution > 0.0 && cfg.resolution <= 1.0)) fail("resolution", "must lie in (0,1]");
  if (!(cfg.tolerances.regime > 0.0)) fail("tolerances.regime", "must be positive");
  if (!(cfg.tolerances.stationarity_eps > 0.0)) fail("tolerances.stationarity_eps", "must be positive");
  if (cfg.tolerances.stationarity_window == 0) fail("tolerances.stationarity_window", "must be positive");
  if (cfg.horizon > SimulationOptions{}.max_steps) fail("horizon", "exceeds maximum");

  std::vector<std::string> names;
  for (std::size_t i = 0; i < cfg.interventions.size(); ++i) {
    const auto& iv = cfg.interventions[i];
    const std::string path = "interventions[" + std::to_string(i) + "]";
    if (iv.name.empty()) fail(path + ".name", "must not be empty");
    if (std::find(names.begin(), names.end(), iv.name) != names.end()) fail(path + ".name", "duplicate '" + iv.name + "'");
    names.push_back(iv.name);
    require_group(path + ".group", iv.group());
    if (iv.active_until && *iv.active_until < iv.active_from) fail(path + ".active_until", "before active_from");
    if (const auto* q = std::get_if<QuotaRule>(&iv.rule)) {
      if (!(q->share >= 0.0 && q->share <= 1.0)) fail(path + ".share", "q out of [0,1]");
      if (!(q->sunset_eps >= 0.0)) fail(path + ".sunset.eps", "must be nonnegative");
      if (q->sunset_window == 0) fail(path + ".sunset.window", "must be positive");
    } else if (const auto* p = std::get_if<PipelineRule>(&iv.rule)) {
      if (!(p->shift >= 0.0 && p->shift <= 1.0)) fail(path + ".shift", "s out of [0,1]");
    } else if (const auto* r = std::get_if<RoleModelRule>(&iv.rule)) {
      if (!(r->strength >= 0.0 && r->strength <= 1.0)) fail(path + ".strength", "alpha out of [0,1]");
    }
  }
  for (const auto& [vname, members] : cfg.variants)
    for (const auto& m : members)
      if (std::find(names.begin(), names.end(), m) == names.end())
        fail("variants." + vname, "unknown intervention '" + m + "'");
}

// Goal metric read off a trajectory record; empty when undefined there.
inline std::optional<double> goal_value(const Goal& goal, const StepRecord& rec) {
  switch (goal.metric) {
    case GoalMetric::DpGap: return rec.metrics.dp_gap;
    case GoalMetric::EoGap: return rec.metrics.eo_gap;
    case GoalMetric::EoddsGap: return rec.metrics.eodds_gap;
    case GoalMetric::DeltaMu: {
      auto it = rec.delta_mu.find(goal.group);
      if (it == rec.delta_mu.end()) return std::nullopt;
      return it->second;
    }
  }
  return std::nullopt;
}

inline bool goal_met(const Goal& goal, std::optional<double> value) {
  if (!value) return false;
  if (goal.metric == GoalMetric::DeltaMu) return *value >= -goal.tolerance;
  return *value <= goal.tolerance;
}

// Share of `group` among all accepted individuals; empty if nobody is accepted.
inline std::optional<double> accepted_share(const Population& pop, const Policy& policy, std::string_view group) {
  double total = 0.0, mine = 0.0;
  for (const auto& g : pop.groups) {
    const double a = g.proportion * acceptance_rate(policy, g);
    total += a;
    if (g.label == group) mine += a;
  }
  if (!(total > 0.0)) return std::nullopt;
  return mine / total;
}

// Moves fraction `shift` of each non-top bin's mass one bin up.
inline std::vector<double> pipeline_shift(const std::vector<double>& pmf, double shift) {
  std::vector<double> out(pmf);
  for (std::size_t x = 0; x + 1 < pmf.size(); ++x) {
    const double moved = pmf[x] * shift;
    out[x] -= moved;
    out[x + 1] += moved;
  }
  return out;
}

// Raises the protected group's acceptance until its share among the
// accepted reaches q. When even full acceptance falls short, the other
// groups' acceptance is scaled down instead.
inline Policy enforce_quota(const Population& pop, Policy policy, const QuotaRule& quota) {
  const auto& w = pop.group(quota.group);
  if (!(w.proportion > 0.0) || !(detail::kahan_sum(w.pmf) > 0.0))
    throw InfeasibleError("quota group '" + quota.group + "' has zero mass");
  double others = 0.0;
  for (const auto& g : pop.groups)
    if (g.label != w.label) others += g.proportion * acceptance_rate(policy, g);
  const double own_rate = acceptance_rate(policy, w);
  const double own = w.proportion * own_rate;
  if (!(own + others > 0.0)) return policy;  // nobody accepted: nothing to share
  if (own / (own + others) >= quota.share) return policy;

  const double q = quota.share;
  const double needed = q >= 1.0 ? 1.0 : q * others / ((1.0 - q) * w.proportion);
  if (needed <= 1.0 && q < 1.0) {
    policy.acceptance[w.label] = threshold_policy_for_rate(w, std::max(needed, own_rate)).expand(pop.grid.size());
    return policy;
  }
  policy.acceptance[w.label] = std::vector<double>(pop.grid.size(), 1.0);
  const double full = w.proportion * acceptance_rate(policy, w);
  const double allowed = q >= 1.0 ? 0.0 : (1.0 - q) * full / q;
  const double scale = others > 0.0 ? std::min(1.0, allowed / others) : 0.0;
  for (auto& [label, tau] : policy.acceptance) {
    if (label == w.label) continue;
    for (auto& t : tau) t *= scale;
  }
  return policy;
}

inline PolicyRule make_policy_rule(const ScenarioConfig& cfg) {
  const auto& spec = cfg.policy_rule;
  const OutcomeModel& outcome = cfg.outcome;
  const InstitutionModel& inst = cfg.institution;
  const double r = cfg.resolution;
  switch (spec.kind) {
    case PolicyRuleKind::Fixed: return fixed_policy(spec.fixed);
    case PolicyRuleKind::MaxUtility:
      return [outcome, inst](const Population& p, std::size_t) { return max_utility_policy(p, outcome, inst); };
    case PolicyRuleKind::Constrained:
      return [outcome, inst, r, c = spec.constraint](const Population& p, std::size_t) {
        return constrained_policy(p, outcome, inst, c, r).policy;
      };
    case PolicyRuleKind::OutcomeOptimal:
      return [outcome, inst, r, g = spec.group, floor = spec.utility_floor](const Population& p, std::size_t) {
        return outcome_optimal_policy(p, outcome, inst, g, floor, r).policy;
      };
  }
  throw DomainError("unknown policy rule");
}

// Runs the scenario's decision process with its interventions over the horizon.
inline Trajectory run_scenario(const ScenarioConfig& cfg) {
  validate_config(cfg);
  const PolicyRule base_rule = make_policy_rule(cfg);
  if (cfg.interventions.empty())
    return simulate(cfg.population, base_rule, cfg.outcome, cfg.institution, cfg.horizon, cfg.simulation_options());

  std::vector<double> base_proportions;
  for (const auto& g : cfg.population.groups) base_proportions.push_back(g.proportion);
  const std::size_t n_iv = cfg.interventions.size();
  std::vector<std::size_t> sunset_streak(n_iv, 0);
  std::vector<char> retired(n_iv, 0);

  Controller controller = [&](const Population& current, std::size_t t, const Trajectory& history) {
    const StepRecord* prev = t > 0 ? &history.steps[t - 1] : nullptr;
    auto prev_share = [&](const std::string& group) -> std::optional<double> {
      if (!prev) return std::nullopt;
      return accepted_share(prev->population, prev->policy, group);
    };

    std::vector<char> active(n_iv, 0);
    for (std::size_t i = 0; i < n_iv; ++i) {
      const auto& iv = cfg.interventions[i];
      if (const auto* q = std::get_if<QuotaRule>(&iv.rule); q && prev && prev->intervention_active(iv.name)) {
        const auto r = prev_share(q->group);
        sunset_streak[i] = (r && std::abs(*r - q->share) <= q->sunset_eps) ? sunset_streak[i] + 1 : 0;
        if (sunset_streak[i] >= q->sunset_window) retired[i] = 1;
      }
      active[i] = iv.scheduled(t) && !retired[i];
    }

    Population state = current;
    for (std::size_t k = 0; k < state.groups.size(); ++k) state.groups[k].proportion = base_proportions[k];
    bool reweighted = false;
    for (std::size_t i = 0; i < n_iv; ++i) {
      if (!active[i]) continue;
      const auto& iv = cfg.interventions[i];
      if (const auto* p = std::get_if<PipelineRule>(&iv.rule)) {
        auto& g = state.group(p->group);
        g.pmf = pipeline_shift(g.pmf, p->shift);
      } else if (const auto* rm = std::get_if<RoleModelRule>(&iv.rule)) {
        state.group(rm->group).proportion *= 1.0 + rm->strength * prev_share(rm->group).value_or(0.0);
        reweighted = true;
      }
    }
    if (reweighted) {
      double total = 0.0;
      for (const auto& g : state.groups) total += g.proportion;
      for (auto& g : state.groups) g.proportion /= total;
    }

    Policy policy = base_rule(state, t);
    for (std::size_t i = 0; i < n_iv; ++i)
      if (active[i])
        if (const auto* q = std::get_if<QuotaRule>(&cfg.interventions[i].rule))
          policy = enforce_quota(state, std::move(policy), *q);

    StepPlan plan{std::move(state), std::move(policy), {}};
    for (std::size_t i = 0; i < n_iv; ++i) plan.interventions.emplace_back(cfg.interventions[i].name, active[i] != 0);
    return plan;
  };
  return simulate_controlled(cfg.population, controller, cfg.outcome, cfg.institution, cfg.horizon,
                             cfg.simulation_options());
}

struct Variant {
  std::string name;
  std::vector<std::string> interventions;
};

// Copy of `cfg` keeping only the named interventions (in declaration order).
inline ScenarioConfig with_interventions(const ScenarioConfig& cfg, const std::vector<std::string>& names) {
  for (const auto& n : names)
    if (std::none_of(cfg.interventions.begin(), cfg.interventions.end(),
                     [&](const InterventionRule& iv) { return iv.name == n; }))
      throw ValidationError("unknown intervention '" + n + "'");
  ScenarioConfig out = cfg;
  out.interventions.clear();
  out.variants.clear();
  for (const auto& iv : cfg.interventions)
    if (std::find(names.begin(), names.end(), iv.name) != names.end()) out.interventions.push_back(iv);
  return out;
}

// Resolves a variant token: "none", a named variant from the config, or
// intervention names joined by '+'.
inline Variant resolve_variant(const ScenarioConfig& cfg, const std::string& token) {
  if (token == "none") return {token, {}};
  if (auto it = cfg.variants.find(token); it != cfg.variants.end()) return {token, it->second};
  Variant v{token, {}};
  std::size_t start = 0;
  while (start <= token.size()) {
    const auto end = std::min(token.find('+', start), token.size());
    v.interventions.push_back(token.substr(start, end - start));
    start = end + 1;
  }
  with_interventions(cfg, v.interventions);  // validates names
  return v;
}

struct ComparisonRow {
  std::string variant;
  std::optional<double> final_goal_value;
  std::optional<std::size_t> steps_to_goal;
  bool persists_after_sunset = false;
  std::vector<std::pair<std::string, double>> final_delta_mu;  // population group order
};

struct ComparisonTable {
  std::vector<std::string> groups;
  std::vector<ComparisonRow> rows;

  const ComparisonRow& row(std::string_view variant) const {
    for (const auto& r : rows)
      if (r.variant == variant) return r;
    throw KeyError("no comparison row for variant '" + std::string(variant) + "'");
  }
};

// The goal persists after sunset iff every quota of the variant was retired,
// by its sunset rule or its schedule (at step s, the last such retirement), and the goal holds on each of the
// final `stationarity_window`+1 states, all of which come after s. A variant
// without quotas only needs the final-window condition.
inline bool goal_persists_after_sunset(const ScenarioConfig& cfg, const Trajectory& traj) {
  std::size_t last_retirement = 0;
  for (const auto& iv : cfg.interventions) {
    if (!std::holds_alternative<QuotaRule>(iv.rule)) continue;
    std::optional<std::size_t> retired_at;
    bool was_active = false;
    for (const auto& rec : traj.steps) {
      const bool a = rec.intervention_active(iv.name);
      if (was_active && !a) {
        retired_at = rec.step;
        break;
      }
      was_active = was_active || a;
    }
    if (!retired_at) return false;
    last_retirement = std::max(last_retirement, *retired_at);
  }
  const std::size_t k = cfg.tolerances.stationarity_window;
  const std::size_t last = traj.size() - 1;
  if (last < k || last - k < last_retirement) return false;
  for (std::size_t t = last - k; t <= last; ++t)
    if (!goal_met(cfg.goal, goal_value(cfg.goal, traj.steps[t]))) return false;
  return true;
}

inline ComparisonRow summarize_variant(const ScenarioConfig& variant_cfg, const std::string& name,
                                       const Trajectory& traj) {
  ComparisonRow row;
  row.variant = name;
  row.final_goal_value = goal_value(variant_cfg.goal, traj.back());
  for (const auto& rec : traj.steps) {
    if (goal_met(variant_cfg.goal, goal_value(variant_cfg.goal, rec))) {
      row.steps_to_goal = rec.step;
      break;
    }
  }
  row.persists_after_sunset = goal_persists_after_sunset(variant_cfg, traj);
  for (const auto& g : variant_cfg.population.groups) row.final_delta_mu.emplace_back(g.label, traj.back().delta_mu.at(g.label));
  return row;
}

inline ComparisonTable compare_interventions(const ScenarioConfig& cfg, const std::vector<Variant>& variants) {
  if (variants.size() < 2) throw DomainError("comparison needs at least two variants");
  ComparisonTable table;
  table.groups = cfg.population.labels();
  for (const auto& v : variants) {
    const auto vc = with_interventions(cfg, v.interventions);
    table.rows.push_back(summarize_variant(vc, v.name, run_scenario(vc)));
  }
  return table;
}

struct SweepReport {
  std::vector<double> values;  // final goal value per draw
  double min = 0.0, max = 0.0, spread = 0.0;
  bool unreliable = false;  // spread > 10 * eps
};

// Mixes pmf with a random pmf at weight eps, so the TV distance to the
// original is at most eps.
inline std::vector<double> perturb_pmf(const std::vector<double>& pmf, double eps, std::mt19937_64& rng) {
  std::vector<double> noise(pmf.size());
  double total = 0.0;
  for (auto& v : noise) total += (v = 1.0 - detail::unit_uniform(rng));
  const double w = std::min(eps, 1.0);
  std::vector<double> out(pmf.size());
  double s = 0.0;
  for (std::size_t x = 0; x < pmf.size(); ++x) s += (out[x] = (1.0 - w) * pmf[x] + w * noise[x] / total);
  for (auto& v : out) v /= s;
  return out;
}

inline SweepReport sensitivity_sweep(const ScenarioConfig& cfg, double eps, std::size_t draws, std::uint64_t seed,
                                     std::size_t jobs = 1) {
  if (!(eps >= 0.0)) throw DomainError("perturbation size must be nonnegative");
  if (draws == 0) throw DomainError("need at least one draw");
  validate_config(cfg);
  std::mt19937_64 rng(seed);
  std::vector<ScenarioConfig> configs;
  configs.reserve(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    ScenarioConfig c = cfg;
    for (auto& g : c.population.groups) g.pmf = eps > 0.0 ? perturb_pmf(g.pmf, eps, rng) : g.pmf;
    configs.push_back(std::move(c));
  }
  auto run_one = [&](std::size_t d) {
    const auto traj = run_scenario(configs[d]);
    const auto v = goal_value(cfg.goal, traj.back());
    if (!v) throw ValidationError("goal metric undefined at the final step of draw " + std::to_string(d));
    return *v;
  };
  SweepReport rep;
  rep.values.resize(draws);
  jobs = std::max<std::size_t>(1, std::min(jobs, draws));
  if (jobs == 1) {
    for (std::size_t d = 0; d < draws; ++d) rep.values[d] = run_one(d);
  } else {
    std::vector<std::future<void>> workers;
    for (std::size_t j = 0; j < jobs; ++j)
      workers.push_back(std::async(std::launch::async, [&, j] {
        for (std::size_t d = j; d < draws; d += jobs) rep.values[d] = run_one(d);
      }));
    for (auto& w : workers) w.get();
  }
  rep.min = *std::min_element(rep.values.begin(), rep.values.end());
  rep.max = *std::max_element(rep.values.begin(), rep.values.end());
  rep.spread = rep.max - rep.min;
  rep.unreliable = rep.spread > 10.0 * eps;
  return rep;
}

}  // namespace dynfair
