#pragma once

#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "dynfair/builtin_scenarios.hpp"
#include "dynfair/scenarios.hpp"

// Scenario files are JSON documents; see scenarios/schema.md for the field
// reference. Errors carry the dotted path of the offending field.

namespace dynfair {

namespace detail {

using nlohmann::json;

class ConfigReader {
 public:
  ScenarioConfig read(const json& root) {
    ScenarioConfig cfg;
    expect_object(root, "");
    check_keys(root, "",
               {"name", "version", "notes", "goal", "population", "outcome", "institution", "policy_rule",
                "metric_groups", "delta_mu_mode", "interventions", "variants", "horizon", "tolerances", "seed",
                "resolution"});
    cfg.name = get<std::string>(root, "name", "");
    if (root.contains("notes")) cfg.notes = notes(root.at("notes"));
    read_goal(req(root, "goal", ""), cfg.goal);
    read_population(req(root, "population", ""), cfg.population);
    read_outcome(req(root, "outcome", ""), cfg.population, cfg.outcome);
    const auto& inst = req(root, "institution", "");
    cfg.institution.u_plus = get<double>(inst, "u_plus", "institution");
    cfg.institution.u_minus = get<double>(inst, "u_minus", "institution");
    read_policy_rule(req(root, "policy_rule", ""), cfg.policy_rule);
    if (root.contains("metric_groups")) {
      const auto mg = as<std::vector<std::string>>(root.at("metric_groups"), "metric_groups");
      if (mg.size() != 2) fail("metric_groups", "expected two group labels");
      cfg.metric_group0 = mg[0];
      cfg.metric_group1 = mg[1];
    }
    if (root.contains("delta_mu_mode")) {
      const auto m = as<std::string>(root.at("delta_mu_mode"), "delta_mu_mode");
      if (m == "group_wide") cfg.delta_mu_mode = DeltaMuMode::GroupWide;
      else if (m == "selected_only") cfg.delta_mu_mode = DeltaMuMode::SelectedOnly;
      else fail("delta_mu_mode", "expected group_wide or selected_only");
    }
    if (root.contains("interventions")) {
      const auto& ivs = root.at("interventions");
      if (!ivs.is_array()) fail("interventions", "expected an array");
      for (std::size_t i = 0; i < ivs.size(); ++i)
        cfg.interventions.push_back(read_intervention(ivs[i], "interventions[" + std::to_string(i) + "]"));
    }
    if (root.contains("variants")) {
      const auto& vs = root.at("variants");
      expect_object(vs, "variants");
      for (const auto& [name, members] : vs.items())
        cfg.variants[name] = as<std::vector<std::string>>(members, "variants." + name);
    }
    const auto horizon = get<long long>(root, "horizon", "");
    if (horizon < 0) fail("horizon", "T must be nonnegative");
    cfg.horizon = static_cast<std::size_t>(horizon);
    if (root.contains("tolerances")) {
      const auto& t = root.at("tolerances");
      check_keys(t, "tolerances", {"regime", "stationarity_eps", "stationarity_window"});
      if (t.contains("regime")) cfg.tolerances.regime = get<double>(t, "regime", "tolerances");
      if (t.contains("stationarity_eps")) cfg.tolerances.stationarity_eps = get<double>(t, "stationarity_eps", "tolerances");
      if (t.contains("stationarity_window"))
        cfg.tolerances.stationarity_window = count(t, "stationarity_window", "tolerances");
    }
    if (root.contains("seed")) cfg.seed = as<std::uint64_t>(root.at("seed"), "seed");
    if (root.contains("resolution")) cfg.resolution = get<double>(root, "resolution", "");
    return cfg;
  }

 private:
  [[noreturn]] static void fail(const std::string& path, const std::string& msg) {
    throw ValidationError(path + ": " + msg);
  }
  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
  static void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  }
  static void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    expect_object(j, path);
    for (const auto& [k, v] : j.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) fail(join(path, k), "unknown field");
    }
  }
  static const json& req(const json& j, const char* key, const std::string& path) {
    expect_object(j, path);
    if (!j.contains(key)) fail(join(path, key), "missing field");
    return j.at(key);
  }
  template <class T>
  static T as(const json& j, const std::string& path) {
    try {
      return j.get<T>();
    } catch (const json::exception&) {
      fail(path, "wrong type");
    }
  }
  template <class T>
  static T get(const json& j, const char* key, const std::string& path) {
    return as<T>(req(j, key, path), join(path, key));
  }
  static std::size_t count(const json& j, const char* key, const std::string& path) {
    const auto v = get<long long>(j, key, path);
    if (v < 0) fail(join(path, key), "must be nonnegative");
    return static_cast<std::size_t>(v);
  }
  static std::string notes(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    std::string out;
    for (const auto& line : as<std::vector<std::string>>(j, "notes")) out += line + "\n";
    return out;
  }

  void read_goal(const json& j, Goal& goal) {
    check_keys(j, "goal", {"label", "metric", "group", "tolerance"});
    goal.label = get<std::string>(j, "label", "goal");
    const auto m = get<std::string>(j, "metric", "goal");
    if (m == "dp_gap") goal.metric = GoalMetric::DpGap;
    else if (m == "eo_gap") goal.metric = GoalMetric::EoGap;
    else if (m == "eodds_gap") goal.metric = GoalMetric::EoddsGap;
    else if (m == "delta_mu") goal.metric = GoalMetric::DeltaMu;
    else fail("goal.metric", "unknown metric '" + m + "'");
    if (goal.metric == GoalMetric::DeltaMu) goal.group = get<std::string>(j, "group", "goal");
    if (j.contains("tolerance")) goal.tolerance = get<double>(j, "tolerance", "goal");
  }

  void read_population(const json& j, Population& pop) {
    check_keys(j, "population", {"grid", "groups"});
    const auto& grid = req(j, "grid", "population");
    if (grid.is_array()) {
      pop.grid.bin_scores = as<std::vector<double>>(grid, "population.grid");
      if (pop.grid.bin_scores.size() < 2) fail("population.grid", "need at least 2 bins");
      pop.grid.bin_width = pop.grid.bin_scores[1] - pop.grid.bin_scores[0];
    } else {
      check_keys(grid, "population.grid", {"first", "width", "bins"});
      pop.grid = ScoreGrid::uniform(get<double>(grid, "first", "population.grid"),
                                    get<double>(grid, "width", "population.grid"),
                                    count(grid, "bins", "population.grid"));
    }
    const auto& groups = req(j, "groups", "population");
    if (!groups.is_array() || groups.empty()) fail("population.groups", "expected a nonempty array");
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const std::string path = "population.groups[" + std::to_string(i) + "]";
      check_keys(groups[i], path, {"label", "proportion", "pmf"});
      GroupState g;
      g.label = get<std::string>(groups[i], "label", path);
      g.proportion = get<double>(groups[i], "proportion", path);
      g.pmf = get<std::vector<double>>(groups[i], "pmf", path);
      pop.groups.push_back(std::move(g));
    }
  }

  void read_outcome(const json& j, const Population& pop, OutcomeModel& out) {
    check_keys(j, "outcome", {"rho", "steps_up", "steps_down"});
    const auto& rho = req(j, "rho", "outcome");
    if (rho.is_array()) {
      out = OutcomeModel::shared(pop.labels(), as<std::vector<double>>(rho, "outcome.rho"), 0, 0);
    } else {
      expect_object(rho, "outcome.rho");
      for (const auto& [label, curve] : rho.items()) out.rho[label] = as<std::vector<double>>(curve, "outcome.rho." + label);
      for (const auto& g : pop.groups)
        if (!out.rho.contains(g.label)) fail("outcome.rho." + g.label, "missing curve for group");
    }
    const auto up = get<long long>(j, "steps_up", "outcome");
    const auto down = get<long long>(j, "steps_down", "outcome");
    if (up < 0) fail("outcome.steps_up", "must be nonnegative");
    if (down < 0) fail("outcome.steps_down", "must be nonnegative");
    out.steps_up = static_cast<int>(up);
    out.steps_down = static_cast<int>(down);
  }

  void read_policy_rule(const json& j, PolicyRuleSpec& spec) {
    check_keys(j, "policy_rule", {"kind", "constraint", "policy", "group", "utility_floor"});
    const auto kind = get<std::string>(j, "kind", "policy_rule");
    if (kind == "fixed") {
      spec.kind = PolicyRuleKind::Fixed;
      const auto& p = req(j, "policy", "policy_rule");
      expect_object(p, "policy_rule.policy");
      for (const auto& [label, tau] : p.items())
        spec.fixed.acceptance[label] = as<std::vector<double>>(tau, "policy_rule.policy." + label);
    } else if (kind == "max_utility") {
      spec.kind = PolicyRuleKind::MaxUtility;
    } else if (kind == "constrained") {
      spec.kind = PolicyRuleKind::Constrained;
      const auto c = get<std::string>(j, "constraint", "policy_rule");
      if (c == "dp") spec.constraint = FairnessConstraint::DemographicParity;
      else if (c == "eo") spec.constraint = FairnessConstraint::EqualOpportunity;
      else fail("policy_rule.constraint", "expected dp or eo");
    } else if (kind == "outcome_optimal") {
      spec.kind = PolicyRuleKind::OutcomeOptimal;
      spec.group = get<std::string>(j, "group", "policy_rule");
      if (j.contains("utility_floor")) {
        const auto& f = j.at("utility_floor");
        spec.utility_floor = f.is_null() ? -std::numeric_limits<double>::infinity()
                                         : as<double>(f, "policy_rule.utility_floor");
      }
    } else {
      fail("policy_rule.kind", "unknown rule '" + kind + "'");
    }
  }

  InterventionRule read_intervention(const json& j, const std::string& path) {
    InterventionRule iv;
    expect_object(j, path);
    iv.name = get<std::string>(j, "name", path);
    const auto kind = get<std::string>(j, "kind", path);
    const auto group = get<std::string>(j, "group", path);
    if (j.contains("active_from")) iv.active_from = count(j, "active_from", path);
    if (j.contains("active_until")) iv.active_until = count(j, "active_until", path);
    if (kind == "quota") {
      check_keys(j, path, {"name", "kind", "group", "active_from", "active_until", "share", "sunset"});
      QuotaRule q{group, get<double>(j, "share", path), 0.0, 1};
      const auto& sunset = req(j, "sunset", path);
      check_keys(sunset, path + ".sunset", {"eps", "window"});
      q.sunset_eps = get<double>(sunset, "eps", path + ".sunset");
      q.sunset_window = count(sunset, "window", path + ".sunset");
      iv.rule = q;
    } else if (kind == "pipeline_investment") {
      check_keys(j, path, {"name", "kind", "group", "active_from", "active_until", "shift"});
      iv.rule = PipelineRule{group, get<double>(j, "shift", path)};
    } else if (kind == "role_model_feedback") {
      check_keys(j, path, {"name", "kind", "group", "active_from", "active_until", "strength"});
      iv.rule = RoleModelRule{group, get<double>(j, "strength", path)};
    } else {
      fail(path + ".kind", "unknown intervention kind '" + kind + "'");
    }
    return iv;
  }
};

}  // namespace detail

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  auto cfg = detail::ConfigReader{}.read(j);
  validate_config(cfg);
  return cfg;
}

inline ScenarioConfig scenario_from_string(std::string_view text, const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + origin + "': malformed scenario file: " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const ValidationError& e) {
    throw ValidationError("'" + origin + "': " + e.what());
  }
}

// Accepts a built-in scenario name or a path to a scenario file.
inline ScenarioConfig load_scenario(const std::string& path_or_name) {
  if (auto text = builtin_scenario_text(path_or_name)) return scenario_from_string(*text, path_or_name);
  std::ifstream in(path_or_name, std::ios::binary);
  if (!in) throw ValidationError("cannot open scenario '" + path_or_name + "' (not a file or built-in name)");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return scenario_from_string(text, path_or_name);
}

}  // namespace dynfair
