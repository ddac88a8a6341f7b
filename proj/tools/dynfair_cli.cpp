// Command-line front end: static metrics, simulation, policy optimization,
// causal checks, intervention comparison and sensitivity sweeps.

#include <cstdint>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynfair/dynfair.hpp"

namespace {

using namespace dynfair;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
  } else {
    csv::write_file_atomic(out_path, content);
  }
}

std::string policy_table(const Population& pop, const Policy& policy) {
  std::string out = "group,bin,score,acceptance\n";
  for (const auto& g : pop.groups) {
    const auto& tau = policy.at(g.label);
    for (std::size_t x = 0; x < tau.size(); ++x)
      out += g.label + "," + std::to_string(x) + "," + csv::num(pop.grid.bin_scores[x]) + "," + csv::num(tau[x]) + "\n";
  }
  return out;
}

struct Args {
  std::string scenario, out, model, check, given, proxy, resolving, sources, targets, variants, constraint = "none",
      group;
  std::size_t steps = 0, draws = 1, jobs = 1;
  double resolution = kDefaultResolution, eps = 0.0, floor = -std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};

int cmd_metrics(const Args& a) {
  auto cfg = load_scenario(a.scenario);
  cfg.horizon = 0;
  const auto traj = run_scenario(cfg);
  const auto& rec = traj.back();
  emit(a.out, csv::metric_report(rec.metrics, rec.population, rec.utility));
  return 0;
}

int cmd_simulate(const Args& a, bool steps_given) {
  auto cfg = load_scenario(a.scenario);
  if (steps_given) cfg.horizon = a.steps;
  emit(a.out, csv::trajectory(run_scenario(cfg)));
  return 0;
}

int cmd_optimize(const Args& a) {
  const auto cfg = load_scenario(a.scenario);
  const auto& pop = cfg.population;
  Policy policy;
  std::string header = "# constraint=" + a.constraint + " resolution=" + csv::num(a.resolution);
  if (a.constraint == "none") {
    policy = max_utility_policy(pop, cfg.outcome, cfg.institution);
  } else if (a.constraint == "dp" || a.constraint == "eo") {
    const auto c = a.constraint == "dp" ? FairnessConstraint::DemographicParity : FairnessConstraint::EqualOpportunity;
    const auto res = constrained_policy(pop, cfg.outcome, cfg.institution, c, a.resolution);
    policy = res.policy;
    header += " rate=" + csv::num(res.rate);
  } else if (a.constraint == "outcome") {
    std::string target = a.group;
    if (target.empty()) target = cfg.goal.metric == GoalMetric::DeltaMu ? cfg.goal.group : pop.groups.back().label;
    const auto res = outcome_optimal_policy(pop, cfg.outcome, cfg.institution, target, a.floor, a.resolution);
    policy = res.policy;
    header += " group=" + target + " rate=" + csv::num(res.target_rate);
  } else {
    throw ValidationError("--constraint must be one of dp, eo, none, outcome");
  }
  const auto opts = cfg.simulation_options();
  const auto [a0, a1] = detail::metric_pair(pop, opts);
  const auto report = evaluate_metrics(pop, cfg.outcome, policy, a0, a1);
  const double utility = institution_utility(policy, pop, cfg.outcome, cfg.institution);
  header += " utility=" + csv::num(utility);
  std::string dmu = "group,delta_mu,regime\n";
  for (const auto& g : pop.groups) {
    const double d = group_delta_mu(g, policy, cfg.outcome, pop.grid, cfg.delta_mu_mode);
    dmu += g.label + "," + csv::num(d) + "," + to_string(classify_regime(d, cfg.tolerances.regime)) + "\n";
  }
  emit(a.out, header + "\n" + policy_table(pop, policy) + "\n" + csv::metric_report(report, pop, utility) + "\n" + dmu);
  return 0;
}

int cmd_causal(const Args& a) {
  const auto model = causal::load_causal_model(a.model);
  std::string out = "check,result\n";
  if (a.check == "dsep") {
    const auto sources = a.sources.empty() ? std::vector<std::string>{model.protected_node} : split_list(a.sources);
    const auto targets = a.targets.empty() ? std::vector<std::string>{model.outcome_node} : split_list(a.targets);
    out += std::string("dsep,") + (causal::d_separated(model, sources, targets, split_list(a.given)) ? "true" : "false") + "\n";
  } else if (a.check == "cf") {
    out += "cf," + csv::num(causal::counterfactual_fairness_gap(model)) + "\n";
  } else if (a.check == "unresolved") {
    out += std::string("unresolved,") + (causal::unresolved_discrimination(model, split_list(a.resolving)) ? "true" : "false") +
           "\n";
  } else if (a.check == "proxy") {
    if (a.proxy.empty()) throw ValidationError("--check proxy needs --proxy");
    out += "proxy," + csv::num(causal::proxy_discrimination_gap(model, a.proxy)) + "\n";
  } else {
    throw ValidationError("--check must be one of dsep, cf, unresolved, proxy");
  }
  emit(a.out, out);
  return 0;
}

int cmd_compare(const Args& a) {
  const auto cfg = load_scenario(a.scenario);
  std::vector<Variant> variants;
  for (const auto& token : split_list(a.variants)) variants.push_back(resolve_variant(cfg, token));
  emit(a.out, csv::comparison(compare_interventions(cfg, variants)));
  return 0;
}

int cmd_sweep(const Args& a) {
  const auto cfg = load_scenario(a.scenario);
  const auto rep = sensitivity_sweep(cfg, a.eps, a.draws, a.seed, a.jobs);
  emit(a.out, csv::sweep(rep));
  std::cerr << "goal " << to_string(cfg.goal.metric) << ": min=" << csv::num(rep.min) << " max=" << csv::num(rep.max)
            << " spread=" << csv::num(rep.spread) << (rep.unreliable ? " UNRELIABLE" : " reliable") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynfair: fairness metrics, causal checks and long-term selection dynamics"};
  app.require_subcommand(1);
  Args a;

  auto* metrics = app.add_subcommand("metrics", "Evaluate the static metric suite on the initial state");
  metrics->add_option("--scenario", a.scenario, "Scenario file or built-in name")->required();
  metrics->add_option("--out", a.out, "Output CSV (stdout if omitted)");

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its trajectory");
  simulate->add_option("--scenario", a.scenario, "Scenario file or built-in name")->required();
  auto* steps_opt = simulate->add_option("--steps", a.steps, "Horizon T (overrides the scenario)");
  simulate->add_option("--out", a.out, "Output CSV (stdout if omitted)");

  auto* optimize = app.add_subcommand("optimize", "Print the optimal policy and its metric report");
  optimize->add_option("--scenario", a.scenario, "Scenario file or built-in name")->required();
  optimize->add_option("--constraint", a.constraint, "dp | eo | none | outcome")
      ->check(CLI::IsMember({"dp", "eo", "none", "outcome"}));
  optimize->add_option("--resolution", a.resolution, "Rate grid resolution");
  optimize->add_option("--group", a.group, "Target group for --constraint outcome");
  optimize->add_option("--floor", a.floor, "Utility floor for --constraint outcome");
  optimize->add_option("--out", a.out, "Output file (stdout if omitted)");

  auto* causal_cmd = app.add_subcommand("causal", "Causal fairness checks on a structural model");
  causal_cmd->add_option("--model", a.model, "Causal model file")->required();
  causal_cmd->add_option("--check", a.check, "dsep | cf | unresolved | proxy")
      ->required()
      ->check(CLI::IsMember({"dsep", "cf", "unresolved", "proxy"}));
  causal_cmd->add_option("--sources", a.sources, "d-separation sources (default: protected node)");
  causal_cmd->add_option("--targets", a.targets, "d-separation targets (default: outcome node)");
  causal_cmd->add_option("--given", a.given, "Conditioning set, comma separated");
  causal_cmd->add_option("--proxy", a.proxy, "Proxy node for --check proxy");
  causal_cmd->add_option("--resolving", a.resolving, "Resolving nodes, comma separated");
  causal_cmd->add_option("--out", a.out, "Output file (stdout if omitted)");

  auto* compare = app.add_subcommand("compare", "Compare intervention variants");
  compare->add_option("--scenario", a.scenario, "Scenario file or built-in name")->required();
  compare->add_option("--variants", a.variants, "Comma separated: named variants, 'none', or names joined by '+'")
      ->required();
  compare->add_option("--out", a.out, "Output CSV (stdout if omitted)");

  auto* sweep = app.add_subcommand("sweep", "Sensitivity of the goal metric to perturbed initial states");
  sweep->add_option("--scenario", a.scenario, "Scenario file or built-in name")->required();
  sweep->add_option("--eps", a.eps, "Perturbation bound in total variation")->required();
  sweep->add_option("--draws", a.draws, "Number of perturbed runs")->required();
  sweep->add_option("--seed", a.seed, "Random seed")->required();
  sweep->add_option("--jobs", a.jobs, "Parallel workers (output is identical for any value)");
  sweep->add_option("--out", a.out, "Output CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*metrics) return cmd_metrics(a);
    if (*simulate) return cmd_simulate(a, steps_opt->count() > 0);
    if (*optimize) return cmd_optimize(a);
    if (*causal_cmd) return cmd_causal(a);
    if (*compare) return cmd_compare(a);
    if (*sweep) return cmd_sweep(a);
  } catch (const dynfair::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
