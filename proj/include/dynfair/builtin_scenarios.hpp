#pragma once

// Generated by tools/embed_scenarios.py from scenarios/*.json. Do not edit.

#include <optional>
#include <string_view>

namespace dynfair {

inline constexpr std::string_view k_lending_liu_scenario = R"json({
  "name": "lending_liu",
  "version": 1,
  "notes": [
    "Stylized lending market with an advantaged group A and a disadvantaged group B.",
    "Scores are credit-score-like bins; rho is the repayment probability per bin, shared by both groups.",
    "A repaid loan moves the borrower one bin up, a default three bins down, so a selected",
    "individual's expected score change is negative below rho = 3/4.",
    "The bank gains 1 per repaid loan and loses 4 per default, so it lends iff rho > 0.8.",
    "All numbers are illustrative, not calibrated to any credit bureau data."
  ],
  "goal": {
    "label": "promote the long-term well-being of the disadvantaged group",
    "metric": "delta_mu",
    "group": "B",
    "tolerance": 1e-9
  },
  "population": {
    "grid": {"first": 300, "width": 50, "bins": 11},
    "groups": [
      {"label": "A", "proportion": 0.8,
       "pmf": [0.01, 0.02, 0.03, 0.05, 0.07, 0.10, 0.14, 0.18, 0.18, 0.13, 0.09]},
      {"label": "B", "proportion": 0.2,
       "pmf": [0.10, 0.14, 0.16, 0.16, 0.13, 0.10, 0.07, 0.05, 0.04, 0.03, 0.02]}
    ]
  },
  "outcome": {
    "rho": [0.05, 0.10, 0.20, 0.30, 0.45, 0.60, 0.72, 0.82, 0.90, 0.95, 0.98],
    "steps_up": 1,
    "steps_down": 3
  },
  "institution": {"u_plus": 1.0, "u_minus": -4.0},
  "policy_rule": {"kind": "constrained", "constraint": "dp"},
  "metric_groups": ["A", "B"],
  "delta_mu_mode": "group_wide",
  "interventions": [],
  "variants": {},
  "horizon": 20,
  "tolerances": {"regime": 1e-9, "stationarity_eps": 1e-6, "stationarity_window": 5},
  "seed": 20240601,
  "resolution": 0.01
}
)json";

inline constexpr std::string_view k_boards_quota_scenario = R"json({
  "name": "boards_quota",
  "version": 1,
  "notes": [
    "Stylized board-appointment process. W is the under-represented group, M the other.",
    "Scores are a qualification index; the appointing body is group-blind and appoints",
    "candidates whose success probability exceeds 0.75.",
    "The quota share 0.40 is the upper end of the 30-40% range found in national board quotas.",
    "Context figures (documentation only, not model inputs): 77% of Europeans favour more women",
    "in management, 44% prefer codes of good practice, 19% favour legal quotas; in 2019, 46% of",
    "women and 35% of men aged 30-34 held a tertiary degree.",
    "Pipeline investment and role-model strengths are illustrative free parameters."
  ],
  "goal": {
    "label": "robust long-term demographic parity in appointments",
    "metric": "dp_gap",
    "tolerance": 0.03
  },
  "population": {
    "grid": {"first": 0, "width": 1, "bins": 10},
    "groups": [
      {"label": "W", "proportion": 0.5,
       "pmf": [0.05, 0.09, 0.12, 0.15, 0.16, 0.15, 0.12, 0.08, 0.05, 0.03]},
      {"label": "M", "proportion": 0.5,
       "pmf": [0.02, 0.04, 0.07, 0.10, 0.13, 0.15, 0.15, 0.14, 0.11, 0.09]}
    ]
  },
  "outcome": {
    "rho": [0.05, 0.10, 0.20, 0.30, 0.45, 0.60, 0.70, 0.80, 0.90, 0.95],
    "steps_up": 0,
    "steps_down": 0
  },
  "institution": {"u_plus": 1.0, "u_minus": -3.0},
  "policy_rule": {"kind": "max_utility"},
  "metric_groups": ["W", "M"],
  "interventions": [
    {"name": "quota", "kind": "quota", "group": "W", "share": 0.40,
     "sunset": {"eps": 0.005, "window": 3}},
    {"name": "pipeline", "kind": "pipeline_investment", "group": "W", "shift": 0.15,
     "active_from": 0, "active_until": 10},
    {"name": "role_models", "kind": "role_model_feedback", "group": "W", "strength": 0.3}
  ],
  "variants": {
    "quota_only": ["quota"],
    "quota_pipeline": ["quota", "pipeline"],
    "quota_pipeline_role_models": ["quota", "pipeline", "role_models"]
  },
  "horizon": 30,
  "tolerances": {"regime": 1e-9, "stationarity_eps": 1e-6, "stationarity_window": 5},
  "seed": 20240601,
  "resolution": 0.01
}
)json";

inline std::optional<std::string_view> builtin_scenario_text(std::string_view name) {

  if (name == "lending_liu") return k_lending_liu_scenario;

  if (name == "boards_quota") return k_boards_quota_scenario;

  return std::nullopt;
}

}  // namespace dynfair
