#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "dynfair/dynamics.hpp"
#include "dynfair/scenarios.hpp"

// CSV output: fixed column order, header row, '.' decimal separator and 17
// significant digits so every double round-trips.

namespace dynfair::csv {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

inline std::string trajectory(const Trajectory& traj) {
  std::string out =
      "step,group,mean_score,acceptance_rate,delta_mu,regime,dp_gap,eo_gap,eodds_gap,utility,intervention_active\n";
  for (const auto& rec : traj.steps) {
    for (const auto& g : rec.population.groups) {
      out += std::to_string(rec.step) + "," + g.label + "," + num(group_mean(g, rec.population.grid)) + "," +
             num(rec.metrics.rates.at(g.label).acceptance) + "," + num(rec.delta_mu.at(g.label)) + "," +
             to_string(rec.regimes.at(g.label)) + "," + num(rec.metrics.dp_gap) + "," + num(rec.metrics.eo_gap) + "," +
             num(rec.metrics.eodds_gap) + "," + num(rec.utility) + "," + (rec.any_intervention_active() ? "1" : "0") +
             "\n";
    }
  }
  return out;
}

// One row per report: the metric pair, the gaps, then per-group rates in
// population order.
inline std::string metric_report(const MetricReport& r, const Population& pop, double utility) {
  std::string head = "group0,group1,dp_gap,eo_gap,eodds_gap,utility";
  std::string row = r.group0 + "," + r.group1 + "," + num(r.dp_gap) + "," + num(r.eo_gap) + "," + num(r.eodds_gap) +
                    "," + num(utility);
  for (const auto& g : pop.groups) {
    const auto& gr = r.rates.at(g.label);
    head += ",acceptance_" + g.label + ",tpr_" + g.label + ",fpr_" + g.label;
    row += "," + num(gr.acceptance) + "," + num(gr.true_positive) + "," + num(gr.false_positive);
  }
  return head + "\n" + row + "\n";
}

inline std::string comparison(const ComparisonTable& t) {
  std::string out = "variant,final_goal_value,steps_to_goal,persists_after_sunset";
  for (const auto& g : t.groups) out += ",final_delta_mu_" + g;
  out += "\n";
  for (const auto& r : t.rows) {
    out += r.variant + "," + num(r.final_goal_value) + "," +
           (r.steps_to_goal ? std::to_string(*r.steps_to_goal) : std::string("not_reached")) + "," +
           (r.persists_after_sunset ? "true" : "false");
    for (const auto& [g, v] : r.final_delta_mu) out += "," + num(v);
    out += "\n";
  }
  return out;
}

inline std::string sweep(const SweepReport& r) {
  std::string out = "draw,final_goal_value\n";
  for (std::size_t d = 0; d < r.values.size(); ++d) out += std::to_string(d) + "," + num(r.values[d]) + "\n";
  return out;
}

// Writes to a sibling temporary file and renames it over `path`, so a
// failure never leaves a partial file behind.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw ValidationError("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ValidationError("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

}  // namespace dynfair::csv
