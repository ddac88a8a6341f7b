#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dynfair/population.hpp"

namespace dynfair {

// Per-group success probability rho(x) and the bin moves applied to a
// selected individual: `steps_up` bins on success, `steps_down` on failure.
struct OutcomeModel {
  std::map<std::string, std::vector<double>, std::less<>> rho;
  int steps_up = 0;
  int steps_down = 0;

  const std::vector<double>& rho_for(std::string_view label) const {
    auto it = rho.find(label);
    if (it == rho.end()) throw KeyError("outcome model has no rho for group '" + std::string(label) + "'");
    return it->second;
  }

  // Impact magnitudes in score units.
  double c_plus(const ScoreGrid& grid) const { return steps_up * grid.bin_width; }
  double c_minus(const ScoreGrid& grid) const { return -steps_down * grid.bin_width; }

  // Same rho curve for every listed group.
  static OutcomeModel shared(const std::vector<std::string>& labels, std::vector<double> rho_curve, int up,
                             int down) {
    OutcomeModel m;
    for (const auto& l : labels) m.rho[l] = rho_curve;
    m.steps_up = up;
    m.steps_down = down;
    return m;
  }

  bool operator==(const OutcomeModel&) const = default;
};

inline void validate_outcome(const Population& pop, const OutcomeModel& out) {
  if (out.steps_up < 0 || out.steps_down < 0) throw ValidationError("steps_up and steps_down must be nonnegative");
  for (const auto& g : pop.groups) {
    const auto& r = out.rho_for(g.label);
    check_length(r.size(), pop.grid.size(), "rho of group '" + g.label + "'");
    for (double v : r)
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("rho of group '" + g.label + "' has entry " + detail::fmt_num(v) + " out of [0,1]");
  }
}

struct InstitutionModel {
  double u_plus = 1.0;
  double u_minus = -1.0;

  // Expected institution payoff of accepting one individual with success probability rho.
  double expected_gain(double rho) const { return u_plus * rho + u_minus * (1.0 - rho); }

  bool operator==(const InstitutionModel&) const = default;
};

inline void validate_institution(const InstitutionModel& inst) {
  if (!std::isfinite(inst.u_plus) || !std::isfinite(inst.u_minus))
    throw ValidationError("institution utilities must be finite");
}

}  // namespace dynfair
