#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dynfair/error.hpp"

namespace dynfair {

// Tolerance used for every "sums to one" / "is a probability" check.
inline constexpr double kProbTol = 1e-9;

namespace detail {

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline double kahan_sum(std::span<const double> xs) {
  double sum = 0.0, c = 0.0;
  for (double x : xs) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace detail

// Ordered, uniformly spaced score bins.
struct ScoreGrid {
  std::vector<double> bin_scores;
  double bin_width = 1.0;

  static ScoreGrid uniform(double first, double width, std::size_t bins) {
    ScoreGrid g;
    g.bin_width = width;
    g.bin_scores.reserve(bins);
    for (std::size_t i = 0; i < bins; ++i) g.bin_scores.push_back(first + width * static_cast<double>(i));
    return g;
  }

  std::size_t size() const noexcept { return bin_scores.size(); }
  double min_score() const { return bin_scores.front(); }
  double max_score() const { return bin_scores.back(); }

  bool operator==(const ScoreGrid&) const = default;
};

struct GroupState {
  std::string label;
  double proportion = 0.0;
  std::vector<double> pmf;

  bool operator==(const GroupState&) const = default;
};

struct Population {
  ScoreGrid grid;
  std::vector<GroupState> groups;

  const GroupState& group(std::string_view label) const {
    for (const auto& g : groups)
      if (g.label == label) return g;
    throw KeyError("unknown group '" + std::string(label) + "'");
  }
  GroupState& group(std::string_view label) {
    for (auto& g : groups)
      if (g.label == label) return g;
    throw KeyError("unknown group '" + std::string(label) + "'");
  }
  bool has_group(std::string_view label) const {
    for (const auto& g : groups)
      if (g.label == label) return true;
    return false;
  }
  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& g : groups) out.push_back(g.label);
    return out;
  }

  bool operator==(const Population&) const = default;
};

struct Violation {
  std::string group;  // empty for population-wide violations
  std::string message;
  double slack = 0.0;  // signed distance from the admissible region
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }

  std::string to_string() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      if (!v.group.empty()) out += "group '" + v.group + "': ";
      out += v.message;
    }
    return out;
  }
};

inline ValidationReport validate_grid(const ScoreGrid& grid) {
  ValidationReport r;
  if (grid.size() < 2) {
    r.violations.push_back({"", "grid has " + std::to_string(grid.size()) + " bins, need at least 2",
                            2.0 - static_cast<double>(grid.size())});
    return r;
  }
  if (!(grid.bin_width > 0.0) || !std::isfinite(grid.bin_width))
    r.violations.push_back({"", "bin_width " + detail::fmt_num(grid.bin_width) + " not positive", grid.bin_width});
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double d = grid.bin_scores[i] - grid.bin_scores[i - 1];
    if (!(d > 0.0)) {
      r.violations.push_back({"", "bin scores not strictly ascending at bin " + std::to_string(i), d});
    } else if (std::abs(d - grid.bin_width) > kProbTol) {
      r.violations.push_back({"", "bin spacing " + detail::fmt_num(d) + " at bin " + std::to_string(i) +
                                      " ≠ bin_width " + detail::fmt_num(grid.bin_width),
                              d - grid.bin_width});
    }
  }
  return r;
}

// Collects every violated invariant; never throws.
inline ValidationReport validate_population(const Population& p) {
  ValidationReport r = validate_grid(p.grid);
  if (p.groups.empty()) r.violations.push_back({"", "population has no groups", 1.0});

  double prop_sum = 0.0;
  for (std::size_t i = 0; i < p.groups.size(); ++i) {
    const auto& g = p.groups[i];
    for (std::size_t j = 0; j < i; ++j)
      if (p.groups[j].label == g.label) r.violations.push_back({g.label, "duplicate group label", 0.0});
    if (!(g.proportion >= 0.0 && g.proportion <= 1.0))
      r.violations.push_back({g.label, "proportion " + detail::fmt_num(g.proportion) + " out of [0,1]",
                              g.proportion < 0.0 ? g.proportion : g.proportion - 1.0});
    prop_sum += g.proportion;
    if (g.pmf.size() != p.grid.size()) {
      r.violations.push_back({g.label,
                              "pmf length " + std::to_string(g.pmf.size()) + " ≠ grid length " +
                                  std::to_string(p.grid.size()),
                              static_cast<double>(g.pmf.size()) - static_cast<double>(p.grid.size())});
    }
    for (std::size_t x = 0; x < g.pmf.size(); ++x) {
      if (!(g.pmf[x] >= 0.0) || !std::isfinite(g.pmf[x]))
        r.violations.push_back({g.label, "pmf entry " + std::to_string(x) + " = " + detail::fmt_num(g.pmf[x]) + " < 0",
                                g.pmf[x]});
    }
    const double s = detail::kahan_sum(g.pmf);
    if (!(std::abs(s - 1.0) <= kProbTol))
      r.violations.push_back({g.label, "pmf sum " + detail::fmt_num(s) + " ≠ 1", s - 1.0});
  }
  if (!p.groups.empty() && !(std::abs(prop_sum - 1.0) <= kProbTol))
    r.violations.push_back({"", "proportions sum " + detail::fmt_num(prop_sum) + " ≠ 1", prop_sum - 1.0});
  return r;
}

inline void require_valid(const Population& p) {
  auto r = validate_population(p);
  if (!r.ok()) throw ValidationError("invalid population: " + r.to_string());
}

inline void check_length(std::size_t got, std::size_t want, std::string_view what) {
  if (got != want)
    throw DimensionError(std::string(what) + " has length " + std::to_string(got) + ", expected " +
                         std::to_string(want));
}

inline double group_mean(const GroupState& g, const ScoreGrid& grid) {
  check_length(g.pmf.size(), grid.size(), "pmf of group '" + g.label + "'");
  double m = 0.0;
  for (std::size_t x = 0; x < grid.size(); ++x) m += g.pmf[x] * grid.bin_scores[x];
  return m;
}

// Total-variation distance between two pmfs of equal length.
inline double total_variation(std::span<const double> p, std::span<const double> q) {
  check_length(q.size(), p.size(), "pmf");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return 0.5 * d;
}

}  // namespace dynfair
