#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dynfair/error.hpp"
#include "dynfair/population.hpp"

// Finite structural models encoded as Bayesian networks (one conditional
// probability table per node), with graph-surgery interventions and exact
// inference by enumeration of the joint state space.

namespace dynfair::causal {

inline constexpr std::size_t kMaxJointStates = 1'000'000;

struct Variable {
  std::string name;
  std::vector<std::string> domain;

  bool operator==(const Variable&) const = default;
};

struct CausalModel {
  std::vector<Variable> variables;
  // parents[i]: parent node indices of node i, in CPT indexing order
  std::vector<std::vector<std::size_t>> parents;
  // cpt[i]: rows for each parent assignment (first parent most significant),
  // each row holding p(node = v | parents) for v in domain order
  std::vector<std::vector<double>> cpt;
  std::string protected_node = "A";
  std::string outcome_node = "F";

  std::size_t size() const noexcept { return variables.size(); }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
      if (variables[i].name == name) return i;
    return std::nullopt;
  }

  std::size_t index(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw KeyError("unknown node '" + std::string(name) + "'");
  }

  std::size_t row_count(std::size_t node) const {
    std::size_t rows = 1;
    for (auto p : parents[node]) rows *= variables[p].domain.size();
    return rows;
  }

  std::vector<std::vector<std::size_t>> children() const {
    std::vector<std::vector<std::size_t>> ch(size());
    for (std::size_t i = 0; i < size(); ++i)
      for (auto p : parents[i]) ch[p].push_back(i);
    return ch;
  }

  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i < size(); ++i)
      for (auto p : parents[i]) e.emplace_back(p, i);
    return e;
  }

  // Appends a node. `table` is the flattened CPT (rows x domain size).
  CausalModel& add(std::string name, std::vector<std::string> domain, const std::vector<std::string>& parent_names,
                   std::vector<double> table) {
    std::vector<std::size_t> ps;
    for (const auto& pn : parent_names) ps.push_back(index(pn));
    variables.push_back({std::move(name), std::move(domain)});
    parents.push_back(std::move(ps));
    cpt.push_back(std::move(table));
    return *this;
  }

  // Shorthand for a node with domain {"0", "1"}.
  CausalModel& add_binary(std::string name, const std::vector<std::string>& parent_names, std::vector<double> table) {
    return add(std::move(name), {"0", "1"}, parent_names, std::move(table));
  }

  bool operator==(const CausalModel&) const = default;
};

struct InterventionSpec {
  std::string target;
  std::string value;
};

// Kahn's algorithm; throws on a cycle.
inline std::vector<std::size_t> topological_order(const CausalModel& m) {
  const auto ch = m.children();
  std::vector<std::size_t> indeg(m.size(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) indeg[i] = m.parents[i].size();
  std::vector<std::size_t> order, ready;
  for (std::size_t i = m.size(); i-- > 0;)
    if (indeg[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    const auto n = ready.back();
    ready.pop_back();
    order.push_back(n);
    for (auto c : ch[n])
      if (--indeg[c] == 0) ready.push_back(c);
  }
  if (order.size() != m.size()) throw StructureError("causal graph contains a cycle");
  return order;
}

inline void validate(const CausalModel& m) {
  if (m.parents.size() != m.size() || m.cpt.size() != m.size())
    throw StructureError("parents/cpt arrays do not match the variable list");
  std::set<std::string> names;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& v = m.variables[i];
    if (!names.insert(v.name).second) throw StructureError("duplicate node '" + v.name + "'");
    if (v.domain.empty()) throw StructureError("node '" + v.name + "' has an empty domain");
    std::set<std::string> seen;
    for (auto p : m.parents[i]) {
      if (p >= m.size()) throw StructureError("node '" + v.name + "' has an out-of-range parent");
      if (p == i) throw StructureError("node '" + v.name + "' is its own parent");
      if (!seen.insert(m.variables[p].name).second)
        throw StructureError("node '" + v.name + "' lists a parent twice");
    }
  }
  topological_order(m);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& v = m.variables[i];
    const std::size_t rows = m.row_count(i), k = v.domain.size();
    if (m.cpt[i].size() != rows * k)
      throw ValidationError("CPT of '" + v.name + "' has " + std::to_string(m.cpt[i].size()) + " entries, expected " +
                            std::to_string(rows * k));
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double p = m.cpt[i][r * k + j];
        if (!(p >= 0.0 && p <= 1.0))
          throw ValidationError("CPT of '" + v.name + "' has entry " + detail::fmt_num(p) + " out of [0,1]");
        s += p;
      }
      if (!(std::abs(s - 1.0) <= kProbTol))
        throw ValidationError("CPT row " + std::to_string(r) + " of '" + v.name + "' sums to " + detail::fmt_num(s));
    }
  }
}

// Exact joint pmf over full assignments. State index is mixed-radix with
// node 0 as the least significant digit.
struct JointDistribution {
  std::vector<std::size_t> radix;
  std::vector<std::size_t> stride;
  std::vector<double> p;

  std::size_t value(std::size_t state, std::size_t node) const { return (state / stride[node]) % radix[node]; }

  std::vector<double> marginal(std::size_t node) const {
    std::vector<double> m(radix[node], 0.0);
    for (std::size_t s = 0; s < p.size(); ++s) m[value(s, node)] += p[s];
    return m;
  }
};

inline JointDistribution joint_distribution(const CausalModel& m) {
  validate(m);
  JointDistribution j;
  std::size_t states = 1;
  for (const auto& v : m.variables) {
    j.stride.push_back(states);
    j.radix.push_back(v.domain.size());
    if (states > kMaxJointStates / v.domain.size())
      throw CapacityError("joint state space exceeds " + std::to_string(kMaxJointStates) + " states");
    states *= v.domain.size();
  }
  j.p.assign(states, 1.0);
  for (std::size_t s = 0; s < states; ++s) {
    double prob = 1.0;
    for (std::size_t i = 0; i < m.size() && prob > 0.0; ++i) {
      std::size_t row = 0;
      for (auto par : m.parents[i]) row = row * j.radix[par] + j.value(s, par);
      prob *= m.cpt[i][row * j.radix[i] + j.value(s, i)];
    }
    j.p[s] = prob;
  }
  return j;
}

// Graph surgery: cut the target's incoming edges and pin it to `value`.
inline CausalModel intervene(const CausalModel& m, const InterventionSpec& spec) {
  const auto idx = m.find(spec.target);
  if (!idx) throw DomainError("cannot intervene on unknown node '" + spec.target + "'");
  const auto& dom = m.variables[*idx].domain;
  const auto it = std::find(dom.begin(), dom.end(), spec.value);
  if (it == dom.end())
    throw DomainError("value '" + spec.value + "' not in the domain of '" + spec.target + "'");
  CausalModel out = m;
  out.parents[*idx].clear();
  out.cpt[*idx].assign(dom.size(), 0.0);
  out.cpt[*idx][static_cast<std::size_t>(it - dom.begin())] = 1.0;
  return out;
}

namespace detail {

inline std::size_t require_node(const CausalModel& m, const std::string& name, const char* role) {
  if (auto i = m.find(name)) return *i;
  throw StructureError(std::string(role) + " node '" + name + "' missing from the model");
}

// TV distance between the outcome marginals under do(node = v0) and do(node = v1).
inline double interventional_gap(const CausalModel& m, const std::string& node, const char* role) {
  const auto n = require_node(m, node, role);
  const auto f = require_node(m, m.outcome_node, "outcome");
  const auto& dom = m.variables[n].domain;
  if (dom.size() != 2)
    throw DomainError(std::string(role) + " node '" + node + "' must be binary, has " + std::to_string(dom.size()) +
                      " values");
  const auto p0 = joint_distribution(intervene(m, {node, dom[0]})).marginal(f);
  const auto p1 = joint_distribution(intervene(m, {node, dom[1]})).marginal(f);
  return std::clamp(total_variation(p0, p1), 0.0, 1.0);
}

inline std::vector<std::size_t> indices(const CausalModel& m, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) {
    const auto i = m.find(n);
    if (!i) throw DomainError("unknown node '" + n + "'");
    out.push_back(*i);
  }
  return out;
}

}  // namespace detail

// TV distance between p(F | do(A=a0)) and p(F | do(A=a1)) for binary A.
inline double counterfactual_fairness_gap(const CausalModel& m) {
  return detail::interventional_gap(m, m.protected_node, "protected");
}

// TV distance between p(F | do(P=p0)) and p(F | do(P=p1)) for a binary proxy P.
inline double proxy_discrimination_gap(const CausalModel& m, const std::string& proxy) {
  if (!m.find(proxy)) throw DomainError("unknown proxy node '" + proxy + "'");
  return detail::interventional_gap(m, proxy, "proxy");
}

// d-separation by the reachability (Bayes-ball) procedure.
inline bool d_separated(const CausalModel& m, const std::vector<std::string>& sources,
                        const std::vector<std::string>& targets, const std::vector<std::string>& given) {
  const auto xs = detail::indices(m, sources);
  const auto ys = detail::indices(m, targets);
  const auto zs = detail::indices(m, given);
  std::vector<char> in_x(m.size(), 0), in_y(m.size(), 0), in_z(m.size(), 0);
  for (auto i : xs) in_x[i] = 1;
  for (auto i : ys) {
    if (in_x[i]) throw DomainError("node '" + m.variables[i].name + "' in both source and target sets");
    in_y[i] = 1;
  }
  for (auto i : zs) {
    if (in_x[i] || in_y[i]) throw DomainError("conditioning node '" + m.variables[i].name + "' overlaps another set");
    in_z[i] = 1;
  }
  topological_order(m);

  // ancestors of the conditioning set, inclusive
  std::vector<char> anc_z(m.size(), 0);
  std::vector<std::size_t> stack(zs.begin(), zs.end());
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    if (anc_z[n]) continue;
    anc_z[n] = 1;
    for (auto p : m.parents[n]) stack.push_back(p);
  }

  const auto ch = m.children();
  enum Dir : std::size_t { kUp = 0, kDown = 1 };  // up: arrived from a child
  std::vector<char> visited(2 * m.size(), 0);
  std::vector<std::pair<std::size_t, Dir>> work;
  for (auto x : xs) work.emplace_back(x, kUp);
  while (!work.empty()) {
    const auto [n, d] = work.back();
    work.pop_back();
    if (visited[2 * n + d]) continue;
    visited[2 * n + d] = 1;
    if (!in_z[n] && in_y[n]) return false;
    if (d == kUp && !in_z[n]) {
      for (auto p : m.parents[n]) work.emplace_back(p, kUp);
      for (auto c : ch[n]) work.emplace_back(c, kDown);
    } else if (d == kDown) {
      if (!in_z[n])
        for (auto c : ch[n]) work.emplace_back(c, kDown);
      if (anc_z[n])
        for (auto p : m.parents[n]) work.emplace_back(p, kUp);
    }
  }
  return true;
}

// True iff some directed path from the protected node to the outcome avoids
// every resolving node (endpoints excepted).
inline bool unresolved_discrimination(const CausalModel& m, const std::vector<std::string>& resolving) {
  const auto a = detail::require_node(m, m.protected_node, "protected");
  const auto f = detail::require_node(m, m.outcome_node, "outcome");
  std::vector<char> blocked(m.size(), 0);
  for (auto r : detail::indices(m, resolving)) blocked[r] = 1;
  topological_order(m);
  const auto ch = m.children();
  std::vector<char> seen(m.size(), 0);
  std::vector<std::size_t> stack{a};
  seen[a] = 1;
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    for (auto c : ch[n]) {
      if (c == f) return true;
      if (blocked[c] || seen[c]) continue;
      seen[c] = 1;
      stack.push_back(c);
    }
  }
  return false;
}

// Is `to` reachable from `from` along directed edges?
inline bool is_descendant(const CausalModel& m, std::string_view from, std::string_view to) {
  const auto s = m.index(from), t = m.index(to);
  const auto ch = m.children();
  std::vector<char> seen(m.size(), 0);
  std::vector<std::size_t> stack{s};
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    for (auto c : ch[n]) {
      if (c == t) return true;
      if (!seen[c]) {
        seen[c] = 1;
        stack.push_back(c);
      }
    }
  }
  return false;
}

}  // namespace dynfair::causal
