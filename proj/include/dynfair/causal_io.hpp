#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dynfair/causal.hpp"

// Causal model files (JSON):
//
//   {
//     "protected": "A",
//     "outcome": "F",
//     "nodes": [ {"name": "A", "domain": ["0", "1"]}, ... ],
//     "edges": [ ["A", "M"], ["M", "F"] ],
//     "cpts": {
//       "A": [ {"given": {}, "p": ["0.5", "0.5"]} ],
//       "M": [ {"given": {"A": "0"}, "p": ["0.8", "0.2"]},
//              {"given": {"A": "1"}, "p": ["0.2", "0.8"]} ]
//     }
//   }
//
// A node's parents are ordered as their edges appear. Every parent assignment
// must have exactly one CPT row. Probabilities are decimal strings (plain
// JSON numbers are accepted too).

namespace dynfair::causal {

namespace detail {

inline double parse_probability(const nlohmann::json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw ValidationError(where + ": probability must be a decimal string");
  const auto s = v.get<std::string>();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError(where + ": '" + s + "' is not a decimal number");
  return out;
}

inline const nlohmann::json& field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
  return j.at(key);
}

}  // namespace detail

inline CausalModel causal_model_from_json(const nlohmann::json& j) {
  using detail::field;
  CausalModel m;
  try {
    if (j.contains("protected")) m.protected_node = j.at("protected").get<std::string>();
    if (j.contains("outcome")) m.outcome_node = j.at("outcome").get<std::string>();
    const auto& nodes = field(j, "nodes", "model");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const std::string where = "nodes[" + std::to_string(i) + "]";
      Variable v{field(nodes[i], "name", where).get<std::string>(),
                 field(nodes[i], "domain", where).get<std::vector<std::string>>()};
      if (m.find(v.name)) throw StructureError(where + ": duplicate node '" + v.name + "'");
      m.variables.push_back(std::move(v));
      m.parents.emplace_back();
      m.cpt.emplace_back();
    }
    if (j.contains("edges")) {
      const auto& edges = j.at("edges");
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto pair = edges[e].get<std::vector<std::string>>();
        if (pair.size() != 2) throw ValidationError("edges[" + std::to_string(e) + "]: expected [parent, child]");
        const auto from = m.find(pair[0]), to = m.find(pair[1]);
        if (!from || !to) throw StructureError("edges[" + std::to_string(e) + "]: unknown node");
        m.parents[*to].push_back(*from);
      }
    }
    const auto& cpts = field(j, "cpts", "model");
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto& name = m.variables[i].name;
      const std::string where = "cpts." + name;
      const auto& rows = field(cpts, name.c_str(), "cpts");
      const std::size_t k = m.variables[i].domain.size();
      const std::size_t nrows = m.row_count(i);
      std::vector<double> table(nrows * k, 0.0);
      std::vector<char> filled(nrows, 0);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string rw = where + "[" + std::to_string(r) + "]";
        const auto given = rows[r].contains("given") ? rows[r].at("given") : nlohmann::json::object();
        if (given.size() != m.parents[i].size())
          throw ValidationError(rw + ": 'given' must assign exactly the node's parents");
        std::size_t row = 0;
        for (auto par : m.parents[i]) {
          const auto& pv = m.variables[par];
          if (!given.contains(pv.name)) throw ValidationError(rw + ": 'given' lacks parent '" + pv.name + "'");
          const auto val = given.at(pv.name).get<std::string>();
          const auto it = std::find(pv.domain.begin(), pv.domain.end(), val);
          if (it == pv.domain.end()) throw ValidationError(rw + ": '" + val + "' not in domain of '" + pv.name + "'");
          row = row * pv.domain.size() + static_cast<std::size_t>(it - pv.domain.begin());
        }
        if (filled[row]) throw ValidationError(rw + ": duplicate parent assignment");
        filled[row] = 1;
        const auto& probs = field(rows[r], "p", rw);
        if (probs.size() != k) throw ValidationError(rw + ".p: expected " + std::to_string(k) + " probabilities");
        for (std::size_t v = 0; v < k; ++v)
          table[row * k + v] = detail::parse_probability(probs[v], rw + ".p[" + std::to_string(v) + "]");
      }
      for (std::size_t r = 0; r < nrows; ++r)
        if (!filled[r]) throw ValidationError(where + ": missing row for parent assignment " + std::to_string(r));
      m.cpt[i] = std::move(table);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed causal model: ") + e.what());
  }
  validate(m);
  return m;
}

inline CausalModel load_causal_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open causal model '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path + "': " + e.what());
  }
  return causal_model_from_json(j);
}

}  // namespace dynfair::causal
