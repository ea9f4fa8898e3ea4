#pragma once

// JSON model documents:
//
//   {"num_states": 3, "num_observations": 1, "goal": [2],
//    "initial": {"kind": "set", "states": [0, 1]}        // or {"kind": "dist", "probs": [[0, 0.5], ...]}
//    "actions": [{"name": "right", "applicable": [0, 1, 2],
//                 "effects": [[0, 1], [1, 2], [2, 2]], "costs": [[0, 1], [1, 1], [2, 0]]}],
//    "obs_fn": [[state, action_index, observation], ...]}  // optional when unobservable
//
// Costs are JSON numbers or "p/q" strings; save_model writes integers as
// numbers and every other rational as a "p/q" string.

#include "detpomdp/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

namespace detpomdp {

namespace io_detail {

using nlohmann::json;

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw FormatError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(path + "." + key + ": missing field");
  return *it;
}

inline std::uint64_t as_index(const json& v, const std::string& path, std::uint64_t bound) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw FormatError(path + ": expected a non-negative integer");
  auto x = v.get<std::uint64_t>();
  if (x >= bound) throw FormatError(path + ": index " + std::to_string(x) + " out of range (< " + std::to_string(bound) + ")");
  return x;
}

inline const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw FormatError(path + ": expected an array");
  return v;
}

inline Rational as_rational(const json& v, const std::string& path) {
  try {
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    if (v.is_number_float()) return rational_from_double(v.get<double>());
    if (v.is_string()) return parse_rational(v.get<std::string>());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
  throw FormatError(path + ": expected a number or a \"p/q\" string");
}

inline std::string path_at(const std::string& base, std::size_t k) { return base + "[" + std::to_string(k) + "]"; }

}  // namespace io_detail

/// Parses a model document. Throws FormatError naming the offending field.
inline DetPomdp load_model(const std::string& text) {
  using namespace io_detail;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("parse error: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("model: expected a JSON object");

  DetPomdp m;
  const auto& ns = field(doc, "num_states", "model");
  if (!ns.is_number_integer() || ns.get<std::int64_t>() <= 0) throw FormatError("model.num_states: expected a positive integer");
  m.num_states = ns.get<std::size_t>();
  const auto n = m.num_states;

  const auto& no = field(doc, "num_observations", "model");
  if (!no.is_number_integer() || no.get<std::int64_t>() <= 0)
    throw FormatError("model.num_observations: expected a positive integer");
  m.num_observations = no.get<std::size_t>();

  m.goal = StateSet(n);
  const auto& goal = as_array(field(doc, "goal", "model"), "model.goal");
  for (std::size_t k = 0; k < goal.size(); ++k) m.goal.set(as_index(goal[k], path_at("model.goal", k), n));

  const auto& init = field(doc, "initial", "model");
  const auto& kind = field(init, "kind", "model.initial");
  if (kind == "set") {
    InitialSet s;
    const auto& states = as_array(field(init, "states", "model.initial"), "model.initial.states");
    for (std::size_t k = 0; k < states.size(); ++k)
      s.states.push_back(static_cast<StateId>(as_index(states[k], path_at("model.initial.states", k), n)));
    if (s.states.empty()) throw FormatError("model.initial.states: initial belief is empty");
    m.initial = s;
  } else if (kind == "dist") {
    InitialDist d;
    const auto& probs = as_array(field(init, "probs", "model.initial"), "model.initial.probs");
    double sum = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      const auto p = path_at("model.initial.probs", k);
      if (!probs[k].is_array() || probs[k].size() != 2) throw FormatError(p + ": expected [state, probability]");
      auto s = static_cast<StateId>(as_index(probs[k][0], p + "[0]", n));
      if (!probs[k][1].is_number()) throw FormatError(p + "[1]: expected a number");
      double q = probs[k][1].get<double>();
      if (!(q > 0) || q > 1) throw FormatError(p + "[1]: probability must lie in (0,1]");
      d.probs.emplace_back(s, q);
      sum += q;
    }
    if (d.probs.empty()) throw FormatError("model.initial.probs: initial belief is empty");
    if (std::abs(sum - 1.0) > 1e-9) throw FormatError("model.initial.dist sum: probabilities sum to " + std::to_string(sum));
    m.initial = d;
  } else {
    throw FormatError("model.initial.kind: expected \"set\" or \"dist\"");
  }

  const auto& actions = as_array(field(doc, "actions", "model"), "model.actions");
  for (std::size_t a = 0; a < actions.size(); ++a) {
    const auto ap = path_at("model.actions", a);
    Action act;
    const auto& name = field(actions[a], "name", ap);
    if (!name.is_string()) throw FormatError(ap + ".name: expected a string");
    act.name = name.get<std::string>();
    act.applicable = StateSet(n);
    act.effects.assign(n, std::nullopt);
    act.costs.assign(n, std::nullopt);
    const auto& app = as_array(field(actions[a], "applicable", ap), ap + ".applicable");
    for (std::size_t k = 0; k < app.size(); ++k) act.applicable.set(as_index(app[k], path_at(ap + ".applicable", k), n));
    const auto& eff = as_array(field(actions[a], "effects", ap), ap + ".effects");
    for (std::size_t k = 0; k < eff.size(); ++k) {
      const auto p = path_at(ap + ".effects", k);
      if (!eff[k].is_array() || eff[k].size() != 2) throw FormatError(p + ": expected [state, state]");
      auto s = as_index(eff[k][0], p + "[0]", n);
      if (act.effects[s]) throw FormatError(p + ": duplicate effect for state " + std::to_string(s));
      act.effects[s] = static_cast<StateId>(as_index(eff[k][1], p + "[1]", n));
    }
    const auto& costs = as_array(field(actions[a], "costs", ap), ap + ".costs");
    for (std::size_t k = 0; k < costs.size(); ++k) {
      const auto p = path_at(ap + ".costs", k);
      if (!costs[k].is_array() || costs[k].size() != 2) throw FormatError(p + ": expected [state, cost]");
      auto s = as_index(costs[k][0], p + "[0]", n);
      if (act.costs[s]) throw FormatError(p + ": duplicate cost for state " + std::to_string(s));
      act.costs[s] = as_rational(costs[k][1], p + "[1]");
    }
    m.actions.push_back(std::move(act));
  }

  const auto na = m.actions.size();
  m.obs_fn.assign(n * na, 0);
  if (auto it = doc.find("obs_fn"); it != doc.end()) {
    const auto& triples = as_array(*it, "model.obs_fn");
    std::vector<bool> seen(n * na, false);
    for (std::size_t k = 0; k < triples.size(); ++k) {
      const auto p = path_at("model.obs_fn", k);
      if (!triples[k].is_array() || triples[k].size() != 3) throw FormatError(p + ": expected [state, action, observation]");
      auto s = as_index(triples[k][0], p + "[0]", n);
      auto a = as_index(triples[k][1], p + "[1]", na);
      auto o = as_index(triples[k][2], p + "[2]", m.num_observations);
      if (seen[s * na + a]) throw FormatError(p + ": duplicate entry");
      seen[s * na + a] = true;
      m.obs_fn[s * na + a] = static_cast<ObsId>(o);
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
      throw FormatError("model.obs_fn: observation function must be total on states x actions");
  } else if (m.num_observations != 1) {
    throw FormatError("model.obs_fn: missing field (required when num_observations > 1)");
  }
  return m;
}

/// Canonical document: fixed key order, sorted lists, obs_fn omitted for
/// unobservable models. load_model(save_model(m)) reproduces m.
inline std::string save_model(const DetPomdp& m) {
  using nlohmann::json;
  std::ostringstream os;
  os << "{\n";
  os << "  \"num_states\": " << m.num_states << ",\n";
  os << "  \"num_observations\": " << m.num_observations << ",\n";
  os << "  \"goal\": " << json(m.goal.to_vector()).dump() << ",\n";
  json init;
  if (const auto* set = std::get_if<InitialSet>(&m.initial)) {
    auto states = set->states;
    std::sort(states.begin(), states.end());
    init = json{{"kind", "set"}, {"states", states}};
  } else {
    auto probs = std::get<InitialDist>(m.initial).probs;
    std::sort(probs.begin(), probs.end());
    json arr = json::array();
    for (auto [s, p] : probs) arr.push_back(json::array({s, p}));
    init = json{{"kind", "dist"}, {"probs", arr}};
  }
  os << "  \"initial\": " << init.dump() << ",\n";
  os << "  \"actions\": [";
  for (ActionId a = 0; a < m.actions.size(); ++a) {
    const auto& act = m.actions[a];
    json eff = json::array(), costs = json::array();
    for (StateId s = 0; s < m.num_states; ++s) {
      if (act.effects[s]) eff.push_back(json::array({s, *act.effects[s]}));
      if (act.costs[s]) {
        const auto& c = *act.costs[s];
        costs.push_back(json::array({s, c.denominator() == 1 ? json(c.numerator()) : json(to_string(c))}));
      }
    }
    os << (a ? ",\n" : "\n") << "    {\"name\": " << json(act.name).dump()
       << ", \"applicable\": " << json(act.applicable.to_vector()).dump() << ", \"effects\": " << eff.dump()
       << ", \"costs\": " << costs.dump() << "}";
  }
  os << (m.actions.empty() ? "]" : "\n  ]");
  if (m.num_observations != 1) {
    os << ",\n  \"obs_fn\": [";
    const auto na = m.actions.size();
    bool first = true;
    for (StateId s = 0; s < m.num_states; ++s) {
      for (ActionId a = 0; a < na; ++a) {
        os << (first ? "" : ",") << (a == 0 ? "\n    " : " ") << '[' << s << ',' << a << ',' << m.obs_fn[s * na + a] << ']';
        first = false;
      }
    }
    os << "\n  ]";
  }
  os << "\n}\n";
  return os.str();
}

inline DetPomdp load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

/// 64-bit FNV-1a digest of the canonical document, as 16 hex digits.
inline std::string model_hash(const DetPomdp& m) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : save_model(m)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace detpomdp
