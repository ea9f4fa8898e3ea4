#pragma once

// Policy documents:
//
//   {"criterion": "minmax", "value": "2", "model_hash": "…16 hex digits…",
//    "entries": [{"belief": [0, 1], "action": "right"}, ...]}
//
// Set beliefs are state lists; distribution beliefs are [[state, p], ...]
// lists with probabilities written with 17 significant digits.

#include "detpomdp/model_io.hpp"
#include "detpomdp/solvers.hpp"

namespace detpomdp {

namespace io_detail {

inline json belief_to_json(const SetBelief& b) { return json(b.support().to_vector()); }

inline json belief_to_json(const DistBelief& b) {
  json arr = json::array();
  for (std::size_t k = 0; k < b.size(); ++k) arr.push_back(json::array({b.states()[k], b.probs()[k]}));
  return arr;
}

inline SetBelief belief_from_json(const json& v, const DetPomdp& m, const std::string& path, SetBelief*) {
  StateSet s(m.num_states);
  const auto& arr = as_array(v, path);
  for (std::size_t k = 0; k < arr.size(); ++k) s.set(as_index(arr[k], path_at(path, k), m.num_states));
  if (s.empty()) throw FormatError(path + ": empty belief");
  return SetBelief(std::move(s));
}

inline DistBelief belief_from_json(const json& v, const DetPomdp& m, const std::string& path, DistBelief*) {
  std::vector<std::pair<StateId, double>> entries;
  const auto& arr = as_array(v, path);
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const auto p = path_at(path, k);
    if (!arr[k].is_array() || arr[k].size() != 2 || !arr[k][1].is_number())
      throw FormatError(p + ": expected [state, probability]");
    entries.emplace_back(static_cast<StateId>(as_index(arr[k][0], p + "[0]", m.num_states)), arr[k][1].get<double>());
  }
  try {
    return DistBelief(m.num_states, std::move(entries));
  } catch (const std::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace io_detail

template <CriterionType C>
std::string save_policy(const DetPomdp& m, const Policy<typename C::belief_type>& pi, const typename C::cost_type& value) {
  using io_detail::json;
  std::ostringstream os;
  os << "{\n";
  os << "  \"criterion\": " << json(std::string(C::name)).dump() << ",\n";
  os << "  \"value\": " << json(format_value(value)).dump() << ",\n";
  os << "  \"model_hash\": " << json(model_hash(m)).dump() << ",\n";
  os << "  \"entries\": [";
  bool first = true;
  for (const auto& [b, a] : pi.entries()) {
    os << (first ? "\n" : ",\n") << "    {\"belief\": " << io_detail::belief_to_json(b).dump()
       << ", \"action\": " << json(m.actions[a].name).dump() << "}";
    first = false;
  }
  os << (first ? "]" : "\n  ]") << "\n}\n";
  return os.str();
}

template <CriterionType C>
struct PolicyDocument {
  Policy<typename C::belief_type> policy;
  std::string recorded_value;
};

/// Parses a policy for model m. Throws FormatError on malformed documents,
/// a criterion mismatch, unknown actions, or a different model hash.
template <CriterionType C>
PolicyDocument<C> load_policy(const std::string& text, const DetPomdp& m) {
  using namespace io_detail;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("parse error: ") + e.what());
  }
  const auto& crit = field(doc, "criterion", "policy");
  if (!crit.is_string() || crit.get<std::string>() != C::name)
    throw FormatError("policy.criterion: expected \"" + std::string(C::name) + "\"");
  const auto& hash = field(doc, "model_hash", "policy");
  if (!hash.is_string() || hash.get<std::string>() != model_hash(m))
    throw FormatError("policy.model_hash: policy was computed for a different model");
  PolicyDocument<C> out;
  const auto& value = field(doc, "value", "policy");
  if (!value.is_string()) throw FormatError("policy.value: expected a string");
  out.recorded_value = value.get<std::string>();
  const auto& entries = as_array(field(doc, "entries", "policy"), "policy.entries");
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto p = path_at("policy.entries", k);
    auto b = belief_from_json(field(entries[k], "belief", p), m, p + ".belief",
                              static_cast<typename C::belief_type*>(nullptr));
    const auto& name = field(entries[k], "action", p);
    if (!name.is_string()) throw FormatError(p + ".action: expected a string");
    auto a = m.find_action(name.get<std::string>());
    if (!a) throw FormatError(p + ".action: unknown action '" + name.get<std::string>() + "'");
    out.policy.set(b, *a);
  }
  return out;
}

}  // namespace detpomdp
