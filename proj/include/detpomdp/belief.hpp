#pragma once

// Belief dynamics: applicable actions, progression b -> b_a, observation
// filtering b_a -> b_a^o, for set beliefs (worst case) and distributions
// (expected cost), plus the table representation of reachable distributions.

#include "detpomdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

namespace detpomdp {

// ---------------------------------------------------------------------------
// Belief representations
// ---------------------------------------------------------------------------

/// Non-empty set of possible states.
class SetBelief {
 public:
  explicit SetBelief(StateSet states) : states_(std::move(states)) {
    if (states_.empty()) throw std::invalid_argument("SetBelief must be non-empty");
  }

  const StateSet& support() const noexcept { return states_; }
  std::size_t size() const noexcept { return states_.count(); }

  friend bool operator==(const SetBelief& a, const SetBelief& b) { return a.states_ == b.states_; }
  std::size_t hash() const noexcept { return states_.hash(); }

 private:
  StateSet states_;
};

/// Probability distribution over states; only positive entries are stored.
/// Identity (==, hash) uses the support plus probabilities rounded to 12
/// decimal digits, so that float noise does not duplicate beliefs.
class DistBelief {
 public:
  static constexpr double kRoundingScale = 1e12;
  static constexpr double kSumTolerance = 1e-9;

  /// Builds from (state, probability) pairs; duplicate states are summed and
  /// zero entries dropped. Probabilities must sum to one within 1e-9.
  DistBelief(std::size_t universe, std::vector<std::pair<StateId, double>> entries) : support_(universe) {
    std::sort(entries.begin(), entries.end());
    double sum = 0;
    for (std::size_t k = 0; k < entries.size();) {
      auto s = entries[k].first;
      double p = 0;
      for (; k < entries.size() && entries[k].first == s; ++k) p += entries[k].second;
      if (p < 0) throw std::invalid_argument("negative probability");
      if (p == 0) continue;
      if (s >= universe) throw std::invalid_argument("state out of range");
      support_.set(s);
      states_.push_back(s);
      probs_.push_back(p);
      sum += p;
    }
    if (states_.empty()) throw std::invalid_argument("DistBelief must be non-empty");
    if (std::abs(sum - 1.0) > kSumTolerance) throw std::invalid_argument("probabilities sum to " + std::to_string(sum));
    keys_.reserve(probs_.size());
    for (double p : probs_) keys_.push_back(std::llround(p * kRoundingScale));
  }

  /// Uniform distribution over a non-empty set.
  static DistBelief uniform(const StateSet& states) {
    std::vector<std::pair<StateId, double>> e;
    const double p = 1.0 / static_cast<double>(states.count());
    for (auto s : states) e.emplace_back(s, p);
    return normalized(states.universe(), std::move(e));
  }

  /// Builds from unnormalized non-negative weights.
  static DistBelief normalized(std::size_t universe, std::vector<std::pair<StateId, double>> weights) {
    double total = 0;
    for (const auto& w : weights) total += w.second;
    if (!(total > 0)) throw std::invalid_argument("DistBelief must be non-empty");
    for (auto& w : weights) w.second /= total;
    return DistBelief(universe, std::move(weights));
  }

  const StateSet& support() const noexcept { return support_; }
  std::size_t size() const noexcept { return states_.size(); }
  const std::vector<StateId>& states() const noexcept { return states_; }
  const std::vector<double>& probs() const noexcept { return probs_; }

  double prob(StateId s) const {
    auto it = std::lower_bound(states_.begin(), states_.end(), s);
    return (it != states_.end() && *it == s) ? probs_[static_cast<std::size_t>(it - states_.begin())] : 0.0;
  }

  friend bool operator==(const DistBelief& a, const DistBelief& b) {
    return a.support_ == b.support_ && a.keys_ == b.keys_;
  }
  std::size_t hash() const noexcept {
    std::size_t h = support_.hash();
    for (auto k : keys_) h = (h ^ static_cast<std::size_t>(k)) * 0x100000001b3ull;
    return h;
  }

 private:
  StateSet support_;
  std::vector<StateId> states_;
  std::vector<double> probs_;
  std::vector<std::int64_t> keys_;
};

inline std::ostream& operator<<(std::ostream& os, const SetBelief& b) { return os << b.support(); }

inline std::ostream& operator<<(std::ostream& os, const DistBelief& b) {
  os << '{';
  for (std::size_t k = 0; k < b.size(); ++k) os << (k ? "," : "") << b.states()[k] << ':' << b.probs()[k];
  return os << '}';
}

template <class B>
concept BeliefType = std::same_as<B, SetBelief> || std::same_as<B, DistBelief>;

// ---------------------------------------------------------------------------
// Initial beliefs
// ---------------------------------------------------------------------------

/// Set view of b0; a distribution contributes its support.
inline SetBelief initial_set_belief(const DetPomdp& m) { return SetBelief(m.initial_support()); }

/// Distribution view of b0; a set belief is read as uniform over its members.
inline DistBelief initial_dist_belief(const DetPomdp& m) {
  if (const auto* d = std::get_if<InitialDist>(&m.initial)) return DistBelief(m.num_states, d->probs);
  return DistBelief::uniform(m.initial_support());
}

template <BeliefType B>
B initial_belief(const DetPomdp& m) {
  if constexpr (std::same_as<B, SetBelief>)
    return initial_set_belief(m);
  else
    return initial_dist_belief(m);
}

// ---------------------------------------------------------------------------
// Dynamics
// ---------------------------------------------------------------------------

/// Actions applicable at every state of the support, ascending. Empty at dead ends.
inline std::vector<ActionId> applicable_actions(const DetPomdp& m, const StateSet& support) {
  std::vector<ActionId> out;
  for (ActionId a = 0; a < m.num_actions(); ++a)
    if (support.is_subset_of(m.actions[a].applicable)) out.push_back(a);
  return out;
}

template <BeliefType B>
std::vector<ActionId> applicable_actions(const DetPomdp& m, const B& b) {
  return applicable_actions(m, b.support());
}

inline void require_applicable(const DetPomdp& m, const StateSet& support, ActionId a) {
  if (a >= m.num_actions()) throw std::out_of_range("action index " + std::to_string(a) + " out of range");
  const auto& app = m.actions[a].applicable;
  if (support.is_subset_of(app)) return;
  for (auto s : support)
    if (!app.test(s)) throw PreconditionError(a, s);
}

/// b_a: image of the support (sets) or push-forward of the mass (distributions).
inline SetBelief progress(const DetPomdp& m, const SetBelief& b, ActionId a) {
  require_applicable(m, b.support(), a);
  StateSet out(m.num_states);
  for (auto s : b.support()) out.set(m.effect(s, a));
  return SetBelief(std::move(out));
}

inline DistBelief progress(const DetPomdp& m, const DistBelief& b, ActionId a) {
  require_applicable(m, b.support(), a);
  std::vector<std::pair<StateId, double>> e;
  e.reserve(b.size());
  for (std::size_t k = 0; k < b.size(); ++k) e.emplace_back(m.effect(b.states()[k], a), b.probs()[k]);
  return DistBelief(m.num_states, std::move(e));
}

/// Observations o(i, a) over i in sup(b_a), ascending.
template <BeliefType B>
std::vector<ObsId> observation_set(const DetPomdp& m, const B& b, ActionId a) {
  const auto ba = progress(m, b, a);
  std::vector<ObsId> obs;
  for (auto s : ba.support()) obs.push_back(m.observation(s, a));
  std::sort(obs.begin(), obs.end());
  obs.erase(std::unique(obs.begin(), obs.end()), obs.end());
  return obs;
}

/// Probability b_a(o) of each observation, ascending by observation.
inline std::vector<std::pair<ObsId, double>> observation_probs(const DetPomdp& m, const DistBelief& b, ActionId a) {
  const auto ba = progress(m, b, a);
  std::vector<std::pair<ObsId, double>> out;
  for (std::size_t k = 0; k < ba.size(); ++k) {
    const ObsId o = m.observation(ba.states()[k], a);
    auto it = std::lower_bound(out.begin(), out.end(), o, [](const auto& e, ObsId x) { return e.first < x; });
    if (it != out.end() && it->first == o)
      it->second += ba.probs()[k];
    else
      out.insert(it, {o, ba.probs()[k]});
  }
  return out;
}

/// b_a^o: the states of b_a consistent with observing o after a.
inline SetBelief filter(const DetPomdp& m, const SetBelief& ba, ActionId a, ObsId o) {
  StateSet out(m.num_states);
  for (auto s : ba.support())
    if (m.observation(s, a) == o) out.set(s);
  if (out.empty()) throw ImpossibleObservation("observation " + std::to_string(o) + " is inconsistent with every state");
  return SetBelief(std::move(out));
}

inline DistBelief filter(const DetPomdp& m, const DistBelief& ba, ActionId a, ObsId o) {
  std::vector<std::pair<StateId, double>> e;
  for (std::size_t k = 0; k < ba.size(); ++k)
    if (m.observation(ba.states()[k], a) == o) e.emplace_back(ba.states()[k], ba.probs()[k]);
  if (e.empty()) throw ImpossibleObservation("observation " + std::to_string(o) + " is inconsistent with every state");
  return DistBelief::normalized(m.num_states, std::move(e));
}

/// One possible result of applying an action: the observation, the filtered
/// belief and, for distributions, the observation's probability.
template <BeliefType B>
struct Outcome {
  ObsId observation;
  B belief;
  std::optional<double> probability;
};

/// All filtered successors of (b, a), ascending by observation. Their supports
/// partition sup(b_a).
inline std::vector<Outcome<SetBelief>> successors(const DetPomdp& m, const SetBelief& b, ActionId a) {
  require_applicable(m, b.support(), a);
  std::vector<std::pair<ObsId, StateSet>> parts;
  for (auto s : b.support()) {
    const StateId t = m.effect(s, a);
    const ObsId o = m.observation(t, a);
    auto it = std::lower_bound(parts.begin(), parts.end(), o, [](const auto& e, ObsId x) { return e.first < x; });
    if (it == parts.end() || it->first != o) it = parts.insert(it, {o, StateSet(m.num_states)});
    it->second.set(t);
  }
  std::vector<Outcome<SetBelief>> out;
  out.reserve(parts.size());
  for (auto& [o, set] : parts) out.push_back({o, SetBelief(std::move(set)), std::nullopt});
  return out;
}

inline std::vector<Outcome<DistBelief>> successors(const DetPomdp& m, const DistBelief& b, ActionId a) {
  const auto ba = progress(m, b, a);
  std::vector<std::pair<ObsId, std::vector<std::pair<StateId, double>>>> parts;
  for (std::size_t k = 0; k < ba.size(); ++k) {
    const ObsId o = m.observation(ba.states()[k], a);
    auto it = std::lower_bound(parts.begin(), parts.end(), o, [](const auto& e, ObsId x) { return e.first < x; });
    if (it == parts.end() || it->first != o) it = parts.insert(it, {o, {}});
    it->second.emplace_back(ba.states()[k], ba.probs()[k]);
  }
  std::vector<Outcome<DistBelief>> out;
  out.reserve(parts.size());
  for (auto& [o, entries] : parts) {
    double mass = 0;
    for (const auto& e : entries) mass += e.second;
    out.push_back({o, DistBelief::normalized(m.num_states, std::move(entries)), mass});
  }
  return out;
}

/// True iff the support lies inside the goal set.
template <BeliefType B>
bool is_target(const DetPomdp& m, const B& b) {
  return b.support().is_subset_of(m.goal);
}

// ---------------------------------------------------------------------------
// Table representation: entry i is the current state had the initial state
// been i, or empty once i has been ruled out.
// ---------------------------------------------------------------------------

class LittmanTable {
 public:
  explicit LittmanTable(std::vector<std::optional<StateId>> entries) : entries_(std::move(entries)) {}

  std::size_t size() const noexcept { return entries_.size(); }
  const std::optional<StateId>& operator[](StateId i) const { return entries_[i]; }
  const std::vector<std::optional<StateId>>& entries() const noexcept { return entries_; }

  friend bool operator==(const LittmanTable&, const LittmanTable&) = default;

 private:
  std::vector<std::optional<StateId>> entries_;
};

inline LittmanTable table_init(const DetPomdp& m) {
  const auto support = m.initial_support();
  std::vector<std::optional<StateId>> e(m.num_states);
  for (auto s : support) e[s] = s;
  return LittmanTable(std::move(e));
}

inline LittmanTable table_step(const DetPomdp& m, const LittmanTable& t, ActionId a, ObsId o) {
  std::vector<std::optional<StateId>> e(t.size());
  bool any = false;
  for (StateId i = 0; i < t.size(); ++i) {
    if (!t[i]) continue;
    const StateId cur = *t[i];
    if (!m.applicable(cur, a)) throw PreconditionError(a, cur);
    const StateId next = m.effect(cur, a);
    if (m.observation(next, a) != o) continue;
    e[i] = next;
    any = true;
  }
  if (!any) throw ImpossibleObservation("table step leaves no consistent initial state");
  return LittmanTable(std::move(e));
}

/// b(i) proportional to the initial mass of the states j with t(j) = i.
inline DistBelief table_to_belief(const DetPomdp& m, const LittmanTable& t) {
  const auto b0 = initial_dist_belief(m);
  std::vector<std::pair<StateId, double>> w;
  for (StateId j = 0; j < t.size(); ++j)
    if (t[j]) w.emplace_back(*t[j], b0.prob(j));
  return DistBelief::normalized(m.num_states, std::move(w));
}

}  // namespace detpomdp

template <>
struct std::hash<detpomdp::SetBelief> {
  std::size_t operator()(const detpomdp::SetBelief& b) const noexcept { return b.hash(); }
};

template <>
struct std::hash<detpomdp::DistBelief> {
  std::size_t operator()(const detpomdp::DistBelief& b) const noexcept { return b.hash(); }
};
