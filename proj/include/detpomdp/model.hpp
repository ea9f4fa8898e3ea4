#pragma once

#include "detpomdp/core.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace detpomdp {

/// Initial belief given as a plain set of possible states.
struct InitialSet {
  std::vector<StateId> states;
};

/// Initial belief given as a probability distribution (state, probability).
struct InitialDist {
  std::vector<std::pair<StateId, double>> probs;
};

using InitialBelief = std::variant<InitialSet, InitialDist>;

/// One action of a flat model. `effects` and `costs` are indexed by state and
/// are expected to be engaged exactly where `applicable` holds.
struct Action {
  std::string name;
  StateSet applicable;
  std::vector<std::optional<StateId>> effects;
  std::vector<std::optional<Rational>> costs;
};

/// Deterministic POMDP: deterministic transitions and observations, uncertain
/// initial state. Treated as immutable once built; every algorithm in the
/// library takes it by const reference.
struct DetPomdp {
  std::size_t num_states = 0;
  std::size_t num_observations = 1;
  std::vector<Action> actions;
  /// o(i, a), laid out as obs_fn[i * num_actions() + a].
  std::vector<ObsId> obs_fn;
  StateSet goal;
  InitialBelief initial = InitialSet{};

  std::size_t num_actions() const noexcept { return actions.size(); }

  bool applicable(StateId s, ActionId a) const { return actions[a].applicable.test(s); }

  StateId effect(StateId s, ActionId a) const {
    const auto& e = actions[a].effects[s];
    if (!e) throw PreconditionError(a, s);
    return *e;
  }

  const Rational& cost(StateId s, ActionId a) const {
    const auto& c = actions[a].costs[s];
    if (!c) throw PreconditionError(a, s);
    return *c;
  }

  ObsId observation(StateId s, ActionId a) const { return obs_fn[s * actions.size() + a]; }

  bool is_goal(StateId s) const { return goal.test(s); }

  bool unobservable() const noexcept { return num_observations == 1; }

  /// Support of the initial belief.
  StateSet initial_support() const {
    StateSet s(num_states);
    if (const auto* set = std::get_if<InitialSet>(&initial)) {
      for (auto i : set->states)
        if (i < num_states) s.set(i);
    } else {
      for (const auto& [i, p] : std::get<InitialDist>(initial).probs)
        if (i < num_states && p > 0) s.set(i);
    }
    return s;
  }

  std::optional<ActionId> find_action(const std::string& name) const {
    for (ActionId a = 0; a < actions.size(); ++a)
      if (actions[a].name == name) return a;
    return std::nullopt;
  }
};

// ---------------------------------------------------------------------------
// Construction helper
// ---------------------------------------------------------------------------

/// Incremental builder used by the generators and tests. Goal states are made
/// absorbing automatically when `finish()` is called with `close_goals`.
class ModelBuilder {
 public:
  ModelBuilder(std::size_t num_states, std::size_t num_observations) {
    model_.num_states = num_states;
    model_.num_observations = num_observations;
    model_.goal = StateSet(num_states);
  }

  ActionId add_action(std::string name) {
    Action act;
    act.name = std::move(name);
    act.applicable = StateSet(model_.num_states);
    act.effects.assign(model_.num_states, std::nullopt);
    act.costs.assign(model_.num_states, std::nullopt);
    model_.actions.push_back(std::move(act));
    return static_cast<ActionId>(model_.actions.size() - 1);
  }

  ModelBuilder& transition(StateId s, ActionId a, StateId to, Rational cost = Rational(1)) {
    auto& act = model_.actions.at(a);
    act.applicable.set(s);
    act.effects.at(s) = to;
    act.costs.at(s) = cost;
    return *this;
  }

  ModelBuilder& goal(StateId s) {
    model_.goal.set(s);
    return *this;
  }

  ModelBuilder& initial_set(std::vector<StateId> states) {
    model_.initial = InitialSet{std::move(states)};
    return *this;
  }

  ModelBuilder& initial_dist(std::vector<std::pair<StateId, double>> probs) {
    model_.initial = InitialDist{std::move(probs)};
    return *this;
  }

  /// Sets o(s, a); unset entries default to observation 0.
  ModelBuilder& observation(StateId s, ActionId a, ObsId o) {
    obs_overrides_[{s, a}] = o;
    return *this;
  }

  DetPomdp finish(bool close_goals = true) {
    if (close_goals) {
      for (auto t : model_.goal)
        for (ActionId a = 0; a < model_.actions.size(); ++a) transition(t, a, t, Rational(0));
    }
    model_.obs_fn.assign(model_.num_states * model_.actions.size(), 0);
    for (const auto& [key, o] : obs_overrides_)
      model_.obs_fn.at(key.first * model_.actions.size() + key.second) = o;
    return model_;
  }

 private:
  DetPomdp model_;
  std::map<std::pair<StateId, ActionId>, ObsId> obs_overrides_;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
  std::string code;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

/// Lists every invariant violation of the model; an empty report means valid.
/// Never throws on malformed input.
inline ValidationReport validate(const DetPomdp& m) {
  ValidationReport report;
  auto add = [&](std::string code, std::string msg) { report.push_back({std::move(code), std::move(msg)}); };
  const auto n = m.num_states;
  const auto na = m.actions.size();

  if (n == 0) add("num-states", "model has no states");
  if (m.num_observations == 0) add("num-observations", "model has no observations");
  if (m.goal.universe() != n) {
    add("goal-universe", "goal set is not over the model's states");
    return report;
  }

  for (ActionId a = 0; a < na; ++a) {
    const auto& act = m.actions[a];
    const std::string where = "action " + std::to_string(a) + " ('" + act.name + "')";
    if (act.applicable.universe() != n || act.effects.size() != n || act.costs.size() != n) {
      add("action-shape", where + ": tables are not sized to the state space");
      continue;
    }
    for (StateId s = 0; s < n; ++s) {
      const std::string at = where + " at state " + std::to_string(s);
      const bool app = act.applicable.test(s);
      const auto& e = act.effects[s];
      const auto& c = act.costs[s];
      if (app && !e) add("effect-missing", at + ": applicable but no effect");
      if (!app && e) add("effect-on-inapplicable", at + ": effect defined on inapplicable pair");
      if (app && !c) add("cost-missing", at + ": applicable but no cost");
      if (!app && c) add("cost-on-inapplicable", at + ": cost defined on inapplicable pair");
      if (e && *e >= n) add("effect-range", at + ": effect " + std::to_string(*e) + " out of range");
      if (m.goal.test(s)) {
        if (!app) add("goal-not-applicable", at + ": goal state must admit every action");
        else if (e && *e != s) add("goal-not-absorbing", at + ": goal state is not absorbing");
        if (c && *c != Rational(0)) add("goal-cost-nonzero", at + ": nonzero cost on goal state");
      } else if (app && c && *c <= Rational(0)) {
        add("nonpositive-cost", at + ": cost must be strictly positive");
      }
    }
  }

  if (m.obs_fn.size() != n * na) {
    add("obs-fn-size", "observation function must be total on states x actions");
  } else {
    for (std::size_t k = 0; k < m.obs_fn.size(); ++k)
      if (m.obs_fn[k] >= m.num_observations)
        add("obs-range", "observation " + std::to_string(m.obs_fn[k]) + " at state " + std::to_string(k / std::max<std::size_t>(na, 1)) +
                             ", action " + std::to_string(k % std::max<std::size_t>(na, 1)) + " out of range");
  }

  if (const auto* set = std::get_if<InitialSet>(&m.initial)) {
    if (set->states.empty()) add("initial-empty", "initial belief is empty");
    std::set<StateId> seen;
    for (auto s : set->states) {
      if (s >= n) add("initial-range", "initial state " + std::to_string(s) + " out of range");
      if (!seen.insert(s).second) add("initial-duplicate", "initial state " + std::to_string(s) + " listed twice");
    }
  } else {
    const auto& probs = std::get<InitialDist>(m.initial).probs;
    double sum = 0;
    std::set<StateId> seen;
    for (const auto& [s, p] : probs) {
      if (s >= n) add("initial-range", "initial state " + std::to_string(s) + " out of range");
      if (!(p > 0) || p > 1) add("initial-dist-prob", "probability of state " + std::to_string(s) + " must lie in (0,1]");
      if (!seen.insert(s).second) add("initial-duplicate", "initial state " + std::to_string(s) + " listed twice");
      sum += p;
    }
    if (probs.empty()) add("initial-empty", "initial belief is empty");
    else if (std::abs(sum - 1.0) > 1e-9) add("initial-dist-sum", "initial probabilities sum to " + std::to_string(sum));
  }
  return report;
}

inline bool is_valid(const DetPomdp& m) { return validate(m).empty(); }

/// Throws FormatError carrying the first violation when the model is invalid.
inline void require_valid(const DetPomdp& m) {
  auto report = validate(m);
  if (!report.empty())
    throw FormatError("invalid model (" + std::to_string(report.size()) + " violations): " + report.front().message);
}

// ---------------------------------------------------------------------------
// Global transition graph
// ---------------------------------------------------------------------------

/// Edge (i, j) iff some action applicable at i maps it to j; self-loops kept.
/// Adjacency lists are sorted and duplicate-free.
inline std::vector<std::vector<StateId>> transition_graph(const DetPomdp& m) {
  std::vector<std::vector<StateId>> adj(m.num_states);
  for (StateId s = 0; s < m.num_states; ++s) {
    for (ActionId a = 0; a < m.actions.size(); ++a)
      if (m.applicable(s, a)) adj[s].push_back(m.effect(s, a));
    std::sort(adj[s].begin(), adj[s].end());
    adj[s].erase(std::unique(adj[s].begin(), adj[s].end()), adj[s].end());
  }
  return adj;
}

/// Renames every state i to perm[i]. Used to check invariance of optimal values.
inline DetPomdp relabel_states(const DetPomdp& m, const std::vector<StateId>& perm) {
  const auto n = m.num_states;
  const auto na = m.actions.size();
  DetPomdp r = m;
  r.goal = StateSet(n);
  for (auto t : m.goal) r.goal.set(perm[t]);
  for (ActionId a = 0; a < na; ++a) {
    auto& act = r.actions[a];
    act.applicable = StateSet(n);
    act.effects.assign(n, std::nullopt);
    act.costs.assign(n, std::nullopt);
    for (StateId s = 0; s < n; ++s) {
      if (!m.applicable(s, a)) continue;
      act.applicable.set(perm[s]);
      act.effects[perm[s]] = perm[m.effect(s, a)];
      act.costs[perm[s]] = m.cost(s, a);
    }
  }
  for (StateId s = 0; s < n; ++s)
    for (ActionId a = 0; a < na; ++a) r.obs_fn[perm[s] * na + a] = m.obs_fn[s * na + a];
  if (const auto* set = std::get_if<InitialSet>(&m.initial)) {
    InitialSet init;
    for (auto s : set->states) init.states.push_back(perm[s]);
    std::sort(init.states.begin(), init.states.end());
    r.initial = init;
  } else {
    InitialDist init;
    for (auto [s, p] : std::get<InitialDist>(m.initial).probs) init.probs.emplace_back(perm[s], p);
    std::sort(init.probs.begin(), init.probs.end());
    r.initial = init;
  }
  return r;
}

}  // namespace detpomdp
