#pragma once

// Shared fixtures and independent reference implementations for the tests.
// The oracles here deliberately avoid the library's belief and solver code:
// they work on std::set / std::map beliefs straight from the model tables.

#include "detpomdp/detpomdp.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

namespace testing_support {

using namespace detpomdp;

/// States {0,1,2}, goal {2}, one action "right": 0->1->2, unit costs.
inline DetPomdp make_m3(bool uniform_dist = false) {
  ModelBuilder mb(3, 1);
  const auto right = mb.add_action("right");
  mb.transition(0, right, 1).transition(1, right, 2).goal(2);
  if (uniform_dist)
    mb.initial_dist({{0, 0.5}, {1, 0.5}});
  else
    mb.initial_set({0, 1});
  return mb.finish();
}

struct RandomModelOptions {
  std::size_t min_states = 2, max_states = 6;
  std::size_t max_actions = 3;
  std::size_t max_observations = 3;
  double applicable_prob = 0.8;
  bool rational_costs = true;
  bool distribution = false;
  std::size_t max_cost = 3;
};

/// Valid random model: absorbing goals, positive costs, random partial
/// applicability and observations, non-empty b0.
template <class Rng>
DetPomdp random_model(Rng& rng, const RandomModelOptions& o = {}) {
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  const auto n = pick(o.min_states, o.max_states);
  const auto na = pick(1, o.max_actions);
  const auto no = pick(1, o.max_observations);
  ModelBuilder mb(n, no);
  std::vector<bool> goal(n, false);
  goal[pick(0, n - 1)] = true;
  for (StateId s = 0; s < n; ++s)
    if (coin(0.15)) goal[s] = true;
  for (StateId s = 0; s < n; ++s)
    if (goal[s]) mb.goal(s);
  for (std::size_t a = 0; a < na; ++a) {
    const auto id = mb.add_action("a" + std::to_string(a));
    for (StateId s = 0; s < n; ++s) {
      if (goal[s] || !coin(o.applicable_prob)) continue;
      Rational c(static_cast<std::int64_t>(pick(1, o.max_cost)));
      if (o.rational_costs && coin(0.2)) c = Rational(static_cast<std::int64_t>(pick(1, 5)), 2);
      mb.transition(s, id, static_cast<StateId>(pick(0, n - 1)), c);
    }
    for (StateId s = 0; s < n; ++s) mb.observation(s, id, static_cast<ObsId>(pick(0, no - 1)));
  }
  std::vector<StateId> init;
  for (StateId s = 0; s < n; ++s)
    if (coin(0.5)) init.push_back(s);
  if (init.empty()) init.push_back(static_cast<StateId>(pick(0, n - 1)));
  if (o.distribution) {
    std::vector<double> w;
    double total = 0;
    for (std::size_t k = 0; k < init.size(); ++k) {
      w.push_back(static_cast<double>(pick(1, 4)));
      total += w.back();
    }
    std::vector<std::pair<StateId, double>> probs;
    double acc = 0;
    for (std::size_t k = 0; k < init.size(); ++k) {
      const double p = k + 1 == init.size() ? 1.0 - acc : w[k] / total;
      acc += p;
      probs.emplace_back(init[k], p);
    }
    mb.initial_dist(probs);
  } else {
    mb.initial_set(init);
  }
  return mb.finish();
}

// ---------------------------------------------------------------------------
// Reference minmax / minexp values by depth-bounded Bellman-Ford over beliefs
// ---------------------------------------------------------------------------

using RefSet = std::set<StateId>;
using RefDist = std::map<StateId, double>;

inline bool ref_applicable(const DetPomdp& m, const RefSet& b, ActionId a) {
  for (auto s : b)
    if (!m.actions[a].applicable.test(s)) return false;
  return true;
}

/// Successor set beliefs of b under a, keyed by observation.
inline std::map<ObsId, RefSet> ref_successors(const DetPomdp& m, const RefSet& b, ActionId a) {
  std::map<ObsId, RefSet> out;
  for (auto s : b) {
    const StateId t = *m.actions[a].effects[s];
    out[m.obs_fn[t * m.num_actions() + a]].insert(t);
  }
  return out;
}

inline bool ref_target(const DetPomdp& m, const RefSet& b) {
  for (auto s : b)
    if (!m.goal.test(s)) return false;
  return true;
}

/// Optimal minmax value V*(b0) as a double (infinity when none is finite).
/// V_k(b) is the best worst-case cost over policy trees of depth <= k; with
/// positive costs optimal policies are acyclic, so k = #beliefs suffices.
inline double reference_minmax(const DetPomdp& m) {
  std::vector<RefSet> beliefs;
  std::map<RefSet, std::size_t> index;
  RefSet b0;
  for (auto s : m.initial_support()) b0.insert(s);
  index[b0] = 0;
  beliefs.push_back(b0);
  for (std::size_t k = 0; k < beliefs.size(); ++k) {
    const RefSet b = beliefs[k];
    if (ref_target(m, b)) continue;
    for (ActionId a = 0; a < m.num_actions(); ++a) {
      if (!ref_applicable(m, b, a)) continue;
      for (auto& [o, child] : ref_successors(m, b, a))
        if (!index.count(child)) {
          index[child] = beliefs.size();
          beliefs.push_back(child);
        }
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> v(beliefs.size(), inf);
  for (std::size_t k = 0; k < beliefs.size(); ++k)
    if (ref_target(m, beliefs[k])) v[k] = 0;
  for (std::size_t iter = 0; iter <= beliefs.size(); ++iter) {
    std::vector<double> next = v;
    for (std::size_t k = 0; k < beliefs.size(); ++k) {
      if (ref_target(m, beliefs[k])) continue;
      double best = inf;
      for (ActionId a = 0; a < m.num_actions(); ++a) {
        if (!ref_applicable(m, beliefs[k], a)) continue;
        double c = 0;
        for (auto s : beliefs[k]) c = std::max(c, to_double(*m.actions[a].costs[s]));
        double worst = 0;
        for (auto& [o, child] : ref_successors(m, beliefs[k], a)) worst = std::max(worst, v[index.at(child)]);
        best = std::min(best, c + worst);
      }
      next[k] = best;
    }
    v = next;
  }
  return v[0];
}

/// Same scheme for expected cost over distributions (b0 as given, a set read
/// as uniform). Beliefs are identified by rounded probabilities.
inline double reference_minexp(const DetPomdp& m) {
  using Key = std::vector<std::pair<StateId, long long>>;
  auto key_of = [](const RefDist& d) {
    Key k;
    for (auto [s, p] : d) k.emplace_back(s, std::llround(p * 1e12));
    return k;
  };
  RefDist b0;
  if (auto* set = std::get_if<InitialSet>(&m.initial)) {
    for (auto s : set->states) b0[s] = 1.0 / static_cast<double>(set->states.size());
  } else {
    for (auto [s, p] : std::get<InitialDist>(m.initial).probs) b0[s] += p;
  }
  auto target = [&](const RefDist& d) {
    for (auto& [s, p] : d)
      if (!m.goal.test(s)) return false;
    return true;
  };
  auto applicable = [&](const RefDist& d, ActionId a) {
    for (auto& [s, p] : d)
      if (!m.actions[a].applicable.test(s)) return false;
    return true;
  };
  // Successors with their observation probabilities.
  auto succ = [&](const RefDist& d, ActionId a) {
    std::map<ObsId, RefDist> parts;
    for (auto [s, p] : d) {
      const StateId t = *m.actions[a].effects[s];
      parts[m.obs_fn[t * m.num_actions() + a]][t] += p;
    }
    std::vector<std::pair<double, RefDist>> out;
    for (auto& [o, part] : parts) {
      double mass = 0;
      for (auto& [s, p] : part) mass += p;
      for (auto& [s, p] : part) p /= mass;
      out.emplace_back(mass, part);
    }
    return out;
  };
  std::vector<RefDist> beliefs{b0};
  std::map<Key, std::size_t> index{{key_of(b0), 0}};
  for (std::size_t k = 0; k < beliefs.size(); ++k) {
    const RefDist b = beliefs[k];
    if (target(b)) continue;
    for (ActionId a = 0; a < m.num_actions(); ++a) {
      if (!applicable(b, a)) continue;
      for (auto& [p, child] : succ(b, a))
        if (!index.count(key_of(child))) {
          index[key_of(child)] = beliefs.size();
          beliefs.push_back(child);
        }
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> v(beliefs.size(), inf);
  for (std::size_t k = 0; k < beliefs.size(); ++k)
    if (target(beliefs[k])) v[k] = 0;
  for (std::size_t iter = 0; iter <= beliefs.size(); ++iter) {
    std::vector<double> next = v;
    for (std::size_t k = 0; k < beliefs.size(); ++k) {
      if (target(beliefs[k])) continue;
      double best = inf;
      for (ActionId a = 0; a < m.num_actions(); ++a) {
        if (!applicable(beliefs[k], a)) continue;
        double q = 0;
        for (auto [s, p] : beliefs[k]) q += p * to_double(*m.actions[a].costs[s]);
        for (auto& [p, child] : succ(beliefs[k], a)) q += p * v[index.at(key_of(child))];
        best = std::min(best, q);
      }
      next[k] = best;
    }
    v = next;
  }
  return v[0];
}

/// Truth-table satisfiability.
inline bool truth_table_sat(const Cnf& f) {
  for (std::uint64_t asg = 0; asg < (std::uint64_t{1} << f.num_vars); ++asg) {
    bool all = true;
    for (const auto& c : f.clauses) {
      bool sat = false;
      for (int lit : c) {
        const bool val = (asg >> (std::abs(lit) - 1)) & 1;
        if ((lit > 0) == val) sat = true;
      }
      if (!sat) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

/// Every element of <generators>, by breadth-first closure.
inline std::set<Permutation> bfs_closure(const std::vector<Permutation>& generators, std::size_t n) {
  std::set<Permutation> seen{Permutation::identity(n)};
  std::vector<Permutation> frontier{Permutation::identity(n)};
  while (!frontier.empty()) {
    auto p = frontier.back();
    frontier.pop_back();
    for (const auto& g : generators) {
      auto q = p.then(g);
      if (seen.insert(q).second) frontier.push_back(q);
    }
  }
  return seen;
}

template <class Rng>
Permutation random_permutation(std::size_t n, Rng& rng) {
  std::vector<StateId> v(n);
  std::iota(v.begin(), v.end(), StateId{0});
  std::shuffle(v.begin(), v.end(), rng);
  return Permutation::from_images(v);
}

/// Fewest weighings that identify the odd coin and its direction among n
/// coins in the worst case, by exhaustive search over every pan assignment.
/// Candidates are (coin, heavy?) pairs; independent of the coins generator.
inline int coins_weighings_oracle(std::size_t n) {
  using Cand = std::pair<std::size_t, bool>;
  std::map<std::set<Cand>, int> memo;
  // Pan assignments: each coin left (1), right (2) or off (0), equal counts.
  std::vector<std::vector<int>> weighings;
  std::vector<int> pans(n, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == n) {
      const auto l = std::count(pans.begin(), pans.end(), 1), r = std::count(pans.begin(), pans.end(), 2);
      if (l == r && l > 0) weighings.push_back(pans);
      return;
    }
    for (int v = 0; v < 3; ++v) {
      pans[i] = v;
      rec(i + 1);
    }
  };
  rec(0);
  std::function<int(const std::set<Cand>&)> solve = [&](const std::set<Cand>& cands) -> int {
    if (cands.size() <= 1) return 0;
    if (auto it = memo.find(cands); it != memo.end()) return it->second;
    int best = 1 << 20;
    for (const auto& w : weighings) {
      std::array<std::set<Cand>, 3> parts;  // balanced, left heavy, right heavy
      for (const auto& [c, heavy] : cands) {
        int outcome = 0;
        if (w[c] == 1) outcome = heavy ? 1 : 2;
        if (w[c] == 2) outcome = heavy ? 2 : 1;
        parts[outcome].insert({c, heavy});
      }
      int worst = 0;
      bool progress = true;
      for (const auto& p : parts) {
        if (p.size() == cands.size()) progress = false;
      }
      if (!progress) continue;
      for (const auto& p : parts) worst = std::max(worst, solve(p));
      best = std::min(best, 1 + worst);
    }
    memo[cands] = best;
    return best;
  };
  std::set<Cand> all;
  for (std::size_t c = 0; c < n; ++c) {
    all.insert({c, true});
    all.insert({c, false});
  }
  return solve(all);
}

/// Model files generated for the tests (see tests/corpus).
inline std::vector<std::filesystem::path> corpus_files() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(DETPOMDP_CORPUS_DIR))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace testing_support
