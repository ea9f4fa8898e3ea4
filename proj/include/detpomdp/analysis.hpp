#pragma once

// Structural analysis of models: permutation actions, policy-existence
// certificates for permutation models, sufficient conditions for polynomial
// diameter, exact diameter measurement, chunk profiles of plans, and the
// large-order unobservable instances whose plans are super-polynomially long.

#include "detpomdp/andor_graph.hpp"
#include "detpomdp/permutation.hpp"

#include <deque>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace detpomdp {

// ---------------------------------------------------------------------------
// Permutation actions
// ---------------------------------------------------------------------------

struct PermutationCheck {
  std::optional<Permutation> permutation;  ///< engaged iff the action is a permutation
  std::string reason;                      ///< why not, otherwise empty
  std::vector<StateId> witness;            ///< inapplicable state, or two preimages
  std::optional<StateId> image;            ///< the state hit twice

  explicit operator bool() const noexcept { return permutation.has_value(); }
};

/// The action as a permutation of S: applicable everywhere and f(., a) bijective.
inline PermutationCheck action_as_permutation(const DetPomdp& m, ActionId a) {
  PermutationCheck r;
  std::vector<std::optional<StateId>> preimage(m.num_states);
  std::vector<StateId> image(m.num_states);
  for (StateId s = 0; s < m.num_states; ++s) {
    if (!m.applicable(s, a)) {
      r.reason = "not applicable at state " + std::to_string(s);
      r.witness = {s};
      return r;
    }
    const StateId t = m.effect(s, a);
    if (preimage[t]) {
      r.reason = "state " + std::to_string(t) + " has two preimages {" + std::to_string(*preimage[t]) + "," +
                 std::to_string(s) + "}";
      r.witness = {*preimage[t], s};
      r.image = t;
      return r;
    }
    preimage[t] = s;
    image[s] = t;
  }
  r.permutation = Permutation::from_images(std::move(image));
  return r;
}

/// Every action as a permutation; throws WrongModelClass naming the first
/// action that is not one.
inline std::vector<Permutation> permutation_actions(const DetPomdp& m) {
  std::vector<Permutation> perms;
  for (ActionId a = 0; a < m.num_actions(); ++a) {
    auto check = action_as_permutation(m, a);
    if (!check)
      throw WrongModelClass("action '" + m.actions[a].name + "' is not a permutation with empty precondition: " +
                            check.reason);
    perms.push_back(std::move(*check.permutation));
  }
  return perms;
}

/// Certificate check for unobservable models whose actions are all
/// permutations with empty precondition: sigma maps sup(b0) into the goal
/// and is generated by the actions. A true result certifies that some
/// finite-cost plan exists; the plan itself is not produced.
inline bool pef_certificate_check(const DetPomdp& m, const Permutation& sigma) {
  if (!m.unobservable()) throw WrongModelClass("certificate check is implemented for unobservable models only");
  if (sigma.degree() != m.num_states) throw std::invalid_argument("permutation degree differs from the state count");
  const auto actions = permutation_actions(m);
  for (auto s : m.initial_support())
    if (!m.is_goal(sigma(s))) return false;
  return group_membership(actions, sigma);
}

// ---------------------------------------------------------------------------
// Diameter conditions
// ---------------------------------------------------------------------------

enum class DiameterVerdict {
  PolynomialByConstantSupport,
  PolynomialByAcyclicTM,
  BoundedCycleLengths,
  BoundedSupportMoves,
  Unknown,
};

inline std::string_view to_string(DiameterVerdict v) {
  switch (v) {
    case DiameterVerdict::PolynomialByConstantSupport: return "PolynomialByConstantSupport";
    case DiameterVerdict::PolynomialByAcyclicTM: return "PolynomialByAcyclicTM";
    case DiameterVerdict::BoundedCycleLengths: return "BoundedCycleLengths";
    case DiameterVerdict::BoundedSupportMoves: return "BoundedSupportMoves";
    case DiameterVerdict::Unknown: return "Unknown";
  }
  return "?";
}

struct DiameterOptions {
  std::size_t support_bound = 3;
  std::size_t cycle_bound = 3;
  std::size_t move_bound = 3;
};

struct DiameterReport {
  DiameterVerdict verdict = DiameterVerdict::Unknown;  ///< first condition that fired
  std::vector<DiameterVerdict> fired;                  ///< every condition that fired, in check order
  DiameterOptions options;

  std::size_t support_size = 0;
  std::vector<StateId> tm_cycle;  ///< a cycle of T_M other than a self-loop; empty when acyclic
  bool all_permutations = false;  ///< every action a permutation with empty precondition
  std::size_t max_cycle_length = 0;
  std::size_t max_moved = 0;

  bool has(DiameterVerdict v) const { return std::find(fired.begin(), fired.end(), v) != fired.end(); }
};

/// A directed cycle of length >= 2 in the graph, or empty if there is none.
inline std::vector<StateId> find_cycle_ignoring_self_loops(const std::vector<std::vector<StateId>>& adj) {
  const auto n = adj.size();
  std::vector<std::uint8_t> color(n, 0);
  std::vector<StateId> parent(n, 0);
  for (StateId root = 0; root < n; ++root) {
    if (color[root]) continue;
    std::vector<std::pair<StateId, std::size_t>> stack{{root, 0}};
    color[root] = 1;
    while (!stack.empty()) {
      auto& [u, k] = stack.back();
      if (k == adj[u].size()) {
        color[u] = 2;
        stack.pop_back();
        continue;
      }
      const StateId v = adj[u][k++];
      if (v == u) continue;
      if (color[v] == 1) {
        std::vector<StateId> cycle{v};
        for (StateId x = u; x != v; x = parent[x]) cycle.push_back(x);
        std::reverse(cycle.begin() + 1, cycle.end());
        return cycle;
      }
      if (color[v] == 0) {
        color[v] = 1;
        parent[v] = u;
        stack.push_back({v, 0});
      }
    }
  }
  return {};
}

/// Runs the sufficient conditions for polynomial diameter in a fixed order:
/// constant support of b0, T_M acyclic modulo self-loops, all actions
/// permutations with bounded cycle lengths, all actions permutations moving
/// a bounded number of states.
inline DiameterReport diameter_conditions(const DetPomdp& m, const DiameterOptions& opts = {}) {
  DiameterReport r;
  r.options = opts;
  r.support_size = m.initial_support().count();
  if (r.support_size <= opts.support_bound) r.fired.push_back(DiameterVerdict::PolynomialByConstantSupport);

  r.tm_cycle = find_cycle_ignoring_self_loops(transition_graph(m));
  if (r.tm_cycle.empty()) r.fired.push_back(DiameterVerdict::PolynomialByAcyclicTM);

  r.all_permutations = true;
  for (ActionId a = 0; a < m.num_actions() && r.all_permutations; ++a) {
    auto check = action_as_permutation(m, a);
    if (!check) {
      r.all_permutations = false;
      break;
    }
    for (const auto& c : cycle_decomposition(*check.permutation)) r.max_cycle_length = std::max(r.max_cycle_length, c.size());
    r.max_moved = std::max(r.max_moved, check.permutation->moved_points());
  }
  if (r.all_permutations) {
    if (r.max_cycle_length <= opts.cycle_bound) r.fired.push_back(DiameterVerdict::BoundedCycleLengths);
    if (r.max_moved <= opts.move_bound) r.fired.push_back(DiameterVerdict::BoundedSupportMoves);
  }
  r.verdict = r.fired.empty() ? DiameterVerdict::Unknown : r.fired.front();
  return r;
}

inline std::string to_text(const DiameterReport& r) {
  std::ostringstream os;
  os << "verdict " << to_string(r.verdict) << "\n";
  os << "fired";
  if (r.fired.empty()) os << " none";
  for (auto v : r.fired) os << ' ' << to_string(v);
  os << "\n";
  os << "support_size " << r.support_size << " (bound " << r.options.support_bound << ")\n";
  os << "tm_cycle ";
  if (r.tm_cycle.empty()) {
    os << "none";
  } else {
    for (std::size_t k = 0; k < r.tm_cycle.size(); ++k) os << (k ? "->" : "") << r.tm_cycle[k];
    os << "->" << r.tm_cycle.front();
  }
  os << "\n";
  os << "all_permutations " << (r.all_permutations ? "yes" : "no") << "\n";
  if (r.all_permutations) {
    os << "max_cycle_length " << r.max_cycle_length << " (bound " << r.options.cycle_bound << ")\n";
    os << "max_moved " << r.max_moved << " (bound " << r.options.move_bound << ")\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Measured diameter
// ---------------------------------------------------------------------------

/// Max over reachable b of the eccentricity of b within the beliefs of equal
/// support size reachable from it (only applicable actions are used).
/// Exponential in the worst case; throws BudgetExceeded once more than
/// `budget` belief visits have been made in total.
inline std::size_t measure_diameter(const DetPomdp& m, std::size_t budget = kDefaultBudget) {
  const auto reachable = reachable_beliefs<SetBelief>(m, budget);
  std::size_t visits = reachable.size();
  std::size_t diameter = 0;
  for (const auto& b : reachable) {
    const auto size = b.size();
    std::unordered_map<SetBelief, std::size_t> depth{{b, 0}};
    std::deque<SetBelief> queue{b};
    while (!queue.empty()) {
      const SetBelief x = queue.front();
      queue.pop_front();
      const auto d = depth.at(x);
      diameter = std::max(diameter, d);
      for (auto a : applicable_actions(m, x)) {
        for (auto& out : successors(m, x, a)) {
          if (out.belief.size() != size || depth.count(out.belief)) continue;
          if (++visits > budget) throw BudgetExceeded(budget, visits);
          depth.emplace(out.belief, d + 1);
          queue.push_back(std::move(out.belief));
        }
      }
    }
  }
  return diameter;
}

// ---------------------------------------------------------------------------
// Chunks and jumps
// ---------------------------------------------------------------------------

struct ChunkProfile {
  std::vector<std::pair<std::size_t, std::size_t>> chunks;  ///< (support size, number of beliefs)
  std::size_t jumps = 0;                                     ///< support-size decreases
};

/// Splits a belief sequence into maximal runs of equal support size.
template <BeliefType B>
ChunkProfile chunk_profile(const std::vector<B>& beliefs) {
  ChunkProfile p;
  for (std::size_t k = 0; k < beliefs.size(); ++k) {
    const auto size = beliefs[k].size();
    if (k > 0) {
      const auto prev = beliefs[k - 1].size();
      if (size > prev) throw std::invalid_argument("support size grew along the sequence");
      if (size < prev) ++p.jumps;
    }
    if (p.chunks.empty() || p.chunks.back().first != size)
      p.chunks.push_back({size, 1});
    else
      ++p.chunks.back().second;
  }
  if (!beliefs.empty() && p.jumps > beliefs.front().support().universe())
    throw std::logic_error("more jumps than states");
  return p;
}

// ---------------------------------------------------------------------------
// Large-order instances
// ---------------------------------------------------------------------------

inline std::vector<std::size_t> primes_up_to(std::size_t n) {
  std::vector<bool> composite(n + 1, false);
  std::vector<std::size_t> primes;
  for (std::size_t p = 2; p <= n; ++p) {
    if (composite[p]) continue;
    primes.push_back(p);
    for (std::size_t q = p * p; q <= n; q += p) composite[q] = true;
  }
  return primes;
}

/// Distinct primes taken largest first while they fit in n.
inline std::vector<std::size_t> greedy_prime_packing(std::size_t n) {
  auto primes = primes_up_to(n);
  std::vector<std::size_t> chosen;
  std::size_t left = n;
  for (auto it = primes.rbegin(); it != primes.rend(); ++it)
    if (*it <= left) {
      chosen.push_back(*it);
      left -= *it;
    }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

/// As many distinct primes as fit in n (smallest first), with the largest one
/// then raised to the biggest unused prime the leftover room allows.
inline std::vector<std::size_t> prime_packing(std::size_t n) {
  const auto primes = primes_up_to(n);
  std::vector<std::size_t> chosen;
  std::size_t sum = 0;
  for (auto p : primes) {
    if (sum + p > n) break;
    chosen.push_back(p);
    sum += p;
  }
  if (!chosen.empty()) {
    const std::size_t limit = chosen.back() + (n - sum);
    for (auto it = primes.rbegin(); it != primes.rend(); ++it)
      if (*it <= limit) {
        chosen.back() = *it;
        break;
      }
  }
  return chosen;
}

/// Unobservable model with a permutation action `a` made of disjoint cycles of
/// the given lengths (plus `padding` fixed points) and a collapsing action
/// `a'` that is applicable only at the last state of every cycle, where it
/// leads to the goal t. b0 holds the first state of every cycle, so the only
/// finite plan is lcm(lengths) - 1 copies of a followed by a'.
///
/// State layout: the cycles one after another, then the padding, then t.
inline DetPomdp build_large_order_instance_from_cycles(const std::vector<std::size_t>& lengths, std::size_t padding = 0) {
  if (lengths.empty()) throw std::invalid_argument("at least one cycle is required");
  std::size_t total = padding + 1;
  for (auto l : lengths) {
    if (l == 0) throw std::invalid_argument("cycle lengths must be positive");
    total += l;
  }
  const auto t = static_cast<StateId>(total - 1);
  ModelBuilder mb(total, 1);
  const ActionId a = mb.add_action("a");
  const ActionId collapse = mb.add_action("a'");
  std::vector<StateId> starts;
  StateId offset = 0;
  for (auto l : lengths) {
    starts.push_back(offset);
    for (std::size_t k = 0; k < l; ++k) mb.transition(offset + k, a, offset + (k + 1) % l);
    mb.transition(offset + l - 1, collapse, t);
    offset += static_cast<StateId>(l);
  }
  for (std::size_t k = 0; k < padding; ++k) mb.transition(offset + k, a, offset + k);
  mb.goal(t).initial_set(starts);
  return mb.finish();
}

/// The instance for a state budget n: cycles from prime_packing(n), padded
/// with fixed points to n states, plus the goal (n + 1 states in total).
inline DetPomdp build_large_order_instance(std::size_t n) {
  auto lengths = prime_packing(n);
  if (lengths.empty()) throw std::invalid_argument("n must be at least 2");
  const std::size_t used = std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
  return build_large_order_instance_from_cycles(lengths, n - used);
}

}  // namespace detpomdp
