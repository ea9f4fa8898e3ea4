#pragma once

// Policy evaluation and optimal policy computation.
//
//  - evaluate_policy:    value of a closed policy (infinite on cycles / dead ends)
//  - solve_explicit:     enumerate reachable beliefs, then label-setting
//  - solve_heuristic:    AO*-style best-first search with admissible heuristics
//  - solve_unobservable: uniform-cost search for linear plans
//  - simulate / monte_carlo_cost: executions against a hidden true state
//
// Label setting exploits the structure of deterministic models: an action
// either splits the support (every outcome is strictly smaller) or leads to a
// single belief of equal or smaller support. Processing beliefs by increasing
// support size therefore reduces each size class to a deterministic shortest
// path problem with positive costs, solved by Dijkstra.

#include "detpomdp/andor_graph.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

namespace detpomdp {

enum class SolveStatus { Solved, NoFinitePolicy, BudgetExceeded };

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "solved";
    case SolveStatus::NoFinitePolicy: return "no finite-cost policy";
    case SolveStatus::BudgetExceeded: return "budget exceeded";
  }
  return "?";
}

struct SolveStats {
  std::size_t nodes_expanded = 0;
  std::size_t beliefs_enumerated = 0;
  double wall_seconds = 0;
};

template <CriterionType C>
struct SolveResult {
  using belief_type = typename C::belief_type;
  using cost_type = typename C::cost_type;

  SolveStatus status = SolveStatus::NoFinitePolicy;
  std::optional<Policy<belief_type>> policy;  ///< present iff status == Solved
  cost_type value = cost_type::infinity();
  SolveStats stats;
  std::vector<ActionId> plan;  ///< linear plan (unobservable planner only)
};

enum class Heuristic { Zero, FullObs };

inline Heuristic parse_heuristic(std::string_view s) {
  if (s == "zero") return Heuristic::Zero;
  if (s == "fullobs") return Heuristic::FullObs;
  throw std::invalid_argument("unknown heuristic '" + std::string(s) + "' (expected zero or fullobs)");
}

namespace solver_detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Best value of an OR node and the action achieving it.
template <class Cost>
struct Label {
  Cost value = Cost::infinity();
  std::optional<ActionId> action;

  /// Strictly smaller value, or equal value with a lower action id.
  bool improves_on(const Label& other) const {
    if (value < other.value) return true;
    if (other.value < value) return false;
    if (value.is_infinite()) return false;
    return action && (!other.action || *action < *other.action);
  }
};

}  // namespace solver_detail

// ---------------------------------------------------------------------------
// Policy evaluation
// ---------------------------------------------------------------------------

/// V_pi(b0). Infinite when the policy graph has a cycle or reaches a dead end.
/// Throws ClosureError when a reachable non-target belief with applicable
/// actions has no (applicable) action in the policy.
template <CriterionType C>
typename C::cost_type evaluate_policy(const DetPomdp& m, const Policy<typename C::belief_type>& pi) {
  using B = typename C::belief_type;
  using cost_type = typename C::cost_type;

  struct Frame {
    B belief;
    typename C::value_type step_cost;
    std::vector<Outcome<B>> outs;
    std::size_t next = 0;
    typename C::Accumulator acc;
  };
  // Absent: unvisited; nullopt: on the current path; value: finished.
  std::unordered_map<B, std::optional<cost_type>> memo;
  std::vector<Frame> stack;

  // Returns the value immediately when known, otherwise pushes a frame.
  auto enter = [&](const B& b) -> std::optional<cost_type> {
    if (auto it = memo.find(b); it != memo.end()) {
      if (!it->second) return cost_type::infinity();  // cycle
      return it->second;
    }
    if (is_target(m, b)) {
      memo.emplace(b, cost_type(C::zero()));
      return cost_type(C::zero());
    }
    auto a = pi.find(b);
    if (!a) {
      if (applicable_actions(m, b).empty()) {
        memo.emplace(b, cost_type::infinity());
        return cost_type::infinity();
      }
      pi.at(b);  // throws ClosureError
      return std::nullopt;
    }
    if (!b.support().is_subset_of(m.actions.at(*a).applicable)) {
      std::ostringstream os;
      os << "policy action '" << m.actions[*a].name << "' is not applicable at belief " << b;
      throw ClosureError(os.str());
    }
    memo.emplace(b, std::nullopt);
    stack.push_back({b, C::action_cost(m, b, *a), successors(m, b, *a), 0, {}});
    return std::nullopt;
  };

  const auto b0 = initial_belief<B>(m);
  if (auto v = enter(b0)) return *v;
  std::optional<cost_type> returned;
  while (!stack.empty()) {
    auto& f = stack.back();
    if (returned) {
      f.acc.add(f.outs[f.next - 1].probability, *returned);
      if (returned->is_infinite()) return cost_type::infinity();
      returned.reset();
    }
    if (f.next < f.outs.size()) {
      const auto& child = f.outs[f.next++].belief;
      if (auto v = enter(child)) {
        if (v->is_infinite()) return cost_type::infinity();
        returned = v;
      }
      continue;
    }
    const cost_type v = cost_type(f.step_cost) + f.acc.result();
    memo[f.belief] = v;
    stack.pop_back();
    returned = v;
  }
  return memo.at(b0).value();
}

// ---------------------------------------------------------------------------
// Explicit solver
// ---------------------------------------------------------------------------

/// Optimal value and action for every OR node of a built graph.
template <CriterionType C>
struct GraphValues {
  std::vector<typename C::cost_type> value;     ///< indexed by node id (OR nodes)
  std::vector<std::optional<ActionId>> action;  ///< best action, lowest id on ties
  std::vector<NodeId> finalization_order;
};

/// Label setting over the whole graph, support-size class by support-size class.
/// Within a class finalized values are non-decreasing (asserted).
template <CriterionType C>
GraphValues<C> label_setting(const AndOrGraph<C>& g) {
  using cost_type = typename C::cost_type;
  using Label = solver_detail::Label<cost_type>;
  const auto& nodes = g.nodes();
  GraphValues<C> out;
  out.value.assign(nodes.size(), cost_type::infinity());
  out.action.assign(nodes.size(), std::nullopt);

  std::map<std::size_t, std::vector<NodeId>> by_size;
  std::vector<std::size_t> size_of(nodes.size(), 0);
  for (NodeId id = 0; id < nodes.size(); ++id) {
    if (nodes[id].kind != NodeKind::Or) continue;
    size_of[id] = nodes[id].belief.size();
    by_size[size_of[id]].push_back(id);
  }

  // In-class single-outcome edges, reversed: child -> (parent OR, OR->AND edge).
  std::vector<std::vector<std::pair<NodeId, EdgeId>>> in_class_preds(nodes.size());
  for (NodeId id = 0; id < nodes.size(); ++id) {
    if (nodes[id].kind != NodeKind::Or) continue;
    for (auto e : nodes[id].out) {
      const auto& and_node = g.node(g.edge(e).to);
      for (auto oe : and_node.out) {
        const NodeId child = g.edge(oe).to;
        if (size_of[child] > size_of[id]) throw std::logic_error("support grew along an edge");
        if (size_of[child] == size_of[id]) {
          if (and_node.out.size() != 1) throw std::logic_error("equal-support successor on a branching AND node");
          in_class_preds[child].push_back({id, e});
        }
      }
    }
  }

  std::vector<bool> final(nodes.size(), false);
  for (auto& [size, members] : by_size) {
    std::vector<Label> label(nodes.size());
    using Entry = std::pair<cost_type, NodeId>;
    auto cmp = [](const Entry& x, const Entry& y) {
      if (x.first < y.first || y.first < x.first) return y.first < x.first;
      return x.second > y.second;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> queue(cmp);

    for (auto id : members) {
      const auto& n = nodes[id];
      if (n.terminal) {
        label[id] = {cost_type(C::zero()), std::nullopt};
        queue.push({label[id].value, id});
        continue;
      }
      for (auto e : n.out) {
        const auto& edge = g.edge(e);
        const auto& and_node = g.node(edge.to);
        if (and_node.out.size() == 1 && size_of[g.edge(and_node.out[0]).to] == size) continue;
        typename C::Accumulator acc;
        for (auto oe : and_node.out) acc.add(g.edge(oe).probability, out.value[g.edge(oe).to]);
        Label cand{cost_type(edge.cost) + acc.result(), edge.label};
        if (cand.value.is_finite() && cand.improves_on(label[id])) label[id] = cand;
      }
      if (label[id].value.is_finite()) queue.push({label[id].value, id});
    }

    std::optional<cost_type> last;
    while (!queue.empty()) {
      auto [v, id] = queue.top();
      queue.pop();
      if (final[id] || !(v == label[id].value)) continue;
      final[id] = true;
      assert(!last || *last <= v);
      last = v;
      out.value[id] = v;
      out.action[id] = label[id].action;
      out.finalization_order.push_back(id);
      for (auto [pred, e] : in_class_preds[id]) {
        if (final[pred]) continue;
        const auto& edge = g.edge(e);
        typename C::Accumulator acc;
        acc.add(g.edge(g.node(edge.to).out[0]).probability, v);
        Label cand{cost_type(edge.cost) + acc.result(), edge.label};
        if (cand.improves_on(label[pred])) {
          label[pred] = cand;
          queue.push({cand.value, pred});
        }
      }
    }
    for (auto id : members) final[id] = true;
  }
  return out;
}

namespace solver_detail {

/// Minimal policy following the chosen actions from the root, breadth-first.
template <CriterionType C>
Policy<typename C::belief_type> extract_policy(const AndOrGraph<C>& g, const std::vector<std::optional<ActionId>>& action) {
  Policy<typename C::belief_type> pi;
  std::vector<bool> seen(g.nodes().size(), false);
  std::deque<NodeId> queue{g.root()};
  seen[g.root()] = true;
  while (!queue.empty()) {
    const NodeId id = queue.front();
    queue.pop_front();
    const auto& n = g.node(id);
    if (n.terminal) continue;
    const ActionId a = action[id].value();
    pi.set(n.belief, a);
    for (auto oe : g.node(*g.and_child(id, a)).out) {
      const NodeId child = g.edge(oe).to;
      if (!seen[child]) {
        seen[child] = true;
        queue.push_back(child);
      }
    }
  }
  return pi;
}

}  // namespace solver_detail

template <CriterionType C>
struct ExplicitOptions {
  std::size_t budget = kDefaultBudget;
  /// Optional map from a belief to a representative of its symmetry class.
  /// It must commute with the dynamics up to relabeling of actions and
  /// observations (an automorphism of the model), so that optimal values are
  /// class invariants. The returned policy is then defined on representatives.
  std::function<typename C::belief_type(const typename C::belief_type&)> canonicalize;
};

/// Enumerates every reachable belief breadth-first, then computes optimal
/// values by label setting, one support-size class at a time. AND nodes are
/// never stored; successors are recomputed when values are backed up.
/// Returns the optimal minimal policy when V(b0) is finite.
template <CriterionType C>
SolveResult<C> solve_explicit(const DetPomdp& m, const ExplicitOptions<C>& opts) {
  using B = typename C::belief_type;
  using cost_type = typename C::cost_type;
  using Label = solver_detail::Label<cost_type>;
  using Id = std::uint32_t;

  solver_detail::Stopwatch clock;
  SolveResult<C> r;
  auto canon = [&](B b) { return opts.canonicalize ? opts.canonicalize(b) : b; };

  std::vector<B> beliefs;
  std::unordered_map<B, Id> index;
  auto intern = [&](B b) -> Id {
    auto [it, inserted] = index.try_emplace(b, static_cast<Id>(beliefs.size()));
    if (inserted) {
      if (beliefs.size() >= opts.budget) throw BudgetExceeded(opts.budget, beliefs.size());
      beliefs.push_back(std::move(b));
    }
    return it->second;
  };
  try {
    intern(canon(initial_belief<B>(m)));
    for (std::size_t k = 0; k < beliefs.size(); ++k) {
      if (is_target(m, beliefs[k])) continue;
      const B b = beliefs[k];
      for (auto a : applicable_actions(m, b))
        for (auto& out : successors(m, b, a)) intern(canon(std::move(out.belief)));
    }
  } catch (const BudgetExceeded&) {
    r.status = SolveStatus::BudgetExceeded;
    r.stats.beliefs_enumerated = beliefs.size();
    r.stats.wall_seconds = clock.seconds();
    return r;
  }

  const auto n = beliefs.size();
  std::map<std::size_t, std::vector<Id>> by_size;
  for (Id id = 0; id < n; ++id) by_size[beliefs[id].size()].push_back(id);
  std::vector<cost_type> value(n, cost_type::infinity());
  std::vector<std::optional<ActionId>> best(n);
  // Successor ids of the chosen action, for policy extraction.
  std::vector<std::vector<Id>> chosen_children(n);

  struct InEdge {
    Id pred;
    ActionId action;
    typename C::value_type cost;
  };
  for (auto& [size, members] : by_size) {
    std::unordered_map<Id, Label> label;
    std::unordered_map<Id, std::vector<InEdge>> preds;
    std::unordered_map<Id, std::unordered_map<ActionId, std::vector<Id>>> kids;
    using Entry = std::pair<cost_type, Id>;
    auto cmp = [](const Entry& x, const Entry& y) {
      if (x.first < y.first || y.first < x.first) return y.first < x.first;
      return x.second > y.second;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> queue(cmp);
    for (auto id : members) {
      if (is_target(m, beliefs[id])) {
        label[id] = {cost_type(C::zero()), std::nullopt};
        queue.push({label[id].value, id});
        continue;
      }
      const B& b = beliefs[id];
      Label lb;
      for (auto a : applicable_actions(m, b)) {
        auto outs = successors(m, b, a);
        const auto cost = C::action_cost(m, b, a);
        if (outs.size() == 1 && outs[0].belief.size() == size) {
          const Id child = index.at(canon(std::move(outs[0].belief)));
          if (child != id) preds[child].push_back({id, a, cost});
          continue;
        }
        typename C::Accumulator acc;
        std::vector<Id> ids;
        for (auto& out : outs) {
          if (out.belief.size() >= size) throw std::logic_error("support grew along a branching action");
          const Id child = index.at(canon(std::move(out.belief)));
          acc.add(out.probability, value[child]);
          ids.push_back(child);
        }
        Label cand{cost_type(cost) + acc.result(), a};
        if (cand.value.is_finite() && cand.improves_on(lb)) {
          lb = cand;
          kids[id][a] = std::move(ids);
        }
      }
      label[id] = lb;
      if (lb.value.is_finite()) queue.push({lb.value, id});
    }
    std::unordered_map<Id, bool> done;
    std::optional<cost_type> last;
    while (!queue.empty()) {
      auto [v, id] = queue.top();
      queue.pop();
      if (done[id] || !(v == label[id].value)) continue;
      done[id] = true;
      assert(!last || *last <= v);
      last = v;
      value[id] = v;
      best[id] = label[id].action;
      if (auto it = preds.find(id); it != preds.end())
        for (const auto& e : it->second) {
          if (done[e.pred]) continue;
          typename C::Accumulator acc;
          acc.add(1.0, v);
          Label cand{cost_type(e.cost) + acc.result(), e.action};
          if (cand.improves_on(label[e.pred])) {
            label[e.pred] = cand;
            kids[e.pred][e.action] = {id};
            queue.push({cand.value, e.pred});
          }
        }
    }
    for (auto id : members)
      if (best[id]) chosen_children[id] = kids[id][*best[id]];
  }

  r.stats.beliefs_enumerated = n;
  for (Id id = 0; id < n; ++id) r.stats.nodes_expanded += !is_target(m, beliefs[id]);
  r.value = value[0];
  if (r.value.is_finite()) {
    r.status = SolveStatus::Solved;
    Policy<B> pi;
    std::vector<bool> seen(n, false);
    std::deque<Id> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
      const Id id = queue.front();
      queue.pop_front();
      if (!best[id]) continue;
      pi.set(beliefs[id], *best[id]);
      for (auto child : chosen_children[id])
        if (!seen[child]) {
          seen[child] = true;
          queue.push_back(child);
        }
    }
    r.policy = std::move(pi);
  }
  r.stats.wall_seconds = clock.seconds();
  return r;
}

template <CriterionType C>
SolveResult<C> solve_explicit(const DetPomdp& m, std::size_t budget = kDefaultBudget) {
  ExplicitOptions<C> opts;
  opts.budget = budget;
  return solve_explicit<C>(m, opts);
}

/// Optimal policy and value read off a fully built AND/OR graph.
template <CriterionType C>
SolveResult<C> solve_graph(const AndOrGraph<C>& g) {
  SolveResult<C> r;
  const auto values = label_setting(g);
  r.stats.beliefs_enumerated = g.num_or_nodes();
  r.stats.nodes_expanded = g.num_or_nodes() - g.num_terminals();
  r.value = values.value[g.root()];
  if (r.value.is_finite()) {
    r.status = SolveStatus::Solved;
    r.policy = solver_detail::extract_policy(g, values.action);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Heuristics
// ---------------------------------------------------------------------------

/// d*(i): cheapest cost from state i to a goal state when the state is known
/// (Dijkstra on the reversed transition graph). Infinite when unreachable.
template <CriterionType C>
std::vector<typename C::cost_type> full_observability_distances(const DetPomdp& m) {
  using cost_type = typename C::cost_type;
  const auto n = m.num_states;
  std::vector<std::vector<std::pair<StateId, ActionId>>> preds(n);
  for (StateId s = 0; s < n; ++s)
    for (ActionId a = 0; a < m.num_actions(); ++a)
      if (m.applicable(s, a) && !m.is_goal(s)) preds[m.effect(s, a)].push_back({s, a});
  std::vector<cost_type> dist(n, cost_type::infinity());
  using Entry = std::pair<cost_type, StateId>;
  auto cmp = [](const Entry& x, const Entry& y) { return y.first < x.first || (!(x.first < y.first) && x.second > y.second); };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> queue(cmp);
  for (auto t : m.goal) {
    dist[t] = cost_type(C::zero());
    queue.push({dist[t], t});
  }
  std::vector<bool> done(n, false);
  while (!queue.empty()) {
    auto [d, s] = queue.top();
    queue.pop();
    if (done[s]) continue;
    done[s] = true;
    for (auto [p, a] : preds[s]) {
      const cost_type cand = C::state_cost(m, p, a) + d;
      if (cand < dist[p]) {
        dist[p] = cand;
        queue.push({cand, p});
      }
    }
  }
  return dist;
}

/// h(b): zero, or max_i d*(i) (minmax) / sum_i b(i) d*(i) (minexp).
template <CriterionType C>
class HeuristicFunction {
 public:
  using belief_type = typename C::belief_type;
  using cost_type = typename C::cost_type;

  HeuristicFunction(const DetPomdp& m, Heuristic kind) : m_(m), kind_(kind) {
    if (kind == Heuristic::FullObs) dist_ = full_observability_distances<C>(m);
  }

  cost_type operator()(const belief_type& b) const {
    if (is_target(m_, b) || kind_ == Heuristic::Zero) return cost_type(C::zero());
    if constexpr (C::kind == Criterion::MinMax) {
      cost_type h(C::zero());
      for (auto s : b.support()) h = max(h, dist_[s]);
      return h;
    } else {
      double total = 0;
      for (std::size_t k = 0; k < b.size(); ++k) {
        const auto& d = dist_[b.states()[k]];
        if (d.is_infinite()) return cost_type::infinity();
        total += b.probs()[k] * d.value();
      }
      return total;
    }
  }

 private:
  const DetPomdp& m_;
  Heuristic kind_;
  std::vector<cost_type> dist_;
};

// ---------------------------------------------------------------------------
// AO*
// ---------------------------------------------------------------------------

template <CriterionType C>
struct HeuristicSearchOptions {
  Heuristic heuristic = Heuristic::FullObs;
  std::size_t budget = kDefaultBudget;
  /// Called with every belief at the moment it is expanded and its h value.
  std::function<void(const typename C::belief_type&, const typename C::cost_type&)> on_expand;
};

/// Best-first AND/OR search over the implicit graph. After each expansion the
/// values of the expanded node and all of its ancestors are recomputed by the
/// same size-class label setting as the explicit solver, using h at
/// unexpanded tips; support-preserving cycles therefore never enter the marked
/// solution graph. The next node to expand is the deepest unexpanded tip of
/// the marked graph.
template <CriterionType C>
SolveResult<C> solve_heuristic(const DetPomdp& m, const HeuristicSearchOptions<C>& opts) {
  using B = typename C::belief_type;
  using cost_type = typename C::cost_type;
  using value_type = typename C::value_type;
  using Label = solver_detail::Label<cost_type>;
  using Id = std::uint32_t;

  struct AndNode {
    Id parent;
    ActionId action;
    value_type cost;
    std::vector<std::pair<Id, std::optional<double>>> children;
  };
  struct OrNode {
    B belief;
    std::size_t size;
    bool target;
    bool expanded = false;
    cost_type value;
    std::vector<Id> ands;
    std::optional<Id> best;  // AND id
    std::vector<Id> parents;  // AND ids
  };

  solver_detail::Stopwatch clock;
  HeuristicFunction<C> h(m, opts.heuristic);
  std::vector<OrNode> ors;
  std::vector<AndNode> ands;
  std::unordered_map<B, Id> index;
  SolveResult<C> r;

  auto intern = [&](B b) -> Id {
    if (auto it = index.find(b); it != index.end()) return it->second;
    if (ors.size() >= opts.budget) throw BudgetExceeded(opts.budget, ors.size());
    const bool target = is_target(m, b);
    const auto id = static_cast<Id>(ors.size());
    cost_type v = target ? cost_type(C::zero()) : h(b);
    const auto size = b.size();
    index.emplace(b, id);
    ors.push_back({std::move(b), size, target, target, v, {}, std::nullopt, {}});
    return id;
  };

  auto q_value = [&](const AndNode& x) {
    typename C::Accumulator acc;
    for (const auto& [child, p] : x.children) acc.add(p, ors[child].value);
    return cost_type(x.cost) + acc.result();
  };

  // Recompute values on `zone` (expanded nodes), keeping every other node fixed.
  auto update = [&](const std::vector<Id>& zone) {
    std::map<std::size_t, std::vector<Id>> by_size;
    for (auto id : zone) by_size[ors[id].size].push_back(id);
    std::unordered_map<Id, bool> in_zone;
    for (auto id : zone) in_zone[id] = false;  // false: not yet final
    for (auto& [size, members] : by_size) {
      std::unordered_map<Id, Label> label;
      std::unordered_map<Id, std::vector<std::pair<Id, Id>>> preds;  // child -> (parent, and)
      using Entry = std::pair<cost_type, Id>;
      auto cmp = [](const Entry& x, const Entry& y) {
        if (x.first < y.first || y.first < x.first) return y.first < x.first;
        return x.second > y.second;
      };
      std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> queue(cmp);
      for (auto id : members) {
        Label best;
        for (auto aid : ors[id].ands) {
          const auto& x = ands[aid];
          if (x.children.size() == 1) {
            const Id child = x.children[0].first;
            auto zit = in_zone.find(child);
            if (zit != in_zone.end() && !zit->second && ors[child].size == size) {
              preds[child].push_back({id, aid});
              continue;
            }
          }
          Label cand{q_value(x), x.action};
          if (cand.value.is_finite() && cand.improves_on(best)) best = cand;
        }
        label[id] = best;
        if (best.value.is_finite()) queue.push({best.value, id});
      }
      while (!queue.empty()) {
        auto [v, id] = queue.top();
        queue.pop();
        if (in_zone[id] || !(v == label[id].value)) continue;
        in_zone[id] = true;
        ors[id].value = v;
        for (auto [pred, aid] : preds[id]) {
          if (in_zone[pred]) continue;
          Label cand{q_value(ands[aid]), ands[aid].action};
          if (cand.improves_on(label[pred])) {
            label[pred] = cand;
            queue.push({cand.value, pred});
          }
        }
      }
      for (auto id : members) {
        in_zone[id] = true;
        ors[id].value = label[id].value;
        ors[id].best.reset();
        if (label[id].action)
          for (auto aid : ors[id].ands)
            if (ands[aid].action == *label[id].action) ors[id].best = aid;
      }
    }
  };

  try {
    const Id root = intern(initial_belief<B>(m));
    while (true) {
      if (ors[root].value.is_infinite()) {
        r.status = SolveStatus::NoFinitePolicy;
        break;
      }
      // Deepest unexpanded tip of the marked solution graph.
      std::optional<Id> tip;
      std::size_t tip_depth = 0;
      {
        std::vector<std::uint8_t> color(ors.size(), 0);
        std::vector<std::pair<Id, std::size_t>> stack{{root, 0}};
        while (!stack.empty()) {
          auto [id, depth] = stack.back();
          stack.pop_back();
          if (color[id]) continue;
          color[id] = 1;
          const auto& n = ors[id];
          if (n.target) continue;
          if (!n.expanded) {
            if (!tip || depth > tip_depth) {
              tip = id;
              tip_depth = depth;
            }
            continue;
          }
          if (!n.best) throw std::logic_error("marked graph reaches a node without a finite best action");
          const auto& children = ands[*n.best].children;
          for (auto it = children.rbegin(); it != children.rend(); ++it)
            if (!color[it->first]) stack.push_back({it->first, depth + 1});
        }
      }
      if (!tip) {
        r.status = SolveStatus::Solved;
        break;
      }

      const Id id = *tip;
      if (opts.on_expand) opts.on_expand(ors[id].belief, ors[id].value);
      ++r.stats.nodes_expanded;
      ors[id].expanded = true;
      const B b = ors[id].belief;
      for (auto a : applicable_actions(m, b)) {
        AndNode x{id, a, C::action_cost(m, b, a), {}};
        for (auto& out : successors(m, b, a)) {
          const Id child = intern(std::move(out.belief));
          std::optional<double> p;
          if constexpr (C::kind == Criterion::MinExp) p = out.probability;
          x.children.push_back({child, p});
        }
        const auto aid = static_cast<Id>(ands.size());
        for (const auto& [child, p] : x.children) ors[child].parents.push_back(aid);
        ands.push_back(std::move(x));
        ors[id].ands.push_back(aid);
      }

      // Zone: the expanded node and all of its ancestors.
      std::vector<Id> zone{id};
      std::vector<bool> in(ors.size(), false);
      in[id] = true;
      for (std::size_t k = 0; k < zone.size(); ++k)
        for (auto aid : ors[zone[k]].parents) {
          const Id p = ands[aid].parent;
          if (!in[p]) {
            in[p] = true;
            zone.push_back(p);
          }
        }
      update(zone);
    }
  } catch (const BudgetExceeded&) {
    r.status = SolveStatus::BudgetExceeded;
  }

  r.stats.beliefs_enumerated = ors.size();
  if (r.status == SolveStatus::Solved) {
    const Id root = 0;
    r.value = ors[root].value;
    Policy<B> pi;
    std::vector<bool> seen(ors.size(), false);
    std::deque<Id> queue{root};
    seen[root] = true;
    while (!queue.empty()) {
      const Id id = queue.front();
      queue.pop_front();
      if (ors[id].target) continue;
      const auto& x = ands[*ors[id].best];
      pi.set(ors[id].belief, x.action);
      for (const auto& [child, p] : x.children)
        if (!seen[child]) {
          seen[child] = true;
          queue.push_back(child);
        }
    }
    r.policy = std::move(pi);
  }
  r.stats.wall_seconds = clock.seconds();
  return r;
}

template <CriterionType C>
SolveResult<C> solve_heuristic(const DetPomdp& m, Heuristic heuristic, std::size_t budget = kDefaultBudget) {
  HeuristicSearchOptions<C> opts;
  opts.heuristic = heuristic;
  opts.budget = budget;
  return solve_heuristic<C>(m, opts);
}

// ---------------------------------------------------------------------------
// Unobservable models
// ---------------------------------------------------------------------------

/// Uniform-cost search for a cheapest linear plan taking b0 to a target
/// belief. Requires a single observation.
template <CriterionType C>
SolveResult<C> solve_unobservable(const DetPomdp& m, std::size_t budget = kDefaultBudget) {
  using B = typename C::belief_type;
  using cost_type = typename C::cost_type;
  if (!m.unobservable())
    throw WrongModelClass("unobservable planner requires a single observation (model has " +
                          std::to_string(m.num_observations) + ")");
  solver_detail::Stopwatch clock;
  SolveResult<C> r;

  struct Rec {
    B belief;
    cost_type cost;
    std::uint32_t parent;
    ActionId action;
    bool closed = false;
  };
  constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<Rec> recs;
  std::unordered_map<B, std::uint32_t> index;
  using Entry = std::tuple<cost_type, std::uint64_t, std::uint32_t>;
  auto cmp = [](const Entry& x, const Entry& y) {
    const auto& [cx, sx, ix] = x;
    const auto& [cy, sy, iy] = y;
    if (cx < cy || cy < cx) return cy < cx;
    return sx > sy;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> queue(cmp);
  std::uint64_t seq = 0;

  recs.push_back({initial_belief<B>(m), cost_type(C::zero()), kNone, 0});
  index.emplace(recs[0].belief, 0);
  queue.push({recs[0].cost, seq++, 0});
  std::optional<std::uint32_t> goal;
  while (!queue.empty()) {
    auto [c, s, id] = queue.top();
    queue.pop();
    if (recs[id].closed || !(c == recs[id].cost)) continue;
    recs[id].closed = true;
    if (is_target(m, recs[id].belief)) {
      goal = id;
      break;
    }
    ++r.stats.nodes_expanded;
    const B b = recs[id].belief;
    for (auto a : applicable_actions(m, b)) {
      B next = successors(m, b, a).front().belief;
      const cost_type nc = c + cost_type(C::action_cost(m, b, a));
      auto it = index.find(next);
      if (it == index.end()) {
        if (recs.size() >= budget) {
          r.status = SolveStatus::BudgetExceeded;
          r.stats.beliefs_enumerated = recs.size();
          r.stats.wall_seconds = clock.seconds();
          return r;
        }
        const auto nid = static_cast<std::uint32_t>(recs.size());
        index.emplace(next, nid);
        recs.push_back({std::move(next), nc, id, a});
        queue.push({nc, seq++, nid});
      } else if (!recs[it->second].closed && nc < recs[it->second].cost) {
        recs[it->second].cost = nc;
        recs[it->second].parent = id;
        recs[it->second].action = a;
        queue.push({nc, seq++, it->second});
      }
    }
  }
  r.stats.beliefs_enumerated = recs.size();
  if (goal) {
    std::vector<std::uint32_t> path;
    for (auto id = *goal; id != kNone; id = recs[id].parent) path.push_back(id);
    std::reverse(path.begin(), path.end());
    Policy<B> pi;
    for (std::size_t k = 1; k < path.size(); ++k) {
      r.plan.push_back(recs[path[k]].action);
      pi.set(recs[path[k - 1]].belief, recs[path[k]].action);
    }
    r.status = SolveStatus::Solved;
    r.value = recs[*goal].cost;
    r.policy = std::move(pi);
  } else {
    r.status = SolveStatus::NoFinitePolicy;
  }
  r.stats.wall_seconds = clock.seconds();
  return r;
}

/// Beliefs visited by a linear plan, starting with b0.
template <BeliefType B>
std::vector<B> plan_beliefs(const DetPomdp& m, const std::vector<ActionId>& plan) {
  std::vector<B> seq{initial_belief<B>(m)};
  for (auto a : plan) {
    auto outs = successors(m, seq.back(), a);
    if (outs.size() != 1) throw WrongModelClass("plan step produced more than one observation");
    seq.push_back(std::move(outs.front().belief));
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

template <BeliefType B>
struct TraceStep {
  B belief;
  ActionId action;
  Rational cost;  ///< c(s, a) at the hidden true state
  ObsId observation;
  B next;
};

template <BeliefType B>
struct Trace {
  StateId initial_state = 0;
  std::vector<TraceStep<B>> steps;
  Rational total_cost{0};
  StateId final_state = 0;
  bool reached_target = false;
};

/// Runs the policy against a hidden initial state: act, pay c(s, a), observe
/// o(f(s, a), a), filter. Stops at a target belief or after max_steps.
template <BeliefType B>
Trace<B> simulate(const DetPomdp& m, const Policy<B>& pi, StateId true_state, std::size_t max_steps) {
  B b = initial_belief<B>(m);
  if (!b.support().test(true_state))
    throw std::invalid_argument("true state " + std::to_string(true_state) + " is not in the support of b0");
  Trace<B> t;
  t.initial_state = true_state;
  StateId s = true_state;
  while (!is_target(m, b) && t.steps.size() < max_steps) {
    const ActionId a = pi.at(b);
    const Rational c = m.cost(s, a);
    const StateId next = m.effect(s, a);
    const ObsId o = m.observation(next, a);
    B nb = filter(m, progress(m, b, a), a, o);
    if (!nb.support().test(next)) throw std::logic_error("filtered belief lost the true state");
    t.total_cost += c;
    t.steps.push_back({b, a, c, o, nb});
    b = std::move(nb);
    s = next;
  }
  t.final_state = s;
  t.reached_target = is_target(m, b);
  return t;
}

struct MonteCarloEstimate {
  double mean = 0;
  double standard_error = 0;
  std::size_t runs = 0;
  std::size_t unfinished = 0;  ///< runs that hit the step cap
};

/// Average true cost of the policy over `runs` executions whose initial state
/// is drawn from b0 (as a distribution) with a seeded generator.
template <BeliefType B>
MonteCarloEstimate monte_carlo_cost(const DetPomdp& m, const Policy<B>& pi, std::size_t runs, std::uint64_t seed,
                                    std::size_t max_steps = 0) {
  const auto b0 = initial_dist_belief(m);
  if (max_steps == 0) max_steps = pi.size() + 1;
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(b0.probs().begin(), b0.probs().end());
  // Each start state yields a deterministic trajectory; cache its cost.
  std::unordered_map<StateId, std::pair<double, bool>> cache;
  MonteCarloEstimate est;
  est.runs = runs;
  double sum = 0, sum_sq = 0;
  for (std::size_t k = 0; k < runs; ++k) {
    const StateId s = b0.states()[pick(rng)];
    auto it = cache.find(s);
    if (it == cache.end()) {
      const auto t = simulate(m, pi, s, max_steps);
      it = cache.emplace(s, std::make_pair(to_double(t.total_cost), t.reached_target)).first;
    }
    if (!it->second.second) ++est.unfinished;
    sum += it->second.first;
    sum_sq += it->second.first * it->second.first;
  }
  est.mean = sum / static_cast<double>(runs);
  const double var = runs > 1 ? (sum_sq - sum * sum / static_cast<double>(runs)) / static_cast<double>(runs - 1) : 0.0;
  est.standard_error = std::sqrt(std::max(0.0, var) / static_cast<double>(runs));
  return est;
}

}  // namespace detpomdp
