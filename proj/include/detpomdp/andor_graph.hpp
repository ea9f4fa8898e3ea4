#pragma once

// Compilation of a model into its AND/OR graph: OR nodes are the reachable
// beliefs, AND nodes the progressions b_a, AND->OR edges the observations.
// Also: enumeration of reachable beliefs, solutions (edge subsets), their
// validation and cost, and the policy <-> solution correspondence.

#include "detpomdp/criterion.hpp"
#include "detpomdp/policy.hpp"

#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace detpomdp {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
inline constexpr std::size_t kDefaultBudget = 1'000'000;

enum class NodeKind : std::uint8_t { Or, And };

// ---------------------------------------------------------------------------
// Reachable beliefs
// ---------------------------------------------------------------------------

/// Closure of {b0} under (progress, filter) for every applicable action and
/// consistent observation, in breadth-first order. Target beliefs are not
/// expanded: no decision is taken there. Throws BudgetExceeded once more than
/// `budget` beliefs have been discovered.
template <BeliefType B>
std::vector<B> reachable_beliefs(const DetPomdp& m, std::size_t budget = kDefaultBudget) {
  std::vector<B> order;
  std::unordered_map<B, std::size_t> seen;
  auto visit = [&](B b) {
    if (seen.count(b)) return;
    if (order.size() >= budget) throw BudgetExceeded(budget, order.size());
    seen.emplace(b, order.size());
    order.push_back(std::move(b));
  };
  visit(initial_belief<B>(m));
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (is_target(m, order[k])) continue;
    const B b = order[k];
    for (auto a : applicable_actions(m, b))
      for (auto& out : successors(m, b, a)) visit(std::move(out.belief));
  }
  return order;
}

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

template <CriterionType C>
class AndOrGraph;

template <CriterionType C>
AndOrGraph<C> build_graph(const DetPomdp& m, std::size_t budget = kDefaultBudget);

template <CriterionType C>
class AndOrGraph {
 public:
  using criterion_type = C;
  using belief_type = typename C::belief_type;
  using value_type = typename C::value_type;
  using cost_type = typename C::cost_type;

  struct Node {
    NodeKind kind;
    belief_type belief;        ///< OR: the belief; AND: the progression b_a
    bool terminal = false;     ///< OR only: target belief
    NodeId parent = kNoNode;   ///< AND only: the OR node it hangs from
    ActionId action = 0;       ///< AND only
    std::vector<EdgeId> out;
  };

  struct Edge {
    NodeId from;
    NodeId to;
    std::uint32_t label;  ///< action for OR->AND, observation for AND->OR
    value_type cost;
    std::optional<double> probability;
  };

  NodeId root() const noexcept { return root_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const Edge& edge(EdgeId id) const { return edges_.at(id); }
  std::size_t num_or_nodes() const noexcept { return or_index_.size(); }
  std::size_t num_and_nodes() const noexcept { return nodes_.size() - or_index_.size(); }
  std::size_t num_terminals() const {
    std::size_t c = 0;
    for (const auto& n : nodes_) c += (n.kind == NodeKind::Or && n.terminal);
    return c;
  }

  std::optional<NodeId> find(const belief_type& b) const {
    auto it = or_index_.find(b);
    if (it == or_index_.end()) return std::nullopt;
    return it->second;
  }

  /// The AND node for (or_node, action), if the action is applicable there.
  std::optional<NodeId> and_child(NodeId or_node, ActionId a) const {
    for (auto e : nodes_.at(or_node).out)
      if (edges_[e].label == a) return edges_[e].to;
    return std::nullopt;
  }

  std::optional<EdgeId> or_edge(NodeId or_node, ActionId a) const {
    for (auto e : nodes_.at(or_node).out)
      if (edges_[e].label == a) return e;
    return std::nullopt;
  }

  bool is_dead_end(NodeId id) const {
    const auto& n = nodes_.at(id);
    return n.kind == NodeKind::Or && !n.terminal && n.out.empty();
  }

  template <CriterionType C2>
  friend AndOrGraph<C2> build_graph(const DetPomdp&, std::size_t);

 private:
  NodeId root_ = 0;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<belief_type, NodeId> or_index_;
};

/// Breadth-first construction from b0. OR->AND edges carry c^max or c^exp,
/// AND->OR edges cost 0 and, for minexp, the observation probability.
/// Dead-end beliefs stay as non-terminal OR nodes without edges.
template <CriterionType C>
AndOrGraph<C> build_graph(const DetPomdp& m, std::size_t budget) {
  using G = AndOrGraph<C>;
  using B = typename C::belief_type;
  G g;
  std::deque<NodeId> frontier;
  auto intern = [&](B b) -> NodeId {
    if (auto it = g.or_index_.find(b); it != g.or_index_.end()) return it->second;
    if (g.or_index_.size() >= budget) throw BudgetExceeded(budget, g.or_index_.size());
    const auto id = static_cast<NodeId>(g.nodes_.size());
    const bool target = is_target(m, b);
    g.or_index_.emplace(b, id);
    g.nodes_.push_back({NodeKind::Or, std::move(b), target, kNoNode, 0, {}});
    frontier.push_back(id);
    return id;
  };
  g.root_ = intern(initial_belief<B>(m));
  while (!frontier.empty()) {
    const NodeId id = frontier.front();
    frontier.pop_front();
    if (g.nodes_[id].terminal) continue;
    const B b = g.nodes_[id].belief;
    for (auto a : applicable_actions(m, b)) {
      const auto and_id = static_cast<NodeId>(g.nodes_.size());
      g.nodes_.push_back({NodeKind::And, progress(m, b, a), false, id, a, {}});
      g.edges_.push_back({id, and_id, a, C::action_cost(m, b, a), std::nullopt});
      g.nodes_[id].out.push_back(static_cast<EdgeId>(g.edges_.size() - 1));
      for (auto& out : successors(m, b, a)) {
        const NodeId child = intern(std::move(out.belief));
        std::optional<double> p;
        if constexpr (C::kind == Criterion::MinExp) p = out.probability;
        g.edges_.push_back({and_id, child, out.observation, C::zero(), p});
        g.nodes_[and_id].out.push_back(static_cast<EdgeId>(g.edges_.size() - 1));
      }
    }
  }
  return g;
}

/// Debug/golden dump, one node per line:
///   n0 OR {0,1} : a=right c=1 -> n1
///   n1 AND {1,2} <- n0 a=right : o=0 -> n2
template <CriterionType C>
void dump_graph(std::ostream& os, const AndOrGraph<C>& g, const DetPomdp& m) {
  for (NodeId id = 0; id < g.nodes().size(); ++id) {
    const auto& n = g.node(id);
    os << 'n' << id;
    if (n.kind == NodeKind::Or) {
      os << " OR " << n.belief;
      if (id == g.root()) os << " root";
      if (n.terminal) os << " terminal";
      if (g.is_dead_end(id)) os << " dead-end";
    } else {
      os << " AND " << n.belief << " <- n" << n.parent << " a=" << m.actions[n.action].name;
    }
    bool first = true;
    for (auto e : n.out) {
      const auto& ed = g.edge(e);
      os << (first ? " : " : "; ");
      first = false;
      if (n.kind == NodeKind::Or)
        os << "a=" << m.actions[ed.label].name << " c=" << format_value(typename C::cost_type(ed.cost));
      else
        os << "o=" << ed.label;
      if (ed.probability) {
        std::ostringstream p;
        p.precision(9);
        p << *ed.probability;
        os << " p=" << p.str();
      }
      os << " -> n" << ed.to;
    }
    os << '\n';
  }
}

template <CriterionType C>
std::string dump_graph(const AndOrGraph<C>& g, const DetPomdp& m) {
  std::ostringstream os;
  dump_graph(os, g, m);
  return os.str();
}

// ---------------------------------------------------------------------------
// Solutions
// ---------------------------------------------------------------------------

/// A subset H(E) of graph edges; H spans the edges' endpoints (just the root
/// when H is empty).
struct Solution {
  std::vector<EdgeId> edges;  ///< sorted, unique

  friend bool operator==(const Solution&, const Solution&) = default;
};

struct SolutionViolation {
  int condition;  ///< 1: root in H, 2: AND keeps all edges, 3: OR keeps exactly one
  NodeId node;
  std::string message;
};

namespace graph_detail {

template <CriterionType C>
std::vector<NodeId> solution_nodes(const AndOrGraph<C>& g, const Solution& h) {
  std::vector<NodeId> ns;
  if (h.edges.empty()) return {g.root()};
  for (auto e : h.edges) {
    ns.push_back(g.edge(e).from);
    ns.push_back(g.edge(e).to);
  }
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  return ns;
}

}  // namespace graph_detail

/// Structural conditions (1)-(3); empty result means H is a solution.
template <CriterionType C>
std::vector<SolutionViolation> check_solution(const AndOrGraph<C>& g, const Solution& h) {
  std::vector<SolutionViolation> out;
  std::vector<bool> in_h(g.edges().size(), false);
  for (auto e : h.edges) {
    if (e >= g.edges().size()) {
      out.push_back({0, kNoNode, "edge " + std::to_string(e) + " does not exist"});
      continue;
    }
    in_h[e] = true;
  }
  if (!out.empty()) return out;
  const auto ns = graph_detail::solution_nodes(g, h);
  if (!std::binary_search(ns.begin(), ns.end(), g.root())) out.push_back({1, g.root(), "root is not in H"});
  for (auto id : ns) {
    const auto& n = g.node(id);
    if (n.kind == NodeKind::Or && n.terminal) continue;
    std::size_t kept = 0;
    for (auto e : n.out) kept += in_h[e];
    if (n.kind == NodeKind::And && kept != n.out.size())
      out.push_back({2, id, "AND node n" + std::to_string(id) + " drops an outgoing edge"});
    if (n.kind == NodeKind::Or && kept != 1)
      out.push_back({3, id, "OR node n" + std::to_string(id) + " keeps " + std::to_string(kept) + " outgoing edges"});
  }
  return out;
}

/// V_H(root): +infinity when H contains a cycle, otherwise the bottom-up
/// recursion (terminals 0, AND nodes max / probability-weighted sum, OR nodes
/// their single retained child). Throws InvalidSolution on structural breach.
template <CriterionType C>
typename C::cost_type solution_cost(const AndOrGraph<C>& g, const Solution& h) {
  using cost_type = typename C::cost_type;
  if (auto v = check_solution(g, h); !v.empty()) {
    std::string msg = "invalid solution:";
    for (const auto& x : v) msg += " (" + std::to_string(x.condition) + ") " + x.message + ";";
    throw InvalidSolution(msg);
  }
  std::vector<std::vector<EdgeId>> kept(g.nodes().size());
  for (auto e : h.edges) kept[g.edge(e).from].push_back(e);

  // Any cycle among H's edges makes the solution invalid (infinite cost).
  enum : std::uint8_t { kWhite, kGrey, kBlack };
  std::vector<std::uint8_t> color(g.nodes().size(), kWhite);
  for (auto start : graph_detail::solution_nodes(g, h)) {
    if (color[start] != kWhite) continue;
    std::vector<std::pair<NodeId, std::size_t>> stack{{start, 0}};
    color[start] = kGrey;
    while (!stack.empty()) {
      auto& [id, next] = stack.back();
      if (next < kept[id].size()) {
        const NodeId to = g.edge(kept[id][next++]).to;
        if (color[to] == kGrey) return cost_type::infinity();
        if (color[to] == kWhite) {
          color[to] = kGrey;
          stack.emplace_back(to, 0);
        }
      } else {
        color[id] = kBlack;
        stack.pop_back();
      }
    }
  }

  std::vector<std::optional<cost_type>> value(g.nodes().size());
  std::vector<std::pair<NodeId, bool>> stack{{g.root(), false}};
  while (!stack.empty()) {
    auto [id, ready] = stack.back();
    stack.pop_back();
    if (value[id]) continue;
    const auto& n = g.node(id);
    if (n.kind == NodeKind::Or && n.terminal) {
      value[id] = cost_type(C::zero());
      continue;
    }
    if (!ready) {
      stack.emplace_back(id, true);
      for (auto e : kept[id])
        if (!value[g.edge(e).to]) stack.emplace_back(g.edge(e).to, false);
      continue;
    }
    if (n.kind == NodeKind::Or) {
      const auto& e = g.edge(kept[id].front());
      value[id] = cost_type(e.cost) + *value[e.to];
    } else {
      typename C::Accumulator acc;
      for (auto eid : kept[id]) {
        const auto& e = g.edge(eid);
        acc.add(e.probability, cost_type(e.cost) + *value[e.to]);
      }
      value[id] = acc.result();
    }
  }
  return *value[g.root()];
}

/// The edges selected by a closed policy, walking from the root.
template <CriterionType C>
Solution policy_to_solution(const AndOrGraph<C>& g, const Policy<typename C::belief_type>& pi) {
  Solution h;
  std::vector<bool> seen(g.nodes().size(), false);
  std::vector<NodeId> stack{g.root()};
  seen[g.root()] = true;
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const auto& n = g.node(id);
    if (n.terminal) continue;
    const ActionId a = pi.at(n.belief);
    const auto e = g.or_edge(id, a);
    if (!e) {
      std::ostringstream os;
      os << "policy action " << a << " is not applicable at belief " << n.belief;
      throw ClosureError(os.str());
    }
    h.edges.push_back(*e);
    const NodeId and_id = g.edge(*e).to;
    for (auto oe : g.node(and_id).out) {
      h.edges.push_back(oe);
      const NodeId child = g.edge(oe).to;
      if (!seen[child]) {
        seen[child] = true;
        stack.push_back(child);
      }
    }
  }
  std::sort(h.edges.begin(), h.edges.end());
  h.edges.erase(std::unique(h.edges.begin(), h.edges.end()), h.edges.end());
  return h;
}

/// Minimal policy read off a solution: the chosen action at every OR node
/// reachable from the root through H, in breadth-first order.
template <CriterionType C>
Policy<typename C::belief_type> solution_to_policy(const AndOrGraph<C>& g, const Solution& h) {
  if (auto v = check_solution(g, h); !v.empty()) throw InvalidSolution("invalid solution: " + v.front().message);
  std::vector<std::vector<EdgeId>> kept(g.nodes().size());
  for (auto e : h.edges) kept[g.edge(e).from].push_back(e);
  Policy<typename C::belief_type> pi;
  std::vector<bool> seen(g.nodes().size(), false);
  std::deque<NodeId> queue{g.root()};
  seen[g.root()] = true;
  while (!queue.empty()) {
    const NodeId id = queue.front();
    queue.pop_front();
    const auto& n = g.node(id);
    if (n.kind == NodeKind::Or && !n.terminal) pi.set(n.belief, g.edge(kept[id].front()).label);
    for (auto e : kept[id]) {
      const NodeId to = g.edge(e).to;
      if (!seen[to]) {
        seen[to] = true;
        queue.push_back(to);
      }
    }
  }
  return pi;
}

}  // namespace detpomdp
