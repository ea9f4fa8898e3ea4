#include "tests/support.hpp"

#include <gtest/gtest.h>

using namespace detpomdp;
using testing_support::make_m3;

namespace {

/// {0} and {1} swap under "swap"; "finish" reaches the goal from 1 only.
DetPomdp toggle_model() {
  ModelBuilder mb(3, 1);
  const auto swap = mb.add_action("swap");
  const auto fin = mb.add_action("finish");
  mb.transition(0, swap, 1).transition(1, swap, 0).transition(1, fin, 2);
  mb.goal(2).initial_set({0});
  return mb.finish();
}

}  // namespace

TEST(AndOrGraph, M3Shape) {
  const auto g = build_graph<MinMax>(make_m3());
  // OR {0,1} -> AND -> OR {1,2} -> AND -> OR {2} (terminal).
  EXPECT_EQ(g.num_or_nodes(), 3u);
  EXPECT_EQ(g.num_and_nodes(), 2u);
  EXPECT_EQ(g.num_terminals(), 1u);
  for (const auto& e : g.edges())
    if (g.node(e.from).kind == NodeKind::Or) {
      EXPECT_EQ(e.cost, Rational(1));
    }
}

TEST(AndOrGraph, Dump) {
  const auto m = make_m3();
  EXPECT_EQ(dump_graph(build_graph<MinMax>(m), m),
            "n0 OR {0,1} root : a=right c=1 -> n1\n"
            "n1 AND {1,2} <- n0 a=right : o=0 -> n2\n"
            "n2 OR {1,2} : a=right c=1 -> n3\n"
            "n3 AND {2} <- n2 a=right : o=0 -> n4\n"
            "n4 OR {2} terminal\n");
}

TEST(AndOrGraph, TargetRootHasNoEdges) {
  auto m = make_m3();
  m.initial = InitialSet{{2}};
  const auto g = build_graph<MinMax>(m);
  EXPECT_EQ(g.nodes().size(), 1u);
  EXPECT_TRUE(g.node(g.root()).terminal);
  EXPECT_TRUE(g.edges().empty());
}

TEST(AndOrGraph, UnobservableProbabilitiesAreOne) {
  const auto g = build_graph<MinExp>(make_m3(true));
  for (const auto& e : g.edges()) {
    if (g.node(e.from).kind == NodeKind::And) {
      ASSERT_TRUE(e.probability.has_value());
      EXPECT_DOUBLE_EQ(*e.probability, 1.0);
    }
  }
}

TEST(AndOrGraph, DeadEndsKeptAsLeaves) {
  ModelBuilder mb(3, 1);
  const auto a = mb.add_action("a");
  mb.transition(0, a, 1).goal(2).initial_set({0});
  const auto g = build_graph<MinMax>(mb.finish());
  ASSERT_EQ(g.num_or_nodes(), 2u);
  EXPECT_TRUE(g.is_dead_end(*g.find(SetBelief(StateSet::of(3, std::vector<StateId>{1})))));
}

TEST(Solution, M3CostUnderBothCriteria) {
  const auto gx = build_graph<MinMax>(make_m3());
  Solution all;
  for (EdgeId e = 0; e < gx.edges().size(); ++e) all.edges.push_back(e);
  EXPECT_TRUE(check_solution(gx, all).empty());
  EXPECT_EQ(solution_cost(gx, all), MinMax::cost_type(Rational(2)));
  const auto ge = build_graph<MinExp>(make_m3(true));
  EXPECT_DOUBLE_EQ(solution_cost(ge, all).value(), 1.5);
}

TEST(Solution, TerminalRootCostsZero) {
  auto m = make_m3();
  m.initial = InitialSet{{2}};
  const auto g = build_graph<MinMax>(m);
  EXPECT_EQ(solution_cost(g, Solution{}), MinMax::cost_type(Rational(0)));
}

TEST(Solution, CycleIsInfinite) {
  const auto m = toggle_model();
  const auto g = build_graph<MinMax>(m);
  Solution h;
  // Pick "swap" everywhere.
  Policy<SetBelief> pi;
  pi.set(SetBelief(StateSet::of(3, std::vector<StateId>{0})), 0);
  pi.set(SetBelief(StateSet::of(3, std::vector<StateId>{1})), 0);
  h = policy_to_solution(g, pi);
  EXPECT_TRUE(solution_cost(g, h).is_infinite());
}

TEST(Solution, StructuralViolationsAreReported) {
  const auto g = build_graph<MinMax>(toggle_model());
  // {1} admits two actions, so keeping every edge breaks the OR condition there.
  Solution h;
  for (EdgeId e = 0; e < g.edges().size(); ++e) h.edges.push_back(e);
  const auto v = check_solution(g, h);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v.front().condition, 3);
  EXPECT_THROW(solution_cost(g, h), InvalidSolution);

  // Dropping the root: the edges below it alone.
  Solution below;
  for (EdgeId e = 0; e < g.edges().size(); ++e)
    if (g.edge(e).from != g.root() && g.edge(e).to != g.root()) below.edges.push_back(e);
  bool root_missing = false;
  for (const auto& x : check_solution(g, below)) root_missing |= x.condition == 1;
  EXPECT_TRUE(root_missing);
}

TEST(Solution, PolicyRoundTrip) {
  const auto m = toggle_model();
  const auto g = build_graph<MinMax>(m);
  Policy<SetBelief> pi;
  pi.set(SetBelief(StateSet::of(3, std::vector<StateId>{0})), 0);
  pi.set(SetBelief(StateSet::of(3, std::vector<StateId>{1})), 1);
  const auto h = policy_to_solution(g, pi);
  EXPECT_EQ(solution_cost(g, h), MinMax::cost_type(Rational(2)));
  EXPECT_EQ(solution_to_policy(g, h), pi);
}

TEST(Solution, NonClosedPolicyRejected) {
  const auto g = build_graph<MinMax>(toggle_model());
  Policy<SetBelief> pi;
  pi.set(SetBelief(StateSet::of(3, std::vector<StateId>{0})), 0);
  EXPECT_THROW(policy_to_solution(g, pi), ClosureError);
}
