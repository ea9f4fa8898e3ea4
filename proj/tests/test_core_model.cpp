#include "tests/support.hpp"

#include <gtest/gtest.h>

using namespace detpomdp;
using testing_support::make_m3;

TEST(StateSet, BasicOperations) {
  auto s = StateSet::of(70, std::vector<StateId>{0, 3, 65});
  EXPECT_EQ(s.count(), 3u);
  EXPECT_TRUE(s.test(65));
  EXPECT_FALSE(s.test(64));
  EXPECT_EQ(s.to_vector(), (std::vector<StateId>{0, 3, 65}));
  auto t = StateSet::of(70, std::vector<StateId>{3});
  EXPECT_TRUE(t.is_subset_of(s));
  EXPECT_FALSE(s.is_subset_of(t));
  EXPECT_EQ((s & t), t);
  EXPECT_EQ(StateSet::all(70).count(), 70u);
}

TEST(Rational, ParsesFractionsAndDecimals) {
  EXPECT_EQ(parse_rational("3/4"), Rational(3, 4));
  EXPECT_EQ(parse_rational("0.25"), Rational(1, 4));
  EXPECT_EQ(parse_rational("2"), Rational(2));
  EXPECT_THROW(parse_rational("x"), FormatError);
}

TEST(ExtendedCost, InfinitySaturates) {
  using C = ExtendedCost<Rational>;
  const auto inf = C::infinity();
  EXPECT_TRUE((inf + C(Rational(3))).is_infinite());
  EXPECT_LT(C(Rational(1000000)), inf);
  EXPECT_EQ(format_value(inf), "inf");
  EXPECT_EQ(format_value(C(Rational(3, 2))), "3/2");
}

TEST(Validate, M3IsValid) { EXPECT_TRUE(validate(make_m3()).empty()); }

TEST(Validate, NonzeroGoalCost) {
  auto m = make_m3();
  m.actions[0].costs[2] = Rational(1);
  const auto r = validate(m);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].code, "goal-cost-nonzero");
}

TEST(Validate, GoalNotAbsorbing) {
  auto m = make_m3();
  m.actions[0].effects[2] = 0;
  const auto r = validate(m);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].code, "goal-not-absorbing");
}

TEST(Validate, ReportsEveryViolation) {
  auto m = make_m3();
  m.actions[0].costs[0] = Rational(0);
  m.actions[0].costs[2] = Rational(1);
  m.initial = InitialSet{{}};
  EXPECT_EQ(validate(m).size(), 3u);
}

TEST(Validate, ObservationOutOfRange) {
  auto m = make_m3();
  m.obs_fn[1] = 4;
  ASSERT_EQ(validate(m).size(), 1u);
  EXPECT_EQ(validate(m)[0].code, "obs-range");
}

TEST(TransitionGraph, M3Edges) {
  const auto g = transition_graph(make_m3());
  EXPECT_EQ(g, (std::vector<std::vector<StateId>>{{1}, {2}, {2}}));
}

TEST(TransitionGraph, IdentityActionsGiveOnlySelfLoops) {
  ModelBuilder mb(4, 1);
  const auto a = mb.add_action("stay");
  for (StateId s = 0; s < 3; ++s) mb.transition(s, a, s);
  mb.goal(3).initial_set({0});
  const auto g = transition_graph(mb.finish());
  for (StateId s = 0; s < 4; ++s) EXPECT_EQ(g[s], std::vector<StateId>{s});
}

TEST(TransitionGraph, SatConstructionIsAcyclicApartFromSinks) {
  const auto m = gen_sat(Cnf{3, {{1, 2, 3}}});
  const auto g = transition_graph(m);
  // Brute force: no state other than t, f reaches itself by a path of length >= 1.
  for (StateId s = 0; s < m.num_states; ++s) {
    std::set<StateId> seen;
    std::vector<StateId> stack(g[s].begin(), g[s].end());
    bool returns = false;
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      if (x == s) returns = true;
      if (!seen.insert(x).second) continue;
      for (auto y : g[x]) stack.push_back(y);
    }
    const bool sink = s + 2 >= m.num_states;
    EXPECT_EQ(returns, sink) << "state " << s;
  }
}

TEST(ModelIo, RoundTrip) {
  const auto m = make_m3();
  const auto text = save_model(m);
  const auto back = load_model(text);
  EXPECT_EQ(save_model(back), text);
  EXPECT_EQ(model_hash(back), model_hash(m));
  const auto u = make_m3(true);
  EXPECT_EQ(save_model(load_model(save_model(u))), save_model(u));
}

TEST(ModelIo, DistributionMustSumToOne) {
  auto text = save_model(make_m3(true));
  const auto pos = text.find("0.5");
  text.replace(pos, 3, "0.4");
  try {
    load_model(text);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("initial.dist sum"), std::string::npos) << e.what();
  }
}

TEST(ModelIo, RationalCostsSurvive) {
  ModelBuilder mb(2, 1);
  const auto a = mb.add_action("go");
  mb.transition(0, a, 1, Rational(2, 3)).goal(1).initial_set({0});
  const auto m = mb.finish();
  EXPECT_EQ(load_model(save_model(m)).cost(0, a), Rational(2, 3));
}

TEST(ModelIo, MalformedDocumentsNameTheField) {
  EXPECT_THROW(load_model("{"), FormatError);
  EXPECT_THROW(load_model(R"({"num_states": 0})"), FormatError);
  try {
    load_model(R"({"num_states": 2, "num_observations": 1, "goal": [5], "initial": {"kind":"set","states":[0]}, "actions": []})");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("goal"), std::string::npos) << e.what();
  }
}

TEST(Relabel, PreservesValidity) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const auto m = testing_support::random_model(rng);
    std::vector<StateId> perm(m.num_states);
    std::iota(perm.begin(), perm.end(), StateId{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_TRUE(validate(relabel_states(m, perm)).empty());
  }
}
