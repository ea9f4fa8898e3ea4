#pragma once

// Generators for flat models of classic knowledge-gathering and navigation
// problems, and for the SAT reduction to unobservable planning.
//
// Identification problems (coins, diagnosis) realize "identify the state"
// with one declare action per state: declaring the true state leads to the
// goal, any other declaration to an absorbing non-goal sink. Declaring costs 1
// like every other action, so optimal values include that final step.

#include "detpomdp/belief.hpp"
#include "detpomdp/model.hpp"

#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace detpomdp {

struct MastermindSpec {
  std::size_t length = 2;    ///< m, word length
  std::size_t alphabet = 2;  ///< n, symbols
};

struct CoinsSpec {
  std::size_t coins = 3;
};

struct DiagnosisSpec {
  std::vector<std::vector<int>> matrix;  ///< matrix[i][j] = 1 iff test j is positive in state i
};

struct Cell {
  std::size_t row = 0, col = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct GridNavSpec {
  std::size_t rows = 1, cols = 1;
  std::vector<Cell> blocked;  ///< known untraversable
  std::vector<Cell> unknown;  ///< traversability unknown
  Cell start, goal;
};

/// CNF over variables 1..num_vars; literal +v / -v.
struct Cnf {
  std::size_t num_vars = 0;
  std::vector<std::vector<int>> clauses;
};

using DomainSpec = std::variant<MastermindSpec, CoinsSpec, DiagnosisSpec, GridNavSpec, Cnf>;

namespace domain_detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

/// Appends an absorbing non-goal sink (cost 1 under every action) and one
/// declare action per identifiable state. States 0..k-1 are the candidates.
inline void add_declarations(ModelBuilder& mb, std::size_t k, StateId goal, StateId sink,
                             const std::function<std::string(StateId)>& label) {
  for (StateId i = 0; i < k; ++i) {
    const ActionId d = mb.add_action("declare " + label(i));
    for (StateId s = 0; s < k; ++s) mb.transition(s, d, s == i ? goal : sink);
    mb.transition(sink, d, sink);
  }
}

}  // namespace domain_detail

// ---------------------------------------------------------------------------
// Mastermind
// ---------------------------------------------------------------------------

/// Exact and near matches, near matches counted with multiset semantics.
inline std::pair<std::size_t, std::size_t> mastermind_score(const std::vector<std::size_t>& guess,
                                                            const std::vector<std::size_t>& secret,
                                                            std::size_t alphabet) {
  std::size_t exact = 0;
  std::vector<std::size_t> g(alphabet, 0), s(alphabet, 0);
  for (std::size_t k = 0; k < guess.size(); ++k) {
    if (guess[k] == secret[k]) {
      ++exact;
    } else {
      ++g[guess[k]];
      ++s[secret[k]];
    }
  }
  std::size_t near = 0;
  for (std::size_t c = 0; c < alphabet; ++c) near += std::min(g[c], s[c]);
  return {exact, near};
}

/// States: the n^m secret words (word k spelled in base n, least significant
/// symbol first) and a solved goal. Guessing the secret moves to solved;
/// otherwise the state is unchanged and (exact, near) is observed, encoded as
/// exact * (m + 1) + near. b0 is every secret.
inline DetPomdp gen_mastermind(const MastermindSpec& spec, std::size_t max_states = 100000) {
  const auto m = spec.length, n = spec.alphabet;
  domain_detail::require(m >= 1 && n >= 1, "mastermind needs m >= 1 and n >= 1");
  std::size_t words = 1;
  for (std::size_t k = 0; k < m; ++k) {
    words *= n;
    if (words + 1 > max_states) throw BudgetExceeded(max_states, words);
  }
  auto spell = [&](std::size_t w) {
    std::vector<std::size_t> v(m);
    for (std::size_t k = 0; k < m; ++k, w /= n) v[k] = w % n;
    return v;
  };
  const auto solved = static_cast<StateId>(words);
  ModelBuilder mb(words + 1, (m + 1) * (m + 1));
  const auto solved_obs = static_cast<ObsId>(m * (m + 1));
  std::vector<std::vector<std::size_t>> spelled(words);
  for (std::size_t w = 0; w < words; ++w) spelled[w] = spell(w);
  for (std::size_t g = 0; g < words; ++g) {
    std::string name = "guess ";
    for (auto c : spelled[g]) name += std::to_string(c);
    const ActionId a = mb.add_action(name);
    for (StateId s = 0; s < words; ++s) {
      if (s == g) {
        mb.transition(s, a, solved).observation(solved, a, solved_obs);
      } else {
        mb.transition(s, a, s);
        auto [exact, near] = mastermind_score(spelled[g], spelled[s], n);
        mb.observation(s, a, static_cast<ObsId>(exact * (m + 1) + near));
      }
    }
    mb.observation(solved, a, solved_obs);
  }
  std::vector<StateId> all(words);
  std::iota(all.begin(), all.end(), StateId{0});
  mb.goal(solved).initial_set(all);
  return mb.finish();
}

// ---------------------------------------------------------------------------
// Coins
// ---------------------------------------------------------------------------

enum CoinsObservation : ObsId { kBalanced = 0, kLeftHeavy = 1, kRightHeavy = 2 };

/// State 2i: coin i is heavy; 2i+1: coin i is light; 2n: goal; 2n+1: sink.
inline StateId coin_state(std::size_t coin, bool heavy) { return static_cast<StateId>(2 * coin + (heavy ? 0 : 1)); }

/// All weighings (L, R) with |L| = |R| >= 1, L and R disjoint, L
/// lexicographically before R; by pan size, then L, then R.
inline std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> coin_weighings(std::size_t n) {
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> out;
  // Lexicographic k-subsets of `pool`.
  auto subsets = [](const std::vector<std::size_t>& pool, std::size_t k) {
    std::vector<std::vector<std::size_t>> res;
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    if (k > pool.size()) return res;
    while (true) {
      std::vector<std::size_t> pick;
      for (auto i : idx) pick.push_back(pool[i]);
      res.push_back(std::move(pick));
      std::size_t p = k;
      while (p > 0 && idx[p - 1] == pool.size() - k + p - 1) --p;
      if (p == 0) break;
      ++idx[p - 1];
      for (std::size_t q = p; q < k; ++q) idx[q] = idx[q - 1] + 1;
    }
    return res;
  };
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t k = 1; 2 * k <= n; ++k)
    for (auto& left : subsets(all, k)) {
      std::vector<std::size_t> rest;
      for (auto c : all)
        if (!std::binary_search(left.begin(), left.end(), c)) rest.push_back(c);
      for (auto& right : subsets(rest, k))
        if (left < right) out.push_back({left, right});
    }
  return out;
}

inline DetPomdp gen_coins(const CoinsSpec& spec) {
  const auto n = spec.coins;
  domain_detail::require(n >= 3, "coins needs at least 3 coins");
  const auto goal = static_cast<StateId>(2 * n), sink = static_cast<StateId>(2 * n + 1);
  ModelBuilder mb(2 * n + 2, 3);
  auto list = [](const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
    return s;
  };
  for (const auto& [left, right] : coin_weighings(n)) {
    const ActionId a = mb.add_action("weigh " + list(left) + " | " + list(right));
    for (StateId s = 0; s < 2 * n + 2; ++s) mb.transition(s, a, s);
    for (auto c : left) {
      mb.observation(coin_state(c, true), a, kLeftHeavy);
      mb.observation(coin_state(c, false), a, kRightHeavy);
    }
    for (auto c : right) {
      mb.observation(coin_state(c, true), a, kRightHeavy);
      mb.observation(coin_state(c, false), a, kLeftHeavy);
    }
  }
  domain_detail::add_declarations(mb, 2 * n, goal, sink,
                                  [](StateId s) { return std::to_string(s / 2) + (s % 2 ? "L" : "H"); });
  std::vector<StateId> all(2 * n);
  std::iota(all.begin(), all.end(), StateId{0});
  mb.goal(goal).initial_set(all);
  return mb.finish();
}

/// Representative of a coins belief under renaming of coins: per-coin
/// (heavy possible, light possible) pairs sorted in decreasing order.
/// Renaming coins maps weighings to weighings (possibly with the pans and the
/// two unbalanced observations swapped), so optimal values are invariant.
inline std::function<SetBelief(const SetBelief&)> coins_symmetry(std::size_t n) {
  return [n](const SetBelief& b) {
    const auto& s = b.support();
    std::vector<int> status(n);
    for (std::size_t c = 0; c < n; ++c) status[c] = (s.test(2 * c) ? 2 : 0) + (s.test(2 * c + 1) ? 1 : 0);
    std::sort(status.rbegin(), status.rend());
    StateSet out(s.universe());
    for (std::size_t c = 0; c < n; ++c) {
      if (status[c] & 2) out.set(2 * c);
      if (status[c] & 1) out.set(2 * c + 1);
    }
    for (std::size_t x = 2 * n; x < s.universe(); ++x)
      if (s.test(x)) out.set(x);
    return SetBelief(std::move(out));
  };
}

// ---------------------------------------------------------------------------
// Diagnosis
// ---------------------------------------------------------------------------

/// States 0..m-1 are the system states, m the goal, m+1 the sink. Tests leave
/// the state unchanged and observe 1 (positive) or 0 (negative).
inline DetPomdp gen_diagnosis(const DiagnosisSpec& spec) {
  const auto m = spec.matrix.size();
  domain_detail::require(m >= 1, "diagnosis needs at least one state");
  const auto tests = spec.matrix.front().size();
  for (const auto& row : spec.matrix) {
    domain_detail::require(row.size() == tests, "diagnosis matrix rows differ in length");
    for (auto v : row) domain_detail::require(v == 0 || v == 1, "diagnosis matrix must be binary");
  }
  const auto goal = static_cast<StateId>(m), sink = static_cast<StateId>(m + 1);
  ModelBuilder mb(m + 2, 2);
  for (std::size_t j = 0; j < tests; ++j) {
    const ActionId a = mb.add_action("test " + std::to_string(j));
    for (StateId s = 0; s < m + 2; ++s) mb.transition(s, a, s);
    for (StateId s = 0; s < m; ++s) mb.observation(s, a, static_cast<ObsId>(spec.matrix[s][j]));
  }
  domain_detail::add_declarations(mb, m, goal, sink, [](StateId s) { return std::to_string(s); });
  std::vector<StateId> all(m);
  std::iota(all.begin(), all.end(), StateId{0});
  mb.goal(goal).initial_set(all);
  return mb.finish();
}

// ---------------------------------------------------------------------------
// Grid navigation
// ---------------------------------------------------------------------------

/// State (cell, assignment) has index assignment * rows * cols + cell, where
/// bit k of the assignment says whether unknown cell k is traversable. Moves
/// into walls, the border or untraversable cells leave the robot in place.
/// After a move the robot observes its cell and which of the four cells
/// around it (bits N, E, S, W) are unknown and traversable, encoded as
/// cell * 16 + bits.
inline DetPomdp gen_gridnav(const GridNavSpec& spec) {
  const auto rows = spec.rows, cols = spec.cols;
  domain_detail::require(rows >= 1 && cols >= 1, "grid must be non-empty");
  const auto cells = rows * cols;
  auto in_grid = [&](const Cell& c) { return c.row < rows && c.col < cols; };
  auto id = [&](const Cell& c) { return c.row * cols + c.col; };
  domain_detail::require(in_grid(spec.start) && in_grid(spec.goal), "start and goal must lie in the grid");
  domain_detail::require(spec.unknown.size() <= 16, "at most 16 unknown cells");

  std::vector<int> unknown_index(cells, -1);
  std::vector<bool> blocked(cells, false);
  for (const auto& c : spec.blocked) {
    domain_detail::require(in_grid(c), "blocked cell outside the grid");
    blocked[id(c)] = true;
  }
  for (std::size_t k = 0; k < spec.unknown.size(); ++k) {
    const auto& c = spec.unknown[k];
    domain_detail::require(in_grid(c), "unknown cell outside the grid");
    domain_detail::require(unknown_index[id(c)] < 0 && !blocked[id(c)], "unknown cell listed twice or blocked");
    unknown_index[id(c)] = static_cast<int>(k);
  }
  domain_detail::require(!blocked[id(spec.start)] && unknown_index[id(spec.start)] < 0,
                         "start cell must be known traversable");
  domain_detail::require(!blocked[id(spec.goal)] && unknown_index[id(spec.goal)] < 0, "goal cell must be known");

  const std::size_t assignments = std::size_t{1} << spec.unknown.size();
  auto traversable = [&](std::size_t cell, std::size_t asg) {
    if (blocked[cell]) return false;
    const int k = unknown_index[cell];
    return k < 0 || ((asg >> k) & 1);
  };
  // N, E, S, W
  const int dr[4] = {-1, 0, 1, 0}, dc[4] = {0, 1, 0, -1};
  auto neighbor = [&](std::size_t cell, int d) -> std::optional<std::size_t> {
    const long r = static_cast<long>(cell / cols) + dr[d], c = static_cast<long>(cell % cols) + dc[d];
    if (r < 0 || c < 0 || r >= static_cast<long>(rows) || c >= static_cast<long>(cols)) return std::nullopt;
    return static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c);
  };
  auto sense = [&](std::size_t cell, std::size_t asg) {
    auto o = static_cast<ObsId>(cell * 16);
    for (int d = 0; d < 4; ++d)
      if (auto nb = neighbor(cell, d); nb && unknown_index[*nb] >= 0 && traversable(*nb, asg)) o |= ObsId{1} << d;
    return o;
  };

  ModelBuilder mb(cells * assignments, cells * 16);
  const char* names[4] = {"north", "east", "south", "west"};
  for (int d = 0; d < 4; ++d) {
    const ActionId a = mb.add_action(names[d]);
    for (std::size_t asg = 0; asg < assignments; ++asg)
      for (std::size_t cell = 0; cell < cells; ++cell) {
        const auto s = static_cast<StateId>(asg * cells + cell);
        if (cell == id(spec.goal)) continue;  // goal states are closed by the builder
        auto nb = neighbor(cell, d);
        const std::size_t to = nb && traversable(*nb, asg) ? *nb : cell;
        mb.transition(s, a, static_cast<StateId>(asg * cells + to));
        mb.observation(static_cast<StateId>(asg * cells + to), a, sense(to, asg));
      }
  }
  std::vector<StateId> init;
  for (std::size_t asg = 0; asg < assignments; ++asg) {
    mb.goal(static_cast<StateId>(asg * cells + id(spec.goal)));
    init.push_back(static_cast<StateId>(asg * cells + id(spec.start)));
  }
  mb.initial_set(init);
  return mb.finish();
}

// ---------------------------------------------------------------------------
// SAT reduction
// ---------------------------------------------------------------------------

inline void validate_cnf(const Cnf& f) {
  domain_detail::require(f.num_vars >= 1, "formula needs at least one variable");
  domain_detail::require(!f.clauses.empty(), "formula needs at least one clause");
  for (const auto& c : f.clauses) {
    domain_detail::require(!c.empty() && c.size() <= 3, "clauses must have 1 to 3 literals");
    for (auto lit : c) {
      domain_detail::require(lit != 0 && static_cast<std::size_t>(std::abs(lit)) <= f.num_vars, "literal out of range");
      domain_detail::require(std::find(c.begin(), c.end(), -lit) == c.end(), "tautological clause");
    }
  }
}

/// State [x_i, C_j] has index i * m + j (both 0-based); t = n * m, f = n * m + 1.
/// set(i, v) is applicable on column i and on t and f. It sends [x_i, C_j] to
/// t when x_i satisfies C_j under value v, otherwise to [x_{i+1}, C_j], or to
/// f after the last variable. f is absorbing but not a goal.
inline DetPomdp gen_sat(const Cnf& f) {
  validate_cnf(f);
  const auto n = f.num_vars, m = f.clauses.size();
  const auto t = static_cast<StateId>(n * m), fail = static_cast<StateId>(n * m + 1);
  ModelBuilder mb(n * m + 2, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (int v = 0; v <= 1; ++v) {
      const ActionId a = mb.add_action("set(" + std::to_string(i + 1) + "," + std::to_string(v) + ")");
      const int satisfying = v ? static_cast<int>(i + 1) : -static_cast<int>(i + 1);
      for (std::size_t j = 0; j < m; ++j) {
        const auto& c = f.clauses[j];
        const bool sat = std::find(c.begin(), c.end(), satisfying) != c.end();
        const StateId next = sat ? t : (i + 1 < n ? static_cast<StateId>((i + 1) * m + j) : fail);
        mb.transition(static_cast<StateId>(i * m + j), a, next);
      }
      mb.transition(fail, a, fail);
    }
  std::vector<StateId> init;
  for (std::size_t j = 0; j < m; ++j) init.push_back(static_cast<StateId>(j));
  mb.goal(t).initial_set(init);
  return mb.finish();
}

/// Random CNF with clauses of exactly min(3, num_vars) literals over distinct
/// variables with random signs.
template <class Rng>
Cnf random_3cnf(std::size_t num_vars, std::size_t num_clauses, Rng& rng) {
  Cnf f;
  f.num_vars = num_vars;
  const std::size_t width = std::min<std::size_t>(3, num_vars);
  std::vector<int> vars(num_vars);
  std::iota(vars.begin(), vars.end(), 1);
  for (std::size_t j = 0; j < num_clauses; ++j) {
    std::shuffle(vars.begin(), vars.end(), rng);
    std::vector<int> clause;
    for (std::size_t k = 0; k < width; ++k) clause.push_back(std::uniform_int_distribution<int>(0, 1)(rng) ? vars[k] : -vars[k]);
    f.clauses.push_back(std::move(clause));
  }
  return f;
}

/// Generates the model described by any spec.
inline DetPomdp generate(const DomainSpec& spec) {
  return std::visit(
      [](const auto& s) -> DetPomdp {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MastermindSpec>) return gen_mastermind(s);
        else if constexpr (std::is_same_v<T, CoinsSpec>) return gen_coins(s);
        else if constexpr (std::is_same_v<T, DiagnosisSpec>) return gen_diagnosis(s);
        else if constexpr (std::is_same_v<T, GridNavSpec>) return gen_gridnav(s);
        else return gen_sat(s);
      },
      spec);
}

}  // namespace detpomdp
