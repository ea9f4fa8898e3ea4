#pragma once

#include "detpomdp/belief.hpp"

#include <string>
#include <string_view>

namespace detpomdp {

enum class Criterion { MinMax, MinExp };

/// Worst-case total cost over set beliefs, exact rational arithmetic.
struct MinMax {
  using belief_type = SetBelief;
  using value_type = Rational;
  using cost_type = ExtendedCost<Rational>;
  static constexpr Criterion kind = Criterion::MinMax;
  static constexpr std::string_view name = "minmax";

  /// c^max(b, a) = max over the support of c(i, a).
  static value_type action_cost(const DetPomdp& m, const SetBelief& b, ActionId a) {
    value_type worst(0);
    for (auto s : b.support()) worst = std::max(worst, m.cost(s, a));
    return worst;
  }

  static cost_type state_cost(const DetPomdp& m, StateId s, ActionId a) { return m.cost(s, a); }

  /// Aggregate over outcomes: the worst child.
  struct Accumulator {
    cost_type acc{value_type(0)};
    void add(std::optional<double>, const cost_type& v) { acc = max(acc, v); }
    cost_type result() const { return acc; }
  };

  static value_type zero() { return value_type(0); }
};

/// Expected total cost over distributions, double precision.
struct MinExp {
  using belief_type = DistBelief;
  using value_type = double;
  using cost_type = ExtendedCost<double>;
  static constexpr Criterion kind = Criterion::MinExp;
  static constexpr std::string_view name = "minexp";

  /// c^exp(b, a) = sum over the support of b(i) c(i, a).
  static value_type action_cost(const DetPomdp& m, const DistBelief& b, ActionId a) {
    double total = 0;
    for (std::size_t k = 0; k < b.size(); ++k) total += b.probs()[k] * to_double(m.cost(b.states()[k], a));
    return total;
  }

  static cost_type state_cost(const DetPomdp& m, StateId s, ActionId a) { return to_double(m.cost(s, a)); }

  /// Aggregate over outcomes: probability-weighted sum.
  struct Accumulator {
    cost_type acc{0.0};
    void add(std::optional<double> p, const cost_type& v) {
      const double w = p.value_or(1.0);
      if (w == 0) return;
      if (v.is_infinite() || acc.is_infinite())
        acc = cost_type::infinity();
      else
        acc = cost_type(acc.value() + w * v.value());
    }
    cost_type result() const { return acc; }
  };

  static value_type zero() { return 0.0; }
};

template <class C>
concept CriterionType = std::same_as<C, MinMax> || std::same_as<C, MinExp>;

inline std::string_view to_string(Criterion c) { return c == Criterion::MinMax ? MinMax::name : MinExp::name; }

inline Criterion parse_criterion(std::string_view s) {
  if (s == "minmax") return Criterion::MinMax;
  if (s == "minexp") return Criterion::MinExp;
  throw std::invalid_argument("unknown criterion '" + std::string(s) + "' (expected minmax or minexp)");
}

/// Calls f(MinMax{}) or f(MinExp{}) according to the runtime criterion.
template <class F>
decltype(auto) with_criterion(Criterion c, F&& f) {
  if (c == Criterion::MinMax) return std::forward<F>(f)(MinMax{});
  return std::forward<F>(f)(MinExp{});
}

}  // namespace detpomdp
