#pragma once

// Basic vocabulary shared by every module: index types, the state bit-set,
// exact rationals, extended (possibly infinite) costs and the error types.

#include <boost/container/small_vector.hpp>
#include <boost/rational.hpp>

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace detpomdp {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;
using ObsId = std::uint32_t;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An action was applied at a belief containing a state where it is not applicable.
class PreconditionError : public Error {
 public:
  PreconditionError(ActionId action, StateId state)
      : Error("action " + std::to_string(action) + " is not applicable at state " +
              std::to_string(state)),
        action_(action),
        state_(state) {}
  ActionId action() const noexcept { return action_; }
  StateId state() const noexcept { return state_; }

 private:
  ActionId action_;
  StateId state_;
};

/// Filtering left no state consistent with the observation.
class ImpossibleObservation : public Error {
 public:
  using Error::Error;
};

/// A policy is not closed: some reachable belief has no action.
class ClosureError : public Error {
 public:
  using Error::Error;
};

/// Enumeration or search exceeded its node budget.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(std::size_t budget, std::size_t partial)
      : Error("node budget of " + std::to_string(budget) + " exceeded after " +
              std::to_string(partial) + " nodes"),
        budget_(budget),
        partial_(partial) {}
  std::size_t budget() const noexcept { return budget_; }
  std::size_t partial_count() const noexcept { return partial_; }

 private:
  std::size_t budget_;
  std::size_t partial_;
};

/// Model or policy document could not be parsed or violates its schema.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// The model does not belong to the class an operation requires
/// (e.g. an observable model handed to the unobservable planner).
class WrongModelClass : public Error {
 public:
  using Error::Error;
};

/// A candidate AND/OR solution breaks one of the structural conditions.
class InvalidSolution : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// StateSet: fixed-universe bit-set over state indices
// ---------------------------------------------------------------------------

class StateSet {
  using Word = std::uint64_t;
  static constexpr std::size_t kBits = 64;

 public:
  StateSet() = default;
  explicit StateSet(std::size_t universe) : size_(universe), words_((universe + kBits - 1) / kBits, 0) {}

  static StateSet all(std::size_t universe) {
    StateSet s(universe);
    for (auto& w : s.words_) w = ~Word{0};
    s.trim();
    return s;
  }

  template <class Range>
  static StateSet of(std::size_t universe, const Range& states) {
    StateSet s(universe);
    for (auto i : states) s.set(static_cast<std::size_t>(i));
    return s;
  }

  std::size_t universe() const noexcept { return size_; }

  bool test(std::size_t i) const {
    assert(i < size_);
    return (words_[i / kBits] >> (i % kBits)) & 1u;
  }
  void set(std::size_t i) {
    assert(i < size_);
    words_[i / kBits] |= Word{1} << (i % kBits);
  }
  void reset(std::size_t i) {
    assert(i < size_);
    words_[i / kBits] &= ~(Word{1} << (i % kBits));
  }

  std::size_t count() const noexcept {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool empty() const noexcept {
    return std::all_of(words_.begin(), words_.end(), [](Word w) { return w == 0; });
  }

  bool is_subset_of(const StateSet& other) const {
    assert(size_ == other.size_);
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & ~other.words_[k]) return false;
    return true;
  }
  bool intersects(const StateSet& other) const {
    assert(size_ == other.size_);
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & other.words_[k]) return true;
    return false;
  }

  StateSet& operator&=(const StateSet& other) {
    assert(size_ == other.size_);
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= other.words_[k];
    return *this;
  }
  StateSet& operator|=(const StateSet& other) {
    assert(size_ == other.size_);
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= other.words_[k];
    return *this;
  }
  friend StateSet operator&(StateSet a, const StateSet& b) { return a &= b; }
  friend StateSet operator|(StateSet a, const StateSet& b) { return a |= b; }

  friend bool operator==(const StateSet& a, const StateSet& b) {
    return a.size_ == b.size_ && std::equal(a.words_.begin(), a.words_.end(), b.words_.begin());
  }

  /// Lexicographic order on the ascending member lists; used for stable output.
  friend bool operator<(const StateSet& a, const StateSet& b) {
    return a.to_vector() < b.to_vector();
  }

  std::size_t hash() const noexcept {
    std::size_t h = 0xcbf29ce484222325ull ^ size_;
    for (auto w : words_) {
      h ^= static_cast<std::size_t>(w);
      h *= 0x100000001b3ull;
      h ^= h >> 29;
    }
    return h;
  }

  /// Smallest member >= from, or universe() when none.
  std::size_t next(std::size_t from) const noexcept {
    if (from >= size_) return size_;
    std::size_t k = from / kBits;
    Word w = words_[k] & (~Word{0} << (from % kBits));
    while (true) {
      if (w) return std::min(size_, k * kBits + static_cast<std::size_t>(std::countr_zero(w)));
      if (++k >= words_.size()) return size_;
      w = words_[k];
    }
  }

  class const_iterator {
   public:
    using value_type = StateId;
    using difference_type = std::ptrdiff_t;
    const_iterator() = default;
    const_iterator(const StateSet* s, std::size_t pos) : set_(s), pos_(pos) {}
    StateId operator*() const { return static_cast<StateId>(pos_); }
    const_iterator& operator++() {
      pos_ = set_->next(pos_ + 1);
      return *this;
    }
    const_iterator operator++(int) {
      auto tmp = *this;
      ++*this;
      return tmp;
    }
    friend bool operator==(const const_iterator& a, const const_iterator& b) { return a.pos_ == b.pos_; }

   private:
    const StateSet* set_ = nullptr;
    std::size_t pos_ = 0;
  };

  const_iterator begin() const { return {this, next(0)}; }
  const_iterator end() const { return {this, size_}; }

  std::vector<StateId> to_vector() const { return {begin(), end()}; }

 private:
  void trim() {
    if (size_ % kBits && !words_.empty()) words_.back() &= (Word{1} << (size_ % kBits)) - 1;
  }

  std::size_t size_ = 0;
  boost::container::small_vector<Word, 2> words_;
};

inline std::ostream& operator<<(std::ostream& os, const StateSet& s) {
  os << '{';
  bool first = true;
  for (auto i : s) {
    if (!first) os << ',';
    os << i;
    first = false;
  }
  return os << '}';
}

// ---------------------------------------------------------------------------
// Rationals
// ---------------------------------------------------------------------------

using Rational = boost::rational<std::int64_t>;

inline std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// Parses "p", "p/q" or a finite decimal such as "0.25".
inline Rational parse_rational(const std::string& text) {
  auto fail = [&] { throw FormatError("not a rational number: '" + text + "'"); };
  if (text.empty()) fail();
  try {
    if (auto slash = text.find('/'); slash != std::string::npos) {
      std::size_t used = 0;
      auto num = std::stoll(text.substr(0, slash), &used);
      if (used != slash) fail();
      auto den_text = text.substr(slash + 1);
      auto den = std::stoll(den_text, &used);
      if (used != den_text.size() || den == 0) fail();
      return Rational(num, den);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) {
      std::size_t used = 0;
      auto v = std::stoll(text, &used);
      if (used != text.size()) fail();
      return Rational(v);
    }
    auto int_part = text.substr(0, dot);
    auto frac_part = text.substr(dot + 1);
    if (frac_part.empty() || frac_part.size() > 15 ||
        !std::all_of(frac_part.begin(), frac_part.end(), [](char c) { return c >= '0' && c <= '9'; }))
      fail();
    bool negative = !int_part.empty() && int_part[0] == '-';
    std::int64_t whole = 0;
    if (!int_part.empty() && int_part != "-" && int_part != "+") {
      std::size_t used = 0;
      whole = std::stoll(int_part, &used);
      if (used != int_part.size()) fail();
    }
    std::int64_t den = 1;
    for (std::size_t k = 0; k < frac_part.size(); ++k) den *= 10;
    Rational frac(std::stoll(frac_part), den);
    Rational r = Rational(whole < 0 ? -whole : whole) + frac;
    return negative ? -r : r;
  } catch (const std::logic_error&) {
    fail();
  }
  return {};
}

/// Exact rational for a double that is a short decimal (e.g. 0.5, 1.25);
/// falls back to a 10^-12 grid approximation otherwise.
inline Rational rational_from_double(double v) {
  if (!std::isfinite(v)) throw FormatError("non-finite cost");
  if (v == std::floor(v) && std::abs(v) < 9e15) return Rational(static_cast<std::int64_t>(v));
  for (std::int64_t den = 10; den <= 1'000'000'000'000; den *= 10) {
    double scaled = v * static_cast<double>(den);
    double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) <= 1e-9 * std::max(1.0, std::abs(scaled)))
      return Rational(static_cast<std::int64_t>(rounded), den);
  }
  return Rational(static_cast<std::int64_t>(std::llround(v * 1e12)), 1'000'000'000'000);
}

// ---------------------------------------------------------------------------
// Extended costs: a value of T or +infinity, with saturating addition.
// ---------------------------------------------------------------------------

template <class T>
class ExtendedCost {
 public:
  ExtendedCost() : value_{} {}
  ExtendedCost(T v) : value_(std::move(v)) {}  // NOLINT: implicit by intent

  static ExtendedCost infinity() {
    ExtendedCost c;
    c.infinite_ = true;
    return c;
  }

  bool is_infinite() const noexcept { return infinite_; }
  bool is_finite() const noexcept { return !infinite_; }

  const T& value() const {
    if (infinite_) throw std::logic_error("value() of an infinite cost");
    return value_;
  }

  friend ExtendedCost operator+(const ExtendedCost& a, const ExtendedCost& b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return ExtendedCost(a.value_ + b.value_);
  }
  ExtendedCost& operator+=(const ExtendedCost& b) { return *this = *this + b; }

  friend bool operator==(const ExtendedCost& a, const ExtendedCost& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }
  friend bool operator<(const ExtendedCost& a, const ExtendedCost& b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }
  friend bool operator>(const ExtendedCost& a, const ExtendedCost& b) { return b < a; }
  friend bool operator<=(const ExtendedCost& a, const ExtendedCost& b) { return !(b < a); }
  friend bool operator>=(const ExtendedCost& a, const ExtendedCost& b) { return !(a < b); }

 private:
  T value_;
  bool infinite_ = false;
};

template <class T>
ExtendedCost<T> max(const ExtendedCost<T>& a, const ExtendedCost<T>& b) {
  return a < b ? b : a;
}

template <class T>
ExtendedCost<T> min(const ExtendedCost<T>& a, const ExtendedCost<T>& b) {
  return b < a ? b : a;
}

inline std::string format_value(const ExtendedCost<Rational>& c) {
  return c.is_infinite() ? std::string("inf") : to_string(c.value());
}

/// Nine significant digits, the precision used for every expected-cost output.
inline std::string format_value(const ExtendedCost<double>& c) {
  if (c.is_infinite()) return "inf";
  std::ostringstream os;
  os.precision(9);
  os << c.value();
  return os.str();
}

template <class T>
std::ostream& operator<<(std::ostream& os, const ExtendedCost<T>& c) {
  return os << format_value(c);
}

}  // namespace detpomdp

template <>
struct std::hash<detpomdp::StateSet> {
  std::size_t operator()(const detpomdp::StateSet& s) const noexcept { return s.hash(); }
};
