#pragma once

// Permutations of 0..n-1, cycle structure, and membership testing in the
// group generated by a set of permutations (Schreier-Sims with base 0..n-1).
//
// Composition convention: `p.then(q)` applies p first, then q, matching the
// order in which actions are executed.

#include "detpomdp/core.hpp"

#include <boost/functional/hash.hpp>
#include <boost/integer/common_factor.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace detpomdp {

using BigInt = boost::multiprecision::cpp_int;

class Permutation {
 public:
  Permutation() = default;

  static Permutation identity(std::size_t n) {
    Permutation p;
    p.image_.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.image_[i] = static_cast<StateId>(i);
    return p;
  }

  /// Throws std::invalid_argument unless `image` is a bijection on 0..n-1.
  static Permutation from_images(std::vector<StateId> image) {
    std::vector<bool> hit(image.size(), false);
    for (auto x : image) {
      if (x >= image.size() || hit[x]) throw std::invalid_argument("not a permutation");
      hit[x] = true;
    }
    Permutation p;
    p.image_ = std::move(image);
    return p;
  }

  /// Product of the given disjoint cycles on n points.
  static Permutation from_cycles(std::size_t n, const std::vector<std::vector<StateId>>& cycles) {
    auto p = identity(n);
    std::vector<bool> used(n, false);
    for (const auto& c : cycles)
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (c[k] >= n || used[c[k]]) throw std::invalid_argument("cycles are not disjoint or out of range");
        used[c[k]] = true;
        p.image_[c[k]] = c[(k + 1) % c.size()];
      }
    return p;
  }

  std::size_t degree() const noexcept { return image_.size(); }
  StateId operator()(StateId x) const { return image_[x]; }
  const std::vector<StateId>& images() const noexcept { return image_; }

  /// x -> q(p(x)).
  Permutation then(const Permutation& q) const {
    Permutation r;
    r.image_.resize(image_.size());
    for (std::size_t i = 0; i < image_.size(); ++i) r.image_[i] = q.image_[image_[i]];
    return r;
  }

  Permutation inverse() const {
    Permutation r;
    r.image_.resize(image_.size());
    for (std::size_t i = 0; i < image_.size(); ++i) r.image_[image_[i]] = static_cast<StateId>(i);
    return r;
  }

  Permutation power(std::uint64_t k) const {
    auto result = identity(degree());
    auto base = *this;
    while (k) {
      if (k & 1) result = result.then(base);
      base = base.then(base);
      k >>= 1;
    }
    return result;
  }

  bool is_identity() const {
    for (std::size_t i = 0; i < image_.size(); ++i)
      if (image_[i] != i) return false;
    return true;
  }

  /// Number of points not fixed.
  std::size_t moved_points() const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < image_.size(); ++i) k += image_[i] != i;
    return k;
  }

  /// Smallest point moved, or degree() for the identity.
  std::size_t first_moved() const {
    for (std::size_t i = 0; i < image_.size(); ++i)
      if (image_[i] != i) return i;
    return image_.size();
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation&, const Permutation&) = default;

  std::size_t hash() const { return boost::hash_range(image_.begin(), image_.end()); }

 private:
  std::vector<StateId> image_;
};

/// Disjoint cycles covering every point (fixed points as 1-cycles), each
/// starting at its smallest element, listed by that element.
inline std::vector<std::vector<StateId>> cycle_decomposition(const Permutation& p) {
  std::vector<std::vector<StateId>> cycles;
  std::vector<bool> seen(p.degree(), false);
  for (StateId i = 0; i < p.degree(); ++i) {
    if (seen[i]) continue;
    std::vector<StateId> c;
    for (StateId x = i; !seen[x]; x = p(x)) {
      seen[x] = true;
      c.push_back(x);
    }
    cycles.push_back(std::move(c));
  }
  return cycles;
}

inline BigInt lcm_of(const std::vector<std::size_t>& values) {
  BigInt l = 1;
  for (auto v : values) l = boost::integer::lcm(l, BigInt(v));
  return l;
}

/// Least k >= 1 with p^k = id: the lcm of the cycle lengths.
inline BigInt order(const Permutation& p) {
  std::vector<std::size_t> lengths;
  for (const auto& c : cycle_decomposition(p)) lengths.push_back(c.size());
  return lcm_of(lengths);
}

/// Cycle notation, fixed points omitted: "(0 2 4)(1 3)"; "()" for the identity.
inline std::string to_cycle_string(const Permutation& p) {
  std::ostringstream os;
  for (const auto& c : cycle_decomposition(p)) {
    if (c.size() == 1) continue;
    os << '(';
    for (std::size_t k = 0; k < c.size(); ++k) os << (k ? " " : "") << c[k];
    os << ')';
  }
  auto s = os.str();
  return s.empty() ? "()" : s;
}

inline std::ostream& operator<<(std::ostream& os, const Permutation& p) { return os << to_cycle_string(p); }

// ---------------------------------------------------------------------------
// Stabilizer chain
// ---------------------------------------------------------------------------

/// Base and strong generating set for <generators>, base points 0, 1, ..., n-1.
/// Level i holds the orbit of i under the generators that fix 0..i-1, with a
/// transversal element mapping i to each orbit point.
class StabilizerChain {
 public:
  StabilizerChain(std::size_t n, const std::vector<Permutation>& generators) : n_(n), levels_(n) {
    for (const auto& g : generators) {
      if (g.degree() != n) throw std::invalid_argument("generator degree mismatch");
      if (!g.is_identity()) strong_.push_back(g);
    }
    build();
  }

  std::size_t degree() const noexcept { return n_; }
  const std::vector<Permutation>& strong_generators() const noexcept { return strong_; }

  std::size_t orbit_size(std::size_t level) const { return levels_.at(level).transversal.size(); }

  BigInt group_order() const {
    BigInt o = 1;
    for (const auto& l : levels_) o *= l.transversal.size();
    return o;
  }

  /// Residue of p after sifting from `from` downwards, and the level where
  /// sifting stopped (degree() when p passed every level).
  std::pair<Permutation, std::size_t> sift(Permutation p, std::size_t from = 0) const {
    for (std::size_t k = from; k < n_; ++k) {
      const auto& t = levels_[k].transversal;
      auto it = t.find(p(static_cast<StateId>(k)));
      if (it == t.end()) return {p, k};
      p = p.then(it->second.inverse());
    }
    return {p, n_};
  }

  bool contains(const Permutation& p) const {
    if (p.degree() != n_) throw std::invalid_argument("permutation degree mismatch");
    auto [residue, level] = sift(p);
    return level == n_ && residue.is_identity();
  }

 private:
  struct Level {
    std::map<StateId, Permutation> transversal;  // orbit point -> element mapping base to it
    std::vector<std::size_t> gens;               // indices into strong_ fixing 0..i-1
  };

  void compute_level(std::size_t i) {
    auto& l = levels_[i];
    l.gens.clear();
    for (std::size_t k = 0; k < strong_.size(); ++k)
      if (strong_[k].first_moved() >= i) l.gens.push_back(k);
    l.transversal.clear();
    const auto base = static_cast<StateId>(i);
    l.transversal.emplace(base, Permutation::identity(n_));
    std::deque<StateId> queue{base};
    while (!queue.empty()) {
      const StateId x = queue.front();
      queue.pop_front();
      const Permutation ux = l.transversal.at(x);
      for (auto k : l.gens) {
        const StateId y = strong_[k](x);
        if (!l.transversal.count(y)) {
          l.transversal.emplace(y, ux.then(strong_[k]));
          queue.push_back(y);
        }
      }
    }
  }

  void build() {
    // Levels are verified from the deepest upwards: every Schreier generator
    // of level i must sift through levels i+1.. to the identity. A non-trivial
    // residue h joins the strong generators and verification resumes at the
    // first point h moves (deeper levels are unaffected by h).
    std::size_t i = n_;
    while (i-- > 0) {
      compute_level(i);
      bool restarted = false;
      for (const auto& [x, ux] : levels_[i].transversal) {
        for (auto k : levels_[i].gens) {
          const StateId y = strong_[k](x);
          const Permutation g = ux.then(strong_[k]).then(levels_[i].transversal.at(y).inverse());
          auto [h, stop] = sift(g, i + 1);
          if (stop == n_ && h.is_identity()) continue;
          i = h.first_moved() + 1;  // the loop decrement resumes there
          strong_.push_back(std::move(h));
          restarted = true;
          break;
        }
        if (restarted) break;
      }
    }
  }

  std::size_t n_;
  std::vector<Level> levels_;
  std::vector<Permutation> strong_;
};

/// sigma in <generators>?
inline bool group_membership(const std::vector<Permutation>& generators, const Permutation& sigma) {
  return StabilizerChain(sigma.degree(), generators).contains(sigma);
}

/// Shortest word over the generators (indices, applied left to right) equal
/// to sigma, by breadth-first search over group elements. Debugging aid only:
/// words can be exponentially long, so the search gives up after
/// `max_elements` distinct elements and returns nullopt.
inline std::optional<std::vector<std::size_t>> find_word(const std::vector<Permutation>& generators,
                                                         const Permutation& sigma, std::size_t max_elements = 100000) {
  struct Hash {
    std::size_t operator()(const Permutation& p) const { return p.hash(); }
  };
  std::unordered_map<Permutation, std::pair<std::size_t, Permutation>, Hash> parent;  // elem -> (gen, prev)
  const auto id = Permutation::identity(sigma.degree());
  parent.emplace(id, std::make_pair(std::size_t(-1), id));
  std::deque<Permutation> queue{id};
  while (!queue.empty()) {
    Permutation p = queue.front();
    queue.pop_front();
    if (p == sigma) {
      std::vector<std::size_t> word;
      while (!(p == id)) {
        const auto& [g, prev] = parent.at(p);
        word.push_back(g);
        p = prev;
      }
      std::reverse(word.begin(), word.end());
      return word;
    }
    for (std::size_t k = 0; k < generators.size(); ++k) {
      Permutation q = p.then(generators[k]);
      if (parent.count(q)) continue;
      if (parent.size() >= max_elements) return std::nullopt;
      parent.emplace(q, std::make_pair(k, p));
      queue.push_back(std::move(q));
    }
  }
  return std::nullopt;
}

}  // namespace detpomdp

template <>
struct std::hash<detpomdp::Permutation> {
  std::size_t operator()(const detpomdp::Permutation& p) const { return p.hash(); }
};
