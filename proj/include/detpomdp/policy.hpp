#pragma once

#include "detpomdp/belief.hpp"

#include <optional>
#include <sstream>
#include <unordered_map>
#include <utility>
#include <vector>

namespace detpomdp {

/// Finite map from canonical beliefs to actions. Iteration follows insertion
/// order, which the solvers make breadth-first from b0, so output is stable.
template <BeliefType B>
class Policy {
 public:
  void set(const B& b, ActionId a) {
    auto [it, inserted] = index_.try_emplace(b, entries_.size());
    if (inserted)
      entries_.emplace_back(b, a);
    else
      entries_[it->second].second = a;
  }

  std::optional<ActionId> find(const B& b) const {
    auto it = index_.find(b);
    if (it == index_.end()) return std::nullopt;
    return entries_[it->second].second;
  }

  bool contains(const B& b) const { return index_.count(b) != 0; }

  ActionId at(const B& b) const {
    if (auto a = find(b)) return *a;
    std::ostringstream os;
    os << "policy has no action for reachable belief " << b;
    throw ClosureError(os.str());
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<std::pair<B, ActionId>>& entries() const noexcept { return entries_; }

  /// Same mapping regardless of insertion order.
  friend bool operator==(const Policy& x, const Policy& y) {
    if (x.size() != y.size()) return false;
    for (const auto& [b, a] : x.entries_)
      if (y.find(b) != a) return false;
    return true;
  }

 private:
  std::unordered_map<B, std::size_t> index_;
  std::vector<std::pair<B, ActionId>> entries_;
};

}  // namespace detpomdp
