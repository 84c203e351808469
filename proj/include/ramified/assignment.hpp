#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ramified/errors.hpp"
#include "ramified/measures.hpp"

namespace ramified {

/// A function from households {0..l-1} to factories {0..k-1} (0-based; files
/// use 1-based indices).
struct AssignmentMap {
  std::vector<std::size_t> factory_of;

  std::size_t size() const noexcept { return factory_of.size(); }
  std::size_t operator[](std::size_t j) const { return factory_of[j]; }

  /// Households sent to factory i, in increasing index order.
  std::vector<std::size_t> preimage(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < factory_of.size(); ++j)
      if (factory_of[j] == i) out.push_back(j);
    return out;
  }

  /// Per-factory loads m(b_i) = sum of demands assigned to factory i.
  std::vector<double> loads(const Instance& inst) const {
    std::vector<double> out(inst.k(), 0.0);
    for (std::size_t j = 0; j < factory_of.size(); ++j) out[factory_of[j]] += inst.n(j);
    return out;
  }

  void check_against(const Instance& inst) const {
    if (factory_of.size() != inst.ell()) throw InvalidInstance("assignment map length differs from household count");
    for (auto i : factory_of)
      if (i >= inst.k()) throw InvalidInstance("assignment map references unknown factory");
  }

  friend bool operator==(const AssignmentMap&, const AssignmentMap&) = default;
  friend auto operator<=>(const AssignmentMap&, const AssignmentMap&) = default;
};

inline std::string to_string(const AssignmentMap& s) {
  std::string out = "(";
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (j) out += ",";
    out += std::to_string(s[j] + 1);
  }
  return out + ")";
}

}  // namespace ramified
