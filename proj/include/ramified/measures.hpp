#pragma once

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ramified/errors.hpp"
#include "ramified/point.hpp"

namespace ramified {

inline constexpr double kNormalizationTolerance = 1e-12;

struct Atom {
  Point location;
  double mass = 0.0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite sum of weighted Dirac masses. Masses are strictly positive and
/// locations pairwise distinct.
class AtomicMeasure {
 public:
  AtomicMeasure() = default;
  explicit AtomicMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) { validate(); }

  static AtomicMeasure dirac(Point at, double mass) { return AtomicMeasure({Atom{std::move(at), mass}}); }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }
  const Atom& operator[](std::size_t i) const { return atoms_[i]; }

  /// Mass placed at `p` (0 when `p` is not an atom).
  double mass_at(const Point& p) const {
    for (const auto& a : atoms_)
      if (same_location(a.location, p)) return a.mass;
    return 0.0;
  }

  AtomicMeasure scaled(double lambda) const {
    auto atoms = atoms_;
    for (auto& a : atoms) a.mass *= lambda;
    return AtomicMeasure(std::move(atoms));
  }

  friend bool operator==(const AtomicMeasure&, const AtomicMeasure&) = default;

 private:
  void validate() const {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const auto& a = atoms_[i];
      if (!(a.mass > 0.0) || !std::isfinite(a.mass))
        throw InvalidInstance("atomic measure: masses must be positive and finite");
      if (!a.location.finite()) throw InvalidInstance("atomic measure: non-finite location");
      if (a.location.dim() != atoms_.front().location.dim())
        throw InvalidInstance("atomic measure: mixed dimensions");
      for (std::size_t j = 0; j < i; ++j)
        if (same_location(atoms_[j].location, a.location))
          throw InvalidInstance("atomic measure: duplicate atom location");
    }
  }

  std::vector<Atom> atoms_;
};

inline double mass(const AtomicMeasure& m) {
  double s = 0.0;
  for (const auto& a : m.atoms()) s += a.mass;
  return s;
}

/// Union of two measures; shared locations have their masses summed.
inline AtomicMeasure concatenate(const AtomicMeasure& a, const AtomicMeasure& b) {
  std::vector<Atom> atoms = a.atoms();
  for (const auto& x : b.atoms()) {
    bool merged = false;
    for (auto& y : atoms)
      if (same_location(y.location, x.location)) {
        y.mass += x.mass;
        merged = true;
        break;
      }
    if (!merged) atoms.push_back(x);
  }
  return AtomicMeasure(std::move(atoms));
}

struct Household {
  Point position;
  double demand = 0.0;

  friend bool operator==(const Household&, const Household&) = default;
};

/// A ramified allocation problem: factory sites, household demands and the
/// concavity exponent alpha in [0, 1).
struct Instance {
  double alpha = 0.5;
  std::vector<Point> factories;
  std::vector<Household> households;

  std::size_t k() const noexcept { return factories.size(); }
  std::size_t ell() const noexcept { return households.size(); }
  std::size_t dim() const noexcept { return factories.empty() ? 0 : factories.front().dim(); }
  const Point& x(std::size_t i) const { return factories[i]; }
  const Point& y(std::size_t j) const { return households[j].position; }
  double n(std::size_t j) const { return households[j].demand; }

  double total_demand() const {
    double s = 0.0;
    for (const auto& h : households) s += h.demand;
    return s;
  }

  /// Largest distance between any two sites, at least 1.
  double length_scale() const {
    std::vector<Point> pts = factories;
    for (const auto& h : households) pts.push_back(h.position);
    return std::max(1.0, diameter(pts));
  }

  AtomicMeasure household_measure() const {
    std::vector<Atom> atoms;
    atoms.reserve(households.size());
    for (const auto& h : households) atoms.push_back({h.position, h.demand});
    return AtomicMeasure(std::move(atoms));
  }

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Structural checks that do not depend on demand normalization.
inline void validate_structure(const Instance& inst) {
  if (!(inst.alpha >= 0.0 && inst.alpha < 1.0))
    throw InvalidInstance("alpha must lie in [0, 1)");
  if (inst.factories.empty()) throw InvalidInstance("at least one factory is required");
  if (inst.households.empty()) throw InvalidInstance("at least one household is required");
  const std::size_t m = inst.dim();
  if (m == 0) throw InvalidInstance("dimension must be at least 1");
  for (std::size_t i = 0; i < inst.k(); ++i) {
    if (inst.x(i).dim() != m) throw InvalidInstance("factory dimension mismatch");
    if (!inst.x(i).finite()) throw InvalidInstance("factory coordinates must be finite");
    for (std::size_t s = 0; s < i; ++s)
      if (same_location(inst.x(s), inst.x(i))) throw InvalidInstance("factory locations must be distinct");
  }
  for (std::size_t j = 0; j < inst.ell(); ++j) {
    if (inst.y(j).dim() != m) throw InvalidInstance("household dimension mismatch");
    if (!inst.y(j).finite()) throw InvalidInstance("household coordinates must be finite");
    if (!(inst.n(j) > 0.0) || !std::isfinite(inst.n(j)))
      throw InvalidInstance("household demands must be positive and finite");
    for (std::size_t h = 0; h < j; ++h)
      if (same_location(inst.y(h), inst.y(j))) throw InvalidInstance("household locations must be distinct");
  }
}

/// Full validation: structure plus market clearing (demands sum to 1).
inline void validate(const Instance& inst) {
  validate_structure(inst);
  const double total = inst.total_demand();
  if (std::abs(total - 1.0) > kNormalizationTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "household demands sum to " << total << ", expected 1";
    throw InvalidInstance(os.str());
  }
}

/// Rescales demands to sum to 1. Instances already normalized to within
/// 1e-12 are returned unchanged, which makes the operation idempotent.
inline Instance normalize(Instance inst) {
  const double total = inst.total_demand();
  if (!(total > 0.0) || !std::isfinite(total)) throw InvalidInstance("total demand must be positive");
  for (const auto& h : inst.households)
    if (!(h.demand > 0.0)) throw InvalidInstance("household demands must be positive");
  if (std::abs(total - 1.0) <= kNormalizationTolerance) return inst;
  for (auto& h : inst.households) h.demand /= total;
  return inst;
}

/// Merges households sharing a location by summing their demands. Returns the
/// merged instance and one warning per merge.
inline std::pair<Instance, std::vector<std::string>> merge_duplicate_households(Instance inst) {
  std::vector<Household> merged;
  std::vector<std::string> warnings;
  for (std::size_t j = 0; j < inst.households.size(); ++j) {
    const auto& h = inst.households[j];
    bool found = false;
    for (std::size_t t = 0; t < merged.size(); ++t)
      if (same_location(merged[t].position, h.position)) {
        merged[t].demand += h.demand;
        warnings.push_back("household " + std::to_string(j + 1) + " shares its location with merged household " +
                           std::to_string(t + 1) + "; demands summed");
        found = true;
        break;
      }
    if (!found) merged.push_back(h);
  }
  inst.households = std::move(merged);
  return {std::move(inst), std::move(warnings)};
}

}  // namespace ramified
