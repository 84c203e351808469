#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ramified/assignment.hpp"
#include "ramified/errors.hpp"
#include "ramified/measures.hpp"
#include "ramified/point.hpp"

namespace ramified {

inline constexpr double kSoundnessMargin = 1e-9;

/// lhs < rhs with a relative safety margin, so rounding noise never fires a
/// pruning rule.
inline bool clearly_less(double lhs, double rhs) {
  if (std::isinf(rhs)) return rhs > 0.0 && !std::isinf(lhs);
  return lhs + kSoundnessMargin * std::max(1.0, std::abs(rhs)) < rhs;
}

/// rho_alpha(sigma, eps) = (sigma/eps)^alpha - (sigma/eps - 1)^alpha.
inline double rho(double alpha, double sigma, double eps) {
  if (!(eps > 0.0)) throw DomainError("rho: epsilon must be positive");
  if (sigma < eps) throw DomainError("rho: sigma must be at least epsilon");
  if (alpha == 0.0) return sigma > eps ? 0.0 : 1.0;
  const double r = sigma / eps;
  return std::pow(r, alpha) - std::pow(r - 1.0, alpha);
}

struct Ball {
  Point center;
  double radius = 0.0;

  /// Open ball membership.
  bool contains(const Point& z) const { return distance(z, center) < radius; }
};

/// The open ball {z : |z - x_i| < C |z - x_s|} for 0 < C < 1.
inline Ball closeness_ball(const Point& xi, const Point& xs, double c) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("closeness ball needs 0 < C < 1");
  if (same_location(xi, xs)) throw DomainError("closeness ball needs distinct centres");
  const double k = 1.0 - c * c;
  return {xi + (xi - xs) * (c * c / k), c / k * distance(xi, xs)};
}

enum class Region { InF, InOmega, Neither };

namespace detail {

inline double nearest_other_factory(const Point& z, std::size_t s, const Instance& inst) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < inst.k(); ++i)
    if (i != s) d = std::min(d, distance(z, inst.x(i)));
  return d;
}

}  // namespace detail

/// Marginal regions with the loosest possible load (the whole demand):
/// InF means no optimal map sends j to s, InOmega means every one does.
inline Region uniform_region_membership(const Point& z, std::size_t j, std::size_t s, const Instance& inst) {
  const double r = rho(inst.alpha, inst.total_demand(), inst.n(j));
  const double near_other = detail::nearest_other_factory(z, s, inst);
  const double to_s = distance(z, inst.x(s));
  if (clearly_less(near_other, r * to_s)) return Region::InF;
  if (clearly_less(to_s, r * near_other)) return Region::InOmega;
  return Region::Neither;
}

class StateMatrix;

/// Per-factory loads usable in the marginal tests: either upper bounds that
/// hold for every optimal map, or the loads of a concrete map under test.
/// Arbitrary load vectors cannot be constructed.
class FactoryLoads {
 public:
  static FactoryLoads uniform(const Instance& inst) { return FactoryLoads(std::vector<double>(inst.k(), inst.total_demand())); }
  static FactoryLoads from_map(const AssignmentMap& s, const Instance& inst) {
    s.check_against(inst);
    return FactoryLoads(s.loads(inst));
  }
  /// Row sums w_i(U) of a state matrix (defined with the matrix).
  static FactoryLoads from_state(const StateMatrix& u, const Instance& inst);

  double operator[](std::size_t i) const { return loads_[i]; }
  std::size_t size() const noexcept { return loads_.size(); }

 private:
  explicit FactoryLoads(std::vector<double> loads) : loads_(std::move(loads)) {}
  std::vector<double> loads_;
};

/// Membership in the load-dependent regions. A test whose load falls below
/// n_j (where rho is undefined) is skipped, giving Neither.
inline Region map_region_membership(const Point& z, std::size_t j, std::size_t s, const FactoryLoads& loads,
                                    const Instance& inst) {
  const double nj = inst.n(j);
  const double to_s = distance(z, inst.x(s));
  if (loads[s] >= nj) {
    const double r = rho(inst.alpha, loads[s], nj);
    if (clearly_less(detail::nearest_other_factory(z, s, inst), r * to_s)) return Region::InF;
  }
  double bound = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < inst.k(); ++i) {
    if (i == s) continue;
    if (loads[i] < nj) return Region::Neither;
    bound = std::min(bound, rho(inst.alpha, loads[i], nj) * distance(z, inst.x(i)));
  }
  if (clearly_less(to_s, bound)) return Region::InOmega;
  return Region::Neither;
}

/// Neighbourhood rule: with h served by s_star != s and n_j <= n_h, a point z
/// satisfying the inequality cannot be served by s.
inline bool neighborhood_exclusion(const Point& z, std::size_t j, std::size_t s, std::size_t h, std::size_t s_star,
                                   const FactoryLoads& loads, const Instance& inst) {
  if (j == h) throw DomainError("neighbourhood rule needs two distinct households");
  if (s == s_star) throw DomainError("neighbourhood rule needs s* different from s");
  const double nj = inst.n(j), nh = inst.n(h);
  if (nj > nh) throw DomainError("neighbourhood rule needs n_j <= n_h");
  if (loads[s] < nj || loads[s_star] < nj) return false;
  const double lhs = distance(z, inst.y(h)) +
                     rho(inst.alpha, nh + nj, nj) / rho(inst.alpha, loads[s_star], nj) * distance(inst.y(h), inst.x(s_star));
  return clearly_less(lhs, rho(inst.alpha, loads[s], nj) * distance(z, inst.x(s)));
}

/// pi(z) = <z - p, v> with unit direction v.
class Projection {
 public:
  Projection(Point p, Point v) : p_(std::move(p)), v_(std::move(v)) {
    if (p_.dim() != v_.dim()) throw DomainError("projection base and direction differ in dimension");
    if (std::abs(norm(v_) - 1.0) > 1e-12) throw DomainError("projection direction must have unit norm");
  }
  /// Normalizes v first.
  static Projection along(Point p, const Point& v) {
    const double n = norm(v);
    if (!(n > 0.0)) throw DomainError("projection direction must be non-zero");
    return Projection(std::move(p), v * (1.0 / n));
  }

  const Point& base() const noexcept { return p_; }
  const Point& direction() const noexcept { return v_; }
  double operator()(const Point& z) const { return dot(z - p_, v_); }
  /// Distance from z to the projection line.
  double deviation(const Point& z) const { return norm(z - p_ - v_ * (*this)(z)); }

 private:
  Point p_, v_;
};

/// C = sqrt(m-1) / (2^{1-(m-1)(1-alpha)} - 1) + 1; undefined once
/// (m-1)(1-alpha) >= 1.
inline double projection_constant_c(std::size_t m, double alpha) {
  if (m == 0) throw DomainError("dimension must be positive");
  const double e = static_cast<double>(m - 1) * (1.0 - alpha);
  if (e >= 1.0) throw ConstantUndefined("projection constant undefined when (m-1)(1-alpha) >= 1");
  return std::sqrt(static_cast<double>(m - 1)) / (std::pow(2.0, 1.0 - e) - 1.0) + 1.0;
}

inline double max_deviation(const Projection& pi, std::span<const Point> pts) {
  double r = 0.0;
  for (const auto& z : pts) r = std::max(r, pi.deviation(z));
  return r;
}

struct ProjectionConstants {
  double c = 1.0;
  double r = 0.0;
};

inline ProjectionConstants projection_constants(const Instance& inst, const Projection& pi, std::span<const Point> subset) {
  return {projection_constant_c(inst.dim(), inst.alpha), max_deviation(pi, subset)};
}

/// All factory and household sites.
inline std::vector<Point> all_sites(const Instance& inst) {
  std::vector<Point> pts = inst.factories;
  for (const auto& h : inst.households) pts.push_back(h.position);
  return pts;
}

struct AutarkySplit {
  std::vector<std::size_t> low_households, high_households;  // pi <= t1, pi >= t2
  std::vector<std::size_t> low_factories, high_factories;
};

/// Two-sided split along pi: if no site projects into (t1, t2), the gap is
/// at least 2CR + sigma and factories flank it within sigma on both sides,
/// every optimal map keeps each side's households with that side's
/// factories. Returns nothing when the hypotheses cannot be certified.
inline std::optional<AutarkySplit> autarky_split(const Instance& inst, const Projection& pi, double t1, double t2,
                                                 double sigma) {
  if (!(sigma > 0.0) || !(t2 > t1)) return std::nullopt;
  double c = 0.0;
  try {
    c = projection_constant_c(inst.dim(), inst.alpha);
  } catch (const ConstantUndefined&) {
    return std::nullopt;
  }
  const auto sites = all_sites(inst);
  const double r = max_deviation(pi, sites);
  const double margin = kSoundnessMargin * std::max({1.0, std::abs(t1), std::abs(t2)});
  // Usable flank width: never more than the gap actually leaves over 2CR.
  const double s_eff = std::min(sigma, t2 - t1 - 2.0 * c * r - margin);
  if (!(s_eff > margin)) return std::nullopt;

  AutarkySplit out;
  bool low_flank = false, high_flank = false;
  for (std::size_t i = 0; i < inst.k(); ++i) {
    const double t = pi(inst.x(i));
    if (t > t1 && t < t2) return std::nullopt;
    if (t <= t1) {
      out.low_factories.push_back(i);
      if (t > t1 - s_eff + margin) low_flank = true;
    } else {
      out.high_factories.push_back(i);
      if (t < t2 + s_eff - margin) high_flank = true;
    }
  }
  for (std::size_t j = 0; j < inst.ell(); ++j) {
    const double t = pi(inst.y(j));
    if (t > t1 && t < t2) return std::nullopt;
    (t <= t1 ? out.low_households : out.high_households).push_back(j);
  }
  if (!low_flank || !high_flank) return std::nullopt;
  return out;
}

}  // namespace ramified
