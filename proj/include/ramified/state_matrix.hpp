#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ramified/assignment.hpp"
#include "ramified/criteria.hpp"
#include "ramified/errors.hpp"
#include "ramified/measures.hpp"

namespace ramified {

/// Binary k x l exclusion record: u_ij = 0 means no optimal map sends
/// household j to factory i. Every column keeps at least one 1.
class StateMatrix {
 public:
  StateMatrix(std::size_t k, std::size_t ell, std::vector<std::uint8_t> entries)
      : k_(k), ell_(ell), u_(std::move(entries)) {
    if (u_.size() != k * ell) throw DomainError("state matrix entry count does not match its shape");
    for (auto& v : u_)
      if (v > 1) throw DomainError("state matrix entries must be 0 or 1");
    for (std::size_t j = 0; j < ell_; ++j)
      if (candidates(j).empty())
        throw Infeasible("household " + std::to_string(j + 1) + " has no remaining candidate factory");
  }

  static StateMatrix ones(std::size_t k, std::size_t ell) {
    return StateMatrix(k, ell, std::vector<std::uint8_t>(k * ell, 1));
  }

  /// Parses rows of 0/1 digits.
  static StateMatrix from_rows(const std::vector<std::string>& rows) {
    if (rows.empty()) throw DomainError("state matrix needs at least one row");
    std::vector<std::uint8_t> u;
    for (const auto& r : rows) {
      if (r.size() != rows.front().size()) throw DomainError("state matrix rows differ in length");
      for (char c : r) {
        if (c != '0' && c != '1') throw DomainError("state matrix rows must contain only 0 and 1");
        u.push_back(static_cast<std::uint8_t>(c - '0'));
      }
    }
    return StateMatrix(rows.size(), rows.front().size(), std::move(u));
  }

  std::size_t rows() const noexcept { return k_; }
  std::size_t cols() const noexcept { return ell_; }
  bool operator()(std::size_t i, std::size_t j) const { return u_[i * ell_ + j] != 0; }
  const std::vector<std::uint8_t>& entries() const noexcept { return u_; }

  std::vector<std::size_t> candidates(std::size_t j) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k_; ++i)
      if ((*this)(i, j)) out.push_back(i);
    return out;
  }

  std::size_t count_ones() const {
    std::size_t c = 0;
    for (auto v : u_) c += v;
    return c;
  }

  std::vector<std::string> to_rows() const {
    std::vector<std::string> out(k_);
    for (std::size_t i = 0; i < k_; ++i)
      for (std::size_t j = 0; j < ell_; ++j) out[i] += (*this)(i, j) ? '1' : '0';
    return out;
  }

  /// Entrywise U <= V.
  bool below(const StateMatrix& v) const {
    for (std::size_t t = 0; t < u_.size(); ++t)
      if (u_[t] > v.u_[t]) return false;
    return true;
  }

  /// Does the map respect the matrix (u_{S(j), j} = 1 for all j)?
  bool admits(const AssignmentMap& s) const {
    for (std::size_t j = 0; j < ell_; ++j)
      if (!(*this)(s[j], j)) return false;
    return true;
  }

  friend bool operator==(const StateMatrix&, const StateMatrix&) = default;

 private:
  std::size_t k_, ell_;
  std::vector<std::uint8_t> u_;
};

inline FactoryLoads FactoryLoads::from_state(const StateMatrix& u, const Instance& inst) {
  std::vector<double> w(u.rows(), 0.0);
  for (std::size_t i = 0; i < u.rows(); ++i)
    for (std::size_t h = 0; h < u.cols(); ++h)
      if (u(i, h)) w[i] += inst.n(h);
  return FactoryLoads(std::move(w));
}

inline StateMatrix initial_state(const Instance& inst) { return StateMatrix::ones(inst.k(), inst.ell()); }

/// w_ij(U) = rho(w_i(U), n_j); only meaningful where u_ij = 1 (then w_i >= n_j).
inline double state_weight(const FactoryLoads& w, std::size_t i, std::size_t j, const Instance& inst) {
  return rho(inst.alpha, std::max(w[i], inst.n(j)), inst.n(j));
}

namespace detail {

inline StateMatrix with_zeros(const StateMatrix& u, const std::vector<std::uint8_t>& zero) {
  auto e = u.entries();
  for (std::size_t t = 0; t < e.size(); ++t)
    if (zero[t]) e[t] = 0;
  return StateMatrix(u.rows(), u.cols(), std::move(e));
}

}  // namespace detail

/// Marginal-region update: zero u_ij when y_j lies in the region where some
/// other factory is closer than w_ij(U) times the distance to x_i.
inline StateMatrix update_marginal(const StateMatrix& u, const Instance& inst) {
  const auto w = FactoryLoads::from_state(u, inst);
  std::vector<std::uint8_t> zero(u.entries().size(), 0);
  for (std::size_t i = 0; i < inst.k(); ++i)
    for (std::size_t j = 0; j < inst.ell(); ++j) {
      if (!u(i, j)) continue;
      const double near_other = detail::nearest_other_factory(inst.y(j), i, inst);
      if (clearly_less(near_other, state_weight(w, i, j, inst) * distance(inst.y(j), inst.x(i))))
        zero[i * inst.ell() + j] = 1;
    }
  return detail::with_zeros(u, zero);
}

/// Lambda(U) for the pair (h, j): the worst case over factories that may
/// still serve h. Infinite when a weight vanishes (alpha = 0).
inline double neighborhood_lambda(const StateMatrix& u, const FactoryLoads& w, std::size_t h, std::size_t j,
                                  const Instance& inst) {
  const double num = rho(inst.alpha, inst.n(h) + inst.n(j), inst.n(j));
  double lambda = 0.0;
  for (std::size_t i = 0; i < inst.k(); ++i) {
    if (!u(i, h)) continue;
    const double wij = state_weight(w, i, j, inst);
    if (!(wij > 0.0)) return std::numeric_limits<double>::infinity();
    lambda = std::max(lambda, num / wij * distance(inst.y(h), inst.x(i)));
  }
  return lambda;
}

/// Neighbourhood update: a household h already excluded from s drags
/// nearby households with no larger demand away from s as well.
inline StateMatrix update_neighborhood(const StateMatrix& u, const Instance& inst) {
  const auto w = FactoryLoads::from_state(u, inst);
  std::vector<std::uint8_t> zero(u.entries().size(), 0);
  for (std::size_t s = 0; s < inst.k(); ++s)
    for (std::size_t h = 0; h < inst.ell(); ++h) {
      if (u(s, h)) continue;
      for (std::size_t j = 0; j < inst.ell(); ++j) {
        if (j == h || !u(s, j) || inst.n(j) > inst.n(h)) continue;
        const double lambda = neighborhood_lambda(u, w, h, j, inst);
        const double lhs = distance(inst.y(j), inst.y(h)) + lambda;
        if (clearly_less(lhs, state_weight(w, s, j, inst) * distance(inst.y(j), inst.x(s))))
          zero[s * inst.ell() + j] = 1;
      }
    }
  return detail::with_zeros(u, zero);
}

/// Which projection directions the projectional update tries.
struct DirectionSet {
  bool coordinate_axes = true;
  bool fitted_line = true;  // per-factory least max-deviation line (m = 2 only)
  std::vector<Point> extra;
};

/// Line through the plane points minimizing the largest distance to it:
/// 1-degree scan, then golden-section refinement to 1e-4 rad.
inline Projection minimax_line(const std::vector<Point>& pts) {
  auto half_width = [&](double theta, Point* base) {
    const double nx = -std::sin(theta), ny = std::cos(theta);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& z : pts) {
      const double t = nx * z[0] + ny * z[1];
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    if (base) *base = Point{nx * (lo + hi) / 2, ny * (lo + hi) / 2};
    return (hi - lo) / 2;
  };
  const double deg = std::numbers::pi / 180.0;
  double best = 0.0, best_w = half_width(0.0, nullptr);
  for (int a = 1; a < 180; ++a) {
    const double wv = half_width(a * deg, nullptr);
    if (wv < best_w) {
      best_w = wv;
      best = a * deg;
    }
  }
  double lo = best - deg, hi = best + deg;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = half_width(c, nullptr), fd = half_width(d, nullptr);
  while (hi - lo > 1e-4) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = half_width(c, nullptr);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = half_width(d, nullptr);
    }
  }
  double theta = (lo + hi) / 2;
  if (half_width(theta, nullptr) > best_w) theta = best;
  Point base;
  half_width(theta, &base);
  return Projection(base, Point{std::cos(theta), std::sin(theta)});
}

/// Projections tried for factory i given its candidate set.
inline std::vector<Projection> projections_for(const StateMatrix& u, std::size_t i, const Instance& inst,
                                               const DirectionSet& dirs) {
  std::vector<Projection> out;
  const Point origin = Point::zero(inst.dim());
  if (dirs.coordinate_axes)
    for (std::size_t a = 0; a < inst.dim(); ++a) {
      Point v = Point::zero(inst.dim());
      v[a] = 1.0;
      out.emplace_back(origin, v);
    }
  for (const auto& v : dirs.extra) out.push_back(Projection::along(origin, v));
  if (dirs.fitted_line && inst.dim() == 2) {
    std::vector<Point> pts = inst.factories;
    for (std::size_t j = 0; j < inst.ell(); ++j)
      if (u(i, j)) pts.push_back(inst.y(j));
    out.push_back(minimax_line(pts));
  }
  return out;
}

/// Projectional update: along a line, a household separated from factory i
/// by a gap wider than 2 C R_i plus its distance to the nearest rival
/// factory (and everything beyond it) cannot be served by i.
inline StateMatrix update_projectional(const StateMatrix& u, const Instance& inst, const DirectionSet& dirs = {}) {
  if (inst.k() < 2) return u;
  double c = 0.0;
  try {
    c = projection_constant_c(inst.dim(), inst.alpha);
  } catch (const ConstantUndefined&) {
    return u;
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> zero(u.entries().size(), 0);
  for (std::size_t i = 0; i < inst.k(); ++i) {
    std::vector<std::size_t> psi;
    for (std::size_t j = 0; j < inst.ell(); ++j)
      if (u(i, j)) psi.push_back(j);
    if (psi.empty()) continue;
    std::vector<Point> pts = inst.factories;
    for (auto j : psi) pts.push_back(inst.y(j));
    for (const auto& pi : projections_for(u, i, inst, dirs)) {
      const double ri = max_deviation(pi, pts);
      std::vector<std::pair<double, std::size_t>> order;
      for (auto j : psi) order.push_back({pi(inst.y(j)), j});
      std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      const double xi = pi(inst.x(i));
      const std::size_t n = order.size();
      for (std::size_t h = 0; h < n; ++h) {
        const double t = order[h].first;
        double rival = inf;
        for (std::size_t s = 0; s < inst.k(); ++s)
          if (s != i) rival = std::min(rival, std::abs(pi(inst.x(s)) - t));
        const double threshold = 2.0 * c * ri + rival;
        const double below_gap = std::min(h + 1 < n ? order[h + 1].first - t : inf, xi - t);
        if (clearly_less(threshold, below_gap))
          for (std::size_t q = 0; q <= h; ++q) zero[i * inst.ell() + order[q].second] = 1;
        const double above_gap = std::min(h > 0 ? t - order[h - 1].first : inf, t - xi);
        if (clearly_less(threshold, above_gap))
          for (std::size_t q = h; q < n; ++q) zero[i * inst.ell() + order[q].second] = 1;
      }
    }
  }
  return detail::with_zeros(u, zero);
}

/// Entrywise minimum.
inline StateMatrix combine_min(const StateMatrix& u, const StateMatrix& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) throw DomainError("state matrices differ in shape");
  auto e = u.entries();
  for (std::size_t t = 0; t < e.size(); ++t) e[t] = std::min(e[t], v.entries()[t]);
  return StateMatrix(u.rows(), u.cols(), std::move(e));
}

struct PruneRules {
  bool marginal = true;
  bool neighborhood = true;
  bool projectional = true;
  DirectionSet directions;
};

struct FixpointResult {
  StateMatrix state;
  std::vector<StateMatrix> trace;  // U_0, U_1, ..., U_N = state
  std::size_t iterations = 0;      // number of update rounds, including the final no-change round
};

/// One simultaneous round: every enabled rule sees the same U_n.
inline StateMatrix update_round(const StateMatrix& u, const Instance& inst, const PruneRules& rules) {
  StateMatrix next = u;
  if (rules.marginal) next = combine_min(next, update_marginal(u, inst));
  if (rules.neighborhood) next = combine_min(next, update_neighborhood(u, inst));
  if (rules.projectional) next = combine_min(next, update_projectional(u, inst, rules.directions));
  return next;
}

/// Iterates rounds until nothing changes. Each productive round removes at
/// least one entry, so at most k * l rounds are productive.
inline FixpointResult fixpoint(const StateMatrix& u0, const Instance& inst, const PruneRules& rules = {}) {
  FixpointResult out{u0, {u0}, 0};
  while (true) {
    ++out.iterations;
    auto next = update_round(out.state, inst, rules);
    if (next == out.state) return out;
    out.state = next;
    out.trace.push_back(std::move(next));
  }
}

/// Same fixpoint, applying the rules one after another in the given order
/// (0 = marginal, 1 = neighbourhood, 2 = projectional).
inline StateMatrix fixpoint_sequential(const StateMatrix& u0, const Instance& inst, const std::array<int, 3>& order,
                                       const PruneRules& rules = {}) {
  StateMatrix u = u0;
  while (true) {
    const StateMatrix before = u;
    for (int r : order) {
      if (r == 0 && rules.marginal) u = update_marginal(u, inst);
      if (r == 1 && rules.neighborhood) u = update_neighborhood(u, inst);
      if (r == 2 && rules.projectional) u = update_projectional(u, inst, rules.directions);
    }
    if (u == before) return u;
  }
}

/// Households by descending demand, ties by index.
inline std::vector<std::size_t> demand_order(const Instance& inst) {
  std::vector<std::size_t> order(inst.ell());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return inst.n(a) > inst.n(b); });
  return order;
}

/// Pins households one at a time in demand order. A household is pinned to
/// s_j when every other surviving candidate is excluded by the marginal
/// rule or by the neighbourhood rule against an already pinned household.
/// Returns a map only when every household pins.
inline std::optional<AssignmentMap> greedy_determination(const StateMatrix& u, const Instance& inst) {
  const auto w = FactoryLoads::from_state(u, inst);
  AssignmentMap s{std::vector<std::size_t>(inst.ell(), 0)};
  std::vector<std::size_t> pinned;
  for (auto j : demand_order(inst)) {
    std::vector<std::size_t> remaining;
    for (auto cand : u.candidates(j)) {
      bool excluded = clearly_less(detail::nearest_other_factory(inst.y(j), cand, inst),
                                   state_weight(w, cand, j, inst) * distance(inst.y(j), inst.x(cand)));
      for (std::size_t t = 0; t < pinned.size() && !excluded; ++t) {
        const auto h = pinned[t];
        const auto sh = s[h];
        if (sh == cand || inst.n(j) > inst.n(h)) continue;
        const double wj = state_weight(w, sh, j, inst);
        if (!(wj > 0.0)) continue;
        const double lambda = rho(inst.alpha, inst.n(h) + inst.n(j), inst.n(j)) / wj * distance(inst.y(h), inst.x(sh));
        excluded = clearly_less(distance(inst.y(j), inst.y(h)) + lambda,
                                state_weight(w, cand, j, inst) * distance(inst.y(j), inst.x(cand)));
      }
      if (!excluded) remaining.push_back(cand);
    }
    if (remaining.size() != 1) return std::nullopt;
    s.factory_of[j] = remaining.front();
    pinned.push_back(j);
  }
  return s;
}

}  // namespace ramified
