#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "ramified.hpp"

namespace ramified::testing {

/// Random battery instance number t: alpha cycles through {0, .25, .5, .85},
/// k in {2, 3}, l in {4..7}, sites uniform in [0, 4]^2.
inline Instance battery_instance(int t, std::mt19937_64& g) {
  static constexpr double kAlphas[] = {0.0, 0.25, 0.5, 0.85};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance in;
  in.alpha = kAlphas[t % 4];
  const std::size_t k = 2 + t % 2, ell = 4 + (t / 2) % 4;
  for (std::size_t i = 0; i < k; ++i) in.factories.push_back(Point{u(g) * 4, u(g) * 4});
  for (std::size_t j = 0; j < ell; ++j) {
    const double d = 0.2 + u(g);
    in.households.push_back({Point{u(g) * 4, u(g) * 4}, d});
  }
  return normalize(in);
}

inline std::vector<Instance> battery(int count, std::uint64_t seed = 7) {
  std::mt19937_64 g(seed);
  std::vector<Instance> out;
  for (int t = 0; t < count; ++t) out.push_back(battery_instance(t, g));
  return out;
}

/// Source at the origin, targets (-1,2) and (1,2) with mass 1/2 each.
inline AtomicMeasure y_targets() { return AtomicMeasure({{Point{-1, 2}, 0.5}, {Point{1, 2}, 0.5}}); }

/// Hand-built Y path: origin -> (0,1) -> both targets.
inline TransportPath y_path() {
  return TransportPath({Point{0, 0}, Point{0, 1}, Point{-1, 2}, Point{1, 2}}, {{0, 1, 1.0}, {1, 2, 0.5}, {1, 3, 0.5}});
}

/// Random single-source tree in the plane: each new vertex hangs off a
/// random earlier vertex; leaves and some inner vertices carry demand.
inline TransportPath random_tree(std::mt19937_64& g, std::size_t vertices) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts{Point{0, 0}};
  std::vector<std::size_t> parent(vertices, 0);
  std::vector<double> demand(vertices, 0.0);
  for (std::size_t v = 1; v < vertices; ++v) {
    parent[v] = std::uniform_int_distribution<std::size_t>(0, v - 1)(g);
    pts.push_back(pts[parent[v]] + Point{u(g) * 2 - 1, u(g) * 2 - 1});
    demand[v] = 0.1 + u(g);
  }
  // Subtree sums give edge weights (edge parent[v] -> v).
  std::vector<double> below = demand;
  for (std::size_t v = vertices; v-- > 1;) below[parent[v]] += below[v];
  std::vector<Edge> edges;
  for (std::size_t v = 1; v < vertices; ++v) edges.push_back({parent[v], v, below[v]});
  return TransportPath(std::move(pts), std::move(edges));
}

inline bool contains(const std::vector<AssignmentMap>& maps, const AssignmentMap& s) {
  for (const auto& m : maps)
    if (m == s) return true;
  return false;
}

}  // namespace ramified::testing
