#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "ramified/errors.hpp"
#include "ramified/transport_path.hpp"

namespace ramified {

/// A location on a transport path: either a vertex or an interior point of an
/// edge given by its parameter t in (0, 1) from tail to head.
struct PathPoint {
  enum class Kind { Vertex, EdgeInterior } kind = Kind::Vertex;
  std::size_t index = 0;  // vertex index or edge index
  double t = 0.0;

  static PathPoint vertex(std::size_t v) { return {Kind::Vertex, v, 0.0}; }
  static PathPoint on_edge(std::size_t e, double t) {
    if (!(t > 0.0 && t < 1.0)) throw DomainError("edge parameter must lie strictly inside (0, 1)");
    return {Kind::EdgeInterior, e, t};
  }
};

namespace detail {

inline constexpr double kSourceTolerance = 1e-12;

/// The unique vertex with positive net outflow.
inline std::size_t single_source(const TransportPath& path) {
  std::optional<std::size_t> src;
  for (std::size_t v = 0; v < path.vertex_count(); ++v)
    if (path.net_outflow(v) > kSourceTolerance) {
      if (src) throw NotSingleSource("transport path has more than one source vertex");
      src = v;
    }
  if (!src) throw NotSingleSource("transport path has no source vertex");
  return *src;
}

/// One edge of the source-to-p curve with the length of it that lies on the curve.
struct CurveSegment {
  double weight;
  double length;
};

inline std::vector<CurveSegment> curve_to(const TransportPath& path, const PathPoint& p) {
  const auto src = single_source(path);
  std::vector<CurveSegment> out;
  std::size_t v = 0;
  if (p.kind == PathPoint::Kind::EdgeInterior) {
    if (p.index >= path.edge_count()) throw DomainError("edge index out of range");
    out.push_back({path.edges()[p.index].weight, p.t * path.length(p.index)});
    v = path.edges()[p.index].tail;
  } else {
    if (p.index >= path.vertex_count()) throw DomainError("vertex index out of range");
    v = p.index;
  }
  for (std::size_t steps = 0; v != src; ++steps) {
    const auto in = path.incoming(v);
    if (in.size() != 1 || steps > path.vertex_count())
      throw DomainError("point is not reachable from the source along a unique curve");
    out.push_back({path.edges()[in[0]].weight, path.length(in[0])});
    v = path.edges()[in[0]].tail;
  }
  return out;
}

inline double power_or_zero(double w, double alpha) { return w > 0.0 ? std::pow(w, alpha) : 0.0; }

}  // namespace detail

/// Mass flowing through p: edge weight inside an edge, total output at the
/// source, incoming weight elsewhere.
inline double flow_density(const TransportPath& path, const PathPoint& p) {
  const auto src = detail::single_source(path);
  if (p.kind == PathPoint::Kind::EdgeInterior) return path.edges().at(p.index).weight;
  if (p.index == src) return path.net_outflow(src);
  double in = 0.0;
  for (auto e : path.incoming(p.index)) in += path.edges()[e].weight;
  return in;
}

/// Cost change from routing an extra delta_m from the source to p.
inline double increment_cost(const TransportPath& path, const PathPoint& p, double delta_m, double alpha) {
  if (delta_m < -flow_density(path, p) - 1e-15) throw InfeasiblePerturbation("cannot remove more mass than flows through p");
  if (delta_m == 0.0) return 0.0;
  double total = 0.0;
  for (const auto& seg : detail::curve_to(path, p))
    total += (detail::power_or_zero(std::max(0.0, seg.weight + delta_m), alpha) - std::pow(seg.weight, alpha)) * seg.length;
  return total;
}

/// Derivative of increment_cost at delta_m = 0.
inline double marginal_cost(const TransportPath& path, const PathPoint& p, double alpha) {
  if (!(alpha > 0.0)) throw Unsupported("marginal cost is degenerate at alpha = 0");
  double total = 0.0;
  for (const auto& seg : detail::curve_to(path, p)) total += std::pow(seg.weight, alpha - 1.0) * seg.length;
  return alpha * total;
}

/// G + delta_m * gamma_p. An interior point splits its edge into two; the
/// returned PathPoint names p in the new path. Edges drained to zero vanish.
inline std::pair<TransportPath, PathPoint> add_along_curve(const TransportPath& path, const PathPoint& p, double delta_m) {
  if (delta_m < -flow_density(path, p) - 1e-15) throw InfeasiblePerturbation("cannot remove more mass than flows through p");
  auto vertices = path.vertices();
  auto edges = path.edges();
  std::size_t target = p.index;
  if (p.kind == PathPoint::Kind::EdgeInterior) {
    const auto e = edges[p.index];
    const auto& a = vertices[e.tail];
    const auto& b = vertices[e.head];
    vertices.push_back(a + (b - a) * p.t);
    target = vertices.size() - 1;
    edges[p.index].head = target;
    edges.push_back({target, e.head, e.weight});
  }
  // Walk back to the source in the split path and adjust weights.
  const TransportPath split(vertices, edges);
  const auto src = detail::single_source(split);
  std::vector<double> weight;
  for (const auto& e : split.edges()) weight.push_back(e.weight);
  for (std::size_t v = target; v != src;) {
    const auto in = split.incoming(v);
    if (in.size() != 1) throw DomainError("point is not reachable from the source along a unique curve");
    weight[in[0]] += delta_m;
    v = split.edges()[in[0]].tail;
  }
  std::vector<Edge> kept;
  const double floor = 1e-14 * std::max(1.0, std::abs(delta_m));
  for (std::size_t e = 0; e < weight.size(); ++e) {
    if (weight[e] < -floor) throw InfeasiblePerturbation("perturbation drives an edge weight negative");
    if (weight[e] > floor) kept.push_back({split.edges()[e].tail, split.edges()[e].head, weight[e]});
  }
  return {TransportPath(split.vertices(), std::move(kept)), PathPoint::vertex(target)};
}

}  // namespace ramified
