#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

#include "ramified/assignment.hpp"
#include "ramified/errors.hpp"
#include "ramified/measures.hpp"
#include "ramified/point.hpp"

namespace ramified {

inline constexpr double kBalanceTolerance = 1e-9;
inline constexpr double kWeightTolerance = 1e-9;

struct Edge {
  std::size_t tail = 0;  // e^-
  std::size_t head = 0;  // e^+
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

namespace detail {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
  std::vector<std::size_t> parent;
};

}  // namespace detail

/// Weighted directed graph satisfying a balance equation between a source
/// and a sink measure. Construction enforces: valid endpoints, no self
/// loops, positive weights, positive edge lengths and an acyclic underlying
/// undirected graph. Parallel edges are merged by weight summation.
class TransportPath {
 public:
  TransportPath() = default;
  TransportPath(std::vector<Point> vertices, std::vector<Edge> edges) : vertices_(std::move(vertices)) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> seen;
    for (const auto& e : edges) {
      if (e.tail >= vertices_.size() || e.head >= vertices_.size())
        throw MalformedPath("edge endpoint out of range");
      if (e.tail == e.head) throw MalformedPath("self-loop edge");
      if (!(e.weight > 0.0) || !std::isfinite(e.weight)) throw MalformedPath("edge weights must be positive");
      if (!(distance(vertices_[e.tail], vertices_[e.head]) > 0.0))
        throw MalformedPath("zero-length edge; collapse its endpoints instead");
      auto [it, fresh] = seen.try_emplace({e.tail, e.head}, edges_.size());
      if (fresh)
        edges_.push_back(e);
      else
        edges_[it->second].weight += e.weight;
    }
    detail::DisjointSets sets(vertices_.size());
    for (const auto& e : edges_)
      if (!sets.unite(e.tail, e.head)) throw MalformedPath("transport path contains a cycle");
  }

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t vertex_count() const noexcept { return vertices_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  double length(std::size_t e) const { return distance(vertices_[edges_[e].tail], vertices_[edges_[e].head]); }

  /// Outgoing minus incoming weight at vertex v.
  double net_outflow(std::size_t v) const {
    double s = 0.0;
    for (const auto& e : edges_) {
      if (e.tail == v) s += e.weight;
      if (e.head == v) s -= e.weight;
    }
    return s;
  }

  std::vector<std::size_t> incoming(std::size_t v) const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (edges_[e].head == v) out.push_back(e);
    return out;
  }

  /// Component label per vertex (smallest vertex index of the component).
  std::vector<std::size_t> components() const {
    detail::DisjointSets sets(vertices_.size());
    for (const auto& e : edges_) sets.unite(e.tail, e.head);
    std::vector<std::size_t> label(vertices_.size());
    for (std::size_t v = 0; v < vertices_.size(); ++v) label[v] = sets.find(v);
    return label;
  }

  std::vector<std::size_t> vertices_at(const Point& p) const {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < vertices_.size(); ++v)
      if (same_location(vertices_[v], p)) out.push_back(v);
    return out;
  }

  /// Disjoint union; vertex indices of `other` are shifted past ours.
  TransportPath disjoint_union(const TransportPath& other) const {
    auto verts = vertices_;
    verts.insert(verts.end(), other.vertices_.begin(), other.vertices_.end());
    auto edges = edges_;
    for (auto e : other.edges_) {
      e.tail += vertices_.size();
      e.head += vertices_.size();
      edges.push_back(e);
    }
    return TransportPath(std::move(verts), std::move(edges));
  }

  friend bool operator==(const TransportPath&, const TransportPath&) = default;

 private:
  std::vector<Point> vertices_;
  std::vector<Edge> edges_;
};

/// M_alpha cost: sum over edges of w^alpha * length.
inline double m_alpha_cost(const TransportPath& path, double alpha) {
  double c = 0.0;
  for (std::size_t e = 0; e < path.edge_count(); ++e)
    c += std::pow(path.edges()[e].weight, alpha) * path.length(e);
  return c;
}

/// Balance equation check: net outflow at each location equals a - b there.
inline bool check_balance(const TransportPath& path, const AtomicMeasure& a, const AtomicMeasure& b) {
  if (std::abs(mass(a) - mass(b)) > kBalanceTolerance) throw InvalidPair("measures have different masses");
  const auto& verts = path.vertices();
  std::vector<bool> done(verts.size(), false);
  std::vector<Point> checked;
  for (std::size_t v = 0; v < verts.size(); ++v) {
    if (done[v]) continue;
    double net = 0.0;
    for (std::size_t u : path.vertices_at(verts[v])) {
      net += path.net_outflow(u);
      done[u] = true;
    }
    const double expected = a.mass_at(verts[v]) - b.mass_at(verts[v]);
    if (std::abs(net - expected) > kBalanceTolerance) return false;
    checked.push_back(verts[v]);
  }
  // Atoms with no vertex must cancel between a and b.
  auto unmatched_ok = [&](const AtomicMeasure& m) {
    for (const auto& atom : m.atoms()) {
      bool on_path = false;
      for (const auto& p : checked)
        if (same_location(p, atom.location)) on_path = true;
      if (!on_path && std::abs(a.mass_at(atom.location) - b.mass_at(atom.location)) > kBalanceTolerance) return false;
    }
    return true;
  };
  return unmatched_ok(a) && unmatched_ok(b);
}

/// k x l matrix of shipped quantities q_ij.
class TransportPlan {
 public:
  TransportPlan() = default;
  TransportPlan(std::size_t k, std::size_t ell) : k_(k), ell_(ell), q_(k * ell, 0.0) {}
  TransportPlan(std::size_t k, std::size_t ell, std::vector<double> entries)
      : k_(k), ell_(ell), q_(std::move(entries)) {
    if (q_.size() != k * ell) throw InvalidPair("plan entry count does not match its shape");
    for (double v : q_)
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidPair("plan entries must be non-negative");
  }

  std::size_t rows() const noexcept { return k_; }
  std::size_t cols() const noexcept { return ell_; }
  double operator()(std::size_t i, std::size_t j) const { return q_[i * ell_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return q_[i * ell_ + j]; }
  const std::vector<double>& entries() const noexcept { return q_; }

  /// m_i(q): production of factory i.
  double row_sum(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < ell_; ++j) s += (*this)(i, j);
    return s;
  }
  double col_sum(std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i < k_; ++i) s += (*this)(i, j);
    return s;
  }

  friend bool operator==(const TransportPlan&, const TransportPlan&) = default;

 private:
  std::size_t k_ = 0;
  std::size_t ell_ = 0;
  std::vector<double> q_;
};

/// q_S: every household receives its full demand from its assigned factory.
inline TransportPlan plan_from_map(const AssignmentMap& s, const Instance& inst) {
  s.check_against(inst);
  TransportPlan q(inst.k(), inst.ell());
  for (std::size_t j = 0; j < inst.ell(); ++j) q(s[j], j) = inst.n(j);
  return q;
}

/// Factory measure a(q) = sum_i m_i(q) delta_{x_i}, omitting idle factories.
inline AtomicMeasure factory_measure(const TransportPlan& q, const Instance& inst) {
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < inst.k(); ++i) {
    const double m = q.row_sum(i);
    if (m > 0.0) atoms.push_back({inst.x(i), m});
  }
  return AtomicMeasure(std::move(atoms));
}

/// g_ij: the directed vertex walk from x_i to y_j, absent when none exists.
class CurveMatrix {
 public:
  CurveMatrix(std::size_t k, std::size_t ell) : k_(k), ell_(ell), g_(k * ell) {}
  std::size_t rows() const noexcept { return k_; }
  std::size_t cols() const noexcept { return ell_; }
  const std::optional<std::vector<std::size_t>>& operator()(std::size_t i, std::size_t j) const {
    return g_[i * ell_ + j];
  }
  std::optional<std::vector<std::size_t>>& operator()(std::size_t i, std::size_t j) { return g_[i * ell_ + j]; }

 private:
  std::size_t k_, ell_;
  std::vector<std::optional<std::vector<std::size_t>>> g_;
};

/// Extracts the curve matrix. Uniqueness of each curve follows from the
/// acyclicity enforced when the path was built.
inline CurveMatrix extract_curves(const TransportPath& path, const Instance& inst) {
  CurveMatrix g(inst.k(), inst.ell());
  std::vector<std::vector<std::size_t>> out_edges(path.vertex_count());
  for (std::size_t e = 0; e < path.edge_count(); ++e) out_edges[path.edges()[e].tail].push_back(e);

  for (std::size_t i = 0; i < inst.k(); ++i) {
    const auto at_factory = path.vertices_at(inst.x(i));
    if (at_factory.empty()) continue;
    std::size_t source = at_factory.front();
    for (auto v : at_factory)
      if (path.net_outflow(v) > path.net_outflow(source)) source = v;

    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> parent(path.vertex_count(), kNone);
    std::vector<bool> reached(path.vertex_count(), false);
    std::queue<std::size_t> frontier;
    frontier.push(source);
    reached[source] = true;
    while (!frontier.empty()) {
      const auto v = frontier.front();
      frontier.pop();
      for (auto e : out_edges[v]) {
        const auto w = path.edges()[e].head;
        if (reached[w]) throw MalformedPath("transport path contains a cycle");
        reached[w] = true;
        parent[w] = v;
        frontier.push(w);
      }
    }
    for (std::size_t j = 0; j < inst.ell(); ++j) {
      for (auto target : path.vertices_at(inst.y(j))) {
        if (!reached[target]) continue;
        std::vector<std::size_t> walk;
        for (auto v = target; v != kNone; v = parent[v]) walk.push_back(v);
        g(i, j) = std::vector<std::size_t>(walk.rbegin(), walk.rend());
        break;
      }
    }
  }
  return g;
}

/// True iff q vanishes on absent curves and the superposition sum q_ij g_ij
/// reproduces every edge weight of the path.
inline bool is_compatible(const TransportPath& path, const TransportPlan& plan, const Instance& inst) {
  if (plan.rows() != inst.k() || plan.cols() != inst.ell()) throw InvalidPair("plan shape does not match instance");
  for (std::size_t j = 0; j < inst.ell(); ++j)
    if (std::abs(plan.col_sum(j) - inst.n(j)) > kWeightTolerance)
      throw InvalidPair("plan column sums differ from household demands");
  if (!check_balance(path, factory_measure(plan, inst), inst.household_measure()))
    throw InvalidPair("plan margins do not match the path's source and sink measures");

  const auto g = extract_curves(path, inst);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_index;
  for (std::size_t e = 0; e < path.edge_count(); ++e)
    edge_index[{path.edges()[e].tail, path.edges()[e].head}] = e;

  std::vector<double> superposed(path.edge_count(), 0.0);
  for (std::size_t i = 0; i < inst.k(); ++i)
    for (std::size_t j = 0; j < inst.ell(); ++j) {
      const double q = plan(i, j);
      if (!g(i, j)) {
        if (q > kWeightTolerance) return false;
        continue;
      }
      const auto& walk = *g(i, j);
      for (std::size_t t = 0; t + 1 < walk.size(); ++t) superposed[edge_index.at({walk[t], walk[t + 1]})] += q;
    }
  for (std::size_t e = 0; e < path.edge_count(); ++e)
    if (std::abs(superposed[e] - path.edges()[e].weight) > kWeightTolerance) return false;
  return true;
}

}  // namespace ramified
