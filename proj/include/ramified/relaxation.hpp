#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "ramified/errors.hpp"
#include "ramified/point.hpp"
#include "ramified/topology.hpp"
#include "ramified/transport_path.hpp"

namespace ramified {

/// Fixed terminal locations with signed masses: positive = supply,
/// negative = demand. Terminal 0 roots every tree.
struct Geometry {
  std::vector<Point> terminals;
  std::vector<double> masses;

  std::size_t size() const noexcept { return terminals.size(); }
  std::size_t dim() const noexcept { return terminals.empty() ? 0 : terminals.front().dim(); }
  double scale() const { return std::max(1.0, diameter(terminals)); }
};

struct RelaxOptions {
  double tol = 1e-10;  // position tolerance, relative to the geometry scale
  std::size_t max_iterations = 10000;
  std::optional<std::vector<Point>> initial_steiner;
};

struct RelaxResult {
  std::vector<Point> positions;  // terminals first, then Steiner nodes
  double cost = 0.0;             // sum of w^alpha * length at `positions`
  std::size_t iterations = 0;
  std::vector<double> objective_trace;
};

/// Oriented edge flows of a topology: |mass below the edge| when rooted at
/// terminal 0; `upward` when the flow runs from child to parent.
struct EdgeFlow {
  std::size_t child = 0;
  std::size_t parent = 0;
  double weight = 0.0;
  bool upward = false;
};

inline std::vector<EdgeFlow> edge_flows(const Topology& topo, const Geometry& geo) {
  const std::size_t n = topo.node_count();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : topo.edges()) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> parent(n, kNone), order;
  std::vector<bool> seen(n, false);
  order.reserve(n);
  order.push_back(0);
  seen[0] = true;
  for (std::size_t head = 0; head < order.size(); ++head)
    for (auto w : adj[order[head]])
      if (!seen[w]) {
        seen[w] = true;
        parent[w] = order[head];
        order.push_back(w);
      }
  std::vector<double> below(n, 0.0);
  for (std::size_t v = 0; v < n; ++v)
    if (topo.is_terminal(v) && seen[v]) below[v] = geo.masses[v];
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (parent[*it] != kNone) below[parent[*it]] += below[*it];

  std::vector<EdgeFlow> flows;
  flows.reserve(topo.edges().size());
  for (const auto& [a, b] : topo.edges()) {
    const std::size_t child = parent[a] == b ? a : b;
    const std::size_t par = child == a ? b : a;
    flows.push_back({child, par, std::abs(below[child]), below[child] > 0.0});
  }
  return flows;
}

namespace detail {

/// In-place Cholesky solve of (A) x = b for symmetric positive definite A.
/// Returns false if A is not numerically positive definite.
inline bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return true;
}

struct SmoothedObjective {
  const Topology& topo;
  const std::vector<Point>& fixed;  // terminal positions
  std::vector<double> coef;         // w^alpha per edge
  std::size_t dim;
  std::size_t terminals;

  const double* at(const std::vector<double>& x, std::size_t v) const {
    return v < terminals ? fixed[v].coords().data() : x.data() + (v - terminals) * dim;
  }

  double value(const std::vector<double>& x, double delta) const {
    double f = 0.0;
    for (std::size_t e = 0; e < coef.size(); ++e) {
      if (coef[e] == 0.0) continue;
      const double* p = at(x, topo.edges()[e].first);
      const double* q = at(x, topo.edges()[e].second);
      double s = delta * delta;
      for (std::size_t c = 0; c < dim; ++c) s += (p[c] - q[c]) * (p[c] - q[c]);
      f += coef[e] * std::sqrt(s);
    }
    return f;
  }

  double true_cost(const std::vector<double>& x) const { return value(x, 0.0); }

  void derivatives(const std::vector<double>& x, double delta, std::vector<double>& grad, std::vector<double>& hess) const {
    const std::size_t n = x.size();
    grad.assign(n, 0.0);
    hess.assign(n * n, 0.0);
    std::vector<double> d(dim);
    for (std::size_t e = 0; e < coef.size(); ++e) {
      if (coef[e] == 0.0) continue;
      const auto [u, v] = topo.edges()[e];
      const double* p = at(x, u);
      const double* q = at(x, v);
      double s = delta * delta;
      for (std::size_t c = 0; c < dim; ++c) {
        d[c] = p[c] - q[c];
        s += d[c] * d[c];
      }
      const double r = std::sqrt(s);
      if (r == 0.0) continue;
      const double cr = coef[e] / r;
      const double cr3 = cr / s;
      const bool fu = u >= terminals, fv = v >= terminals;
      const std::size_t ou = fu ? (u - terminals) * dim : 0, ov = fv ? (v - terminals) * dim : 0;
      for (std::size_t a = 0; a < dim; ++a) {
        if (fu) grad[ou + a] += cr * d[a];
        if (fv) grad[ov + a] -= cr * d[a];
        for (std::size_t b = 0; b < dim; ++b) {
          const double h = (a == b ? cr : 0.0) - cr3 * d[a] * d[b];
          if (fu) hess[(ou + a) * n + ou + b] += h;
          if (fv) hess[(ov + a) * n + ov + b] += h;
          if (fu && fv) {
            hess[(ou + a) * n + ov + b] -= h;
            hess[(ov + a) * n + ou + b] -= h;
          }
        }
      }
    }
  }

  double min_edge_length(const std::vector<double>& x) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < coef.size(); ++e) {
      if (coef[e] == 0.0) continue;
      const double* p = at(x, topo.edges()[e].first);
      const double* q = at(x, topo.edges()[e].second);
      double s = 0.0;
      for (std::size_t c = 0; c < dim; ++c) s += (p[c] - q[c]) * (p[c] - q[c]);
      m = std::min(m, std::sqrt(s));
    }
    return m;
  }
};

/// Default start: every Steiner node at the centroid of the present
/// terminals, then neighbour averaging.
inline std::vector<double> default_start(const Topology& topo, const Geometry& geo) {
  const std::size_t m = geo.dim(), T = topo.terminal_count(), S = topo.steiner_count();
  std::vector<double> x(S * m, 0.0);
  std::vector<bool> present(T, false);
  for (const auto& [a, b] : topo.edges()) {
    if (a < T) present[a] = true;
    if (b < T) present[b] = true;
  }
  std::vector<double> centroid(m, 0.0);
  double cnt = 0.0;
  for (std::size_t t = 0; t < T; ++t)
    if (present[t]) {
      for (std::size_t c = 0; c < m; ++c) centroid[c] += geo.terminals[t][c];
      cnt += 1.0;
    }
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t c = 0; c < m; ++c) x[s * m + c] = centroid[c] / cnt;
  std::vector<std::vector<std::size_t>> adj(topo.node_count());
  for (const auto& [a, b] : topo.edges()) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (int sweep = 0; sweep < 30; ++sweep)
    for (std::size_t s = 0; s < S; ++s) {
      std::vector<double> acc(m, 0.0);
      for (auto w : adj[T + s])
        for (std::size_t c = 0; c < m; ++c) acc[c] += w < T ? geo.terminals[w][c] : x[(w - T) * m + c];
      for (std::size_t c = 0; c < m; ++c) x[s * m + c] = acc[c] / static_cast<double>(adj[T + s].size());
    }
  return x;
}

}  // namespace detail

/// Optimal Steiner positions for a fixed topology. Minimizes a smoothed
/// objective sum c_e sqrt(|e|^2 + delta^2) by damped Newton steps while
/// delta is driven towards zero; every accepted step lowers the objective,
/// so `objective_trace` is non-increasing.
inline RelaxResult relax_topology(const Topology& topo, const Geometry& geo, double alpha, const RelaxOptions& opt = {}) {
  const std::size_t m = geo.dim(), T = topo.terminal_count(), S = topo.steiner_count();
  if (geo.size() != T) throw DomainError("geometry and topology disagree on the terminal count");
  const auto flows = edge_flows(topo, geo);
  detail::SmoothedObjective obj{topo, geo.terminals, {}, m, T};
  for (const auto& f : flows) obj.coef.push_back(f.weight > 0.0 ? std::pow(f.weight, alpha) : 0.0);

  std::vector<double> x;
  if (opt.initial_steiner) {
    if (opt.initial_steiner->size() != S) throw DomainError("initial Steiner positions have the wrong count");
    for (const auto& p : *opt.initial_steiner) x.insert(x.end(), p.coords().begin(), p.coords().end());
  } else {
    x = detail::default_start(topo, geo);
  }

  RelaxResult out;
  const double scale = geo.scale();
  const double step_tol = opt.tol * scale;
  const double delta_final = 1e-11 * scale;
  double delta = S == 0 ? delta_final : 1e-3 * scale;
  const std::size_t n = x.size();
  std::vector<double> grad, hess, step(n), trial(n);
  double f = obj.value(x, delta);
  out.objective_trace.push_back(f);

  while (S > 0) {
    for (std::size_t it = 0; it < 200; ++it) {
      if (out.iterations >= opt.max_iterations) {
        std::vector<double> best(geo.terminals.size() * m);
        for (std::size_t t = 0; t < T; ++t)
          std::copy(geo.terminals[t].coords().begin(), geo.terminals[t].coords().end(), best.begin() + t * m);
        best.insert(best.end(), x.begin(), x.end());
        throw ConvergenceFailure("Steiner relaxation did not converge", std::move(best), obj.true_cost(x));
      }
      ++out.iterations;
      obj.derivatives(x, delta, grad, hess);
      double max_diag = 0.0;
      for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, hess[i * n + i]);
      double mu = 1e-14 * max_diag;
      bool solved = false;
      for (int attempt = 0; attempt < 30 && !solved; ++attempt) {
        auto h = hess;
        for (std::size_t i = 0; i < n; ++i) h[i * n + i] += h[i * n + i] > 0.0 ? mu : 1.0;
        for (std::size_t i = 0; i < n; ++i) step[i] = -grad[i];
        solved = detail::cholesky_solve(h, step, n);
        mu = std::max(mu * 10.0, 1e-12 * std::max(max_diag, 1e-300));
      }
      if (!solved) break;
      double slope = 0.0, step_norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        slope += grad[i] * step[i];
        step_norm = std::max(step_norm, std::abs(step[i]));
      }
      if (step_norm < step_tol || !(slope < 0.0)) break;
      double t = 1.0, ft = f;
      bool accepted = false;
      for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + t * step[i];
        ft = obj.value(trial, delta);
        if (ft <= f + 1e-4 * t * slope) {
          accepted = true;
          break;
        }
      }
      if (!accepted || ft > f) break;
      x.swap(trial);
      f = ft;
      out.objective_trace.push_back(f);
      if (t * step_norm < step_tol) break;
    }
    if (delta <= delta_final) break;
    delta = obj.min_edge_length(x) > 1e4 * delta ? delta_final : std::max(delta_final, delta * 0.1);
    f = obj.value(x, delta);
    out.objective_trace.push_back(f);
  }

  out.positions = geo.terminals;
  for (std::size_t s = 0; s < S; ++s) out.positions.emplace_back(std::vector<double>(x.begin() + s * m, x.begin() + (s + 1) * m));
  out.cost = obj.true_cost(x);
  return out;
}

struct BuiltPath {
  TransportPath path;
  double residual = 0.0;  // worst force imbalance at free branching vertices
};

/// Turns relaxed positions into a transport path: zero-flow edges are
/// dropped and edges shorter than 1e-9 * scale with a Steiner endpoint are
/// contracted (into the terminal when there is one). Terminal t becomes
/// vertex t of the path.
inline BuiltPath build_path(const Topology& topo, const Geometry& geo, const std::vector<Point>& positions, double alpha) {
  const std::size_t T = topo.terminal_count(), N = topo.node_count();
  const auto flows = edge_flows(topo, geo);
  double total = 0.0;
  for (double mm : geo.masses) total += std::abs(mm);
  const double zero_flow = 1e-14 * std::max(1.0, total);
  const double short_edge = 1e-9 * geo.scale();

  detail::DisjointSets groups(N);
  std::vector<int> terminal_in(N, -1);
  for (std::size_t t = 0; t < T; ++t) terminal_in[t] = static_cast<int>(t);
  // Contract short edges; a group never holds two terminals.
  for (std::size_t e = 0; e < flows.size(); ++e) {
    const auto [a, b] = topo.edges()[e];
    if (topo.is_terminal(a) && topo.is_terminal(b)) continue;
    if (distance(positions[a], positions[b]) >= short_edge) continue;
    const auto ga = groups.find(a), gb = groups.find(b);
    if (ga == gb || (terminal_in[ga] >= 0 && terminal_in[gb] >= 0)) continue;
    const int term = std::max(terminal_in[ga], terminal_in[gb]);
    groups.unite(ga, gb);
    terminal_in[groups.find(ga)] = term;
  }

  std::vector<std::size_t> vertex_of(N, static_cast<std::size_t>(-1));
  std::vector<Point> verts;
  for (std::size_t t = 0; t < T; ++t) {
    vertex_of[groups.find(t)] = verts.size();
    verts.push_back(positions[t]);
  }
  std::vector<Edge> edges;
  for (std::size_t e = 0; e < flows.size(); ++e) {
    if (flows[e].weight <= zero_flow) continue;
    std::size_t ga = groups.find(flows[e].child), gb = groups.find(flows[e].parent);
    if (ga == gb) continue;
    for (auto g : {ga, gb})
      if (vertex_of[g] == static_cast<std::size_t>(-1)) {
        vertex_of[g] = verts.size();
        verts.push_back(positions[g]);
      }
    const auto c = vertex_of[ga], p = vertex_of[gb];
    edges.push_back(flows[e].upward ? Edge{c, p, flows[e].weight} : Edge{p, c, flows[e].weight});
  }
  BuiltPath out{TransportPath(std::move(verts), std::move(edges)), 0.0};

  const auto& pv = out.path.vertices();
  std::vector<std::vector<double>> force(pv.size(), std::vector<double>(geo.dim(), 0.0));
  for (std::size_t e = 0; e < out.path.edge_count(); ++e) {
    const auto& ed = out.path.edges()[e];
    const double len = out.path.length(e);
    const double c = std::pow(ed.weight, alpha) / len;
    for (std::size_t k = 0; k < geo.dim(); ++k) {
      const double d = pv[ed.head][k] - pv[ed.tail][k];
      force[ed.tail][k] += c * d;
      force[ed.head][k] -= c * d;
    }
  }
  for (std::size_t v = T; v < pv.size(); ++v) {
    double s = 0.0;
    for (double fk : force[v]) s += fk * fk;
    out.residual = std::max(out.residual, std::sqrt(s));
  }
  return out;
}

}  // namespace ramified
