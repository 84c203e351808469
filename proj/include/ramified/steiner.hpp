#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "ramified/errors.hpp"
#include "ramified/measures.hpp"
#include "ramified/relaxation.hpp"
#include "ramified/topology.hpp"
#include "ramified/transport_path.hpp"

namespace ramified {

struct SteinerOptions {
  std::size_t exact_threshold = 7;
  std::size_t restarts = 8;  // heuristic mode; capped at 200
  std::uint64_t seed = 20240601;
  double tol = 1e-10;
};

struct SolveReport {
  TransportPath path;
  double cost = 0.0;
  bool exact = true;
  std::size_t iterations = 0;
  double residual = 0.0;
  std::size_t topologies = 0;  // relaxations performed
};

namespace detail {

struct Candidate {
  Topology topo;
  RelaxResult relaxed;
};


/// Warm start for a topology that gained one Steiner node on edge e: keep
/// the old positions, put the new node at the centroid of its neighbours.
inline std::vector<Point> warm_start(const Topology& before, const std::vector<Point>& positions, std::size_t e,
                                     const Point& new_terminal) {
  const std::size_t T = before.terminal_count();
  std::vector<Point> steiner(positions.begin() + static_cast<std::ptrdiff_t>(T), positions.end());
  const auto [u, v] = before.edges()[e];
  steiner.push_back((positions[u] + positions[v] + new_terminal) * (1.0 / 3.0));
  return steiner;
}

class Search {
 public:
  Search(const Geometry& geo, double alpha, const SteinerOptions& opt) : geo_(geo), alpha_(alpha), opt_(opt) {}

  RelaxResult relax(const Topology& t, std::optional<std::vector<Point>> init) {
    RelaxOptions ro;
    ro.tol = opt_.tol;
    ro.initial_steiner = std::move(init);
    auto r = relax_topology(t, geo_, alpha_, ro);
    iterations_ += r.iterations;
    ++relaxations_;
    return r;
  }

  /// Exhaustive enumeration of insertion sequences. With `bound` set, a
  /// partial tree whose relaxed cost already exceeds the incumbent is
  /// pruned; this is valid only when every terminal after the first is a
  /// sink, because dropping a sink never raises the optimal cost.
  std::optional<Candidate> enumerate(bool bound) {
    best_.reset();
    Topology root(geo_.size());
    auto r = relax(root, std::nullopt);
    descend(root, r, bound);
    return std::move(best_);
  }

  /// Greedy insertion plus remove-and-reinsert local search from several
  /// terminal orders.
  std::optional<Candidate> heuristic() {
    const std::size_t N = geo_.size();
    std::optional<Candidate> overall;
    std::mt19937_64 rng(opt_.seed);
    const std::size_t restarts = std::clamp<std::size_t>(opt_.restarts, 1, 200);
    for (std::size_t run = 0; run < restarts; ++run) {
      std::vector<std::size_t> order(N - 1);
      std::iota(order.begin(), order.end(), std::size_t{1});
      if (run > 0) std::shuffle(order.begin(), order.end(), rng);
      // Start from the edge source-order[0]; Topology always begins with 0-1,
      // so the remaining terminals are attached by explicit label.
      Topology t = start_with(order.front());
      auto r = relax(t, std::nullopt);
      for (std::size_t idx = 1; idx < order.size(); ++idx) {
        auto [bt, br] = best_insertion(t, r, order[idx]);
        t = std::move(bt);
        r = std::move(br);
      }
      for (int pass = 0; pass < 50; ++pass) {
        bool improved = false;
        for (std::size_t term = 1; term < N; ++term) {
          Topology reduced = t;
          reduced.remove_terminal(term);
          auto reduced_relax = relax(reduced, std::nullopt);
          auto [bt, br] = best_insertion(reduced, reduced_relax, term);
          if (br.cost < r.cost - 1e-12 * std::max(1.0, r.cost)) {
            t = std::move(bt);
            r = std::move(br);
            improved = true;
          }
        }
        if (!improved) break;
      }
      if (!overall || r.cost < overall->relaxed.cost - 1e-12 * std::max(1.0, r.cost)) overall = Candidate{t, r};
    }
    return overall;
  }

  std::size_t iterations() const noexcept { return iterations_; }
  std::size_t relaxations() const noexcept { return relaxations_; }

 private:
  double tie_tol(double c) const { return 1e-10 * std::max(1.0, c); }
  double bound_margin(double c) const { return 1e-9 * std::max(1.0, c); }

  void descend(const Topology& t, const RelaxResult& r, bool bound) {
    if (t.complete()) {
      if (!best_ || r.cost < best_->relaxed.cost - tie_tol(best_->relaxed.cost) ||
          (r.cost <= best_->relaxed.cost + tie_tol(best_->relaxed.cost) && t.encoding() < best_->topo.encoding()))
        best_ = Candidate{t, r};
      return;
    }
    struct Child {
      Topology topo;
      RelaxResult relaxed;
    };
    std::vector<Child> children;
    const Point& next = geo_.terminals[t.inserted()];
    for (std::size_t e = 0; e < t.edges().size(); ++e) {
      Topology c = t;
      c.insert_next(e);
      auto cr = relax(c, warm_start(t, r.positions, e, next));
      children.push_back({std::move(c), std::move(cr)});
    }
    std::stable_sort(children.begin(), children.end(),
                     [](const Child& a, const Child& b) { return a.relaxed.cost < b.relaxed.cost; });
    for (const auto& c : children) {
      if (bound && best_ && c.relaxed.cost > best_->relaxed.cost + bound_margin(best_->relaxed.cost)) break;
      descend(c.topo, c.relaxed, bound);
    }
  }

  Topology start_with(std::size_t first) const {
    // Build 0-1 and, if `first` is not terminal 1, swap roles by reinsertion.
    Topology t(geo_.size());
    if (first == 1) return t;
    // Tree 0-1 plus first attached on that edge, then drop 1: edge 0-first.
    t.insert_terminal(first, 0);
    t.remove_terminal(1);
    return t;
  }

  std::pair<Topology, RelaxResult> best_insertion(const Topology& t, const RelaxResult& r, std::size_t term) {
    std::optional<std::pair<Topology, RelaxResult>> best;
    for (std::size_t e = 0; e < t.edges().size(); ++e) {
      Topology c = t;
      c.insert_terminal(term, e);
      auto cr = relax(c, warm_start(t, r.positions, e, geo_.terminals[term]));
      if (!best || cr.cost < best->second.cost - tie_tol(best->second.cost)) best.emplace(std::move(c), std::move(cr));
    }
    return std::move(*best);
  }

  const Geometry& geo_;
  double alpha_;
  SteinerOptions opt_;
  std::optional<Candidate> best_;
  std::size_t iterations_ = 0;
  std::size_t relaxations_ = 0;
};

/// Terminals of a signed measure pair with coincident locations netted and
/// vanishing masses removed. The first positive terminal comes first.
inline Geometry signed_terminals(const AtomicMeasure& a, const AtomicMeasure& b) {
  Geometry g;
  auto add = [&](const Point& p, double m) {
    for (std::size_t t = 0; t < g.size(); ++t)
      if (same_location(g.terminals[t], p)) {
        g.masses[t] += m;
        return;
      }
    g.terminals.push_back(p);
    g.masses.push_back(m);
  };
  for (const auto& x : a.atoms()) add(x.location, x.mass);
  for (const auto& y : b.atoms()) add(y.location, -y.mass);
  const double floor = 1e-14 * std::max(1.0, mass(a));
  Geometry out;
  for (std::size_t t = 0; t < g.size(); ++t)
    if (std::abs(g.masses[t]) > floor) {
      out.terminals.push_back(g.terminals[t]);
      out.masses.push_back(g.masses[t]);
    }
  return out;
}

inline SolveReport report_from(const Geometry& geo, const Candidate& c, double alpha, bool exact, const Search& s) {
  auto built = build_path(c.topo, geo, c.relaxed.positions, alpha);
  SolveReport rep;
  rep.cost = m_alpha_cost(built.path, alpha);
  rep.path = std::move(built.path);
  rep.exact = exact;
  rep.iterations = s.iterations();
  rep.residual = built.residual;
  rep.topologies = s.relaxations();
  return rep;
}

inline SolveReport trivial_report(const Geometry& geo, double alpha) {
  SolveReport rep;
  if (geo.size() == 2) {
    const double w = std::abs(geo.masses[0]);
    const bool forward = geo.masses[0] > 0.0;
    rep.path = TransportPath(geo.terminals, {forward ? Edge{0, 1, w} : Edge{1, 0, w}});
    rep.cost = m_alpha_cost(rep.path, alpha);
  } else {
    rep.path = TransportPath(geo.terminals, {});
  }
  return rep;
}

}  // namespace detail

/// Optimal (exact mode) or good (heuristic mode) transport path from a
/// single source at `origin` carrying mass(targets) to the target atoms.
inline SolveReport solve_single_source(const Point& origin, const AtomicMeasure& targets, double alpha,
                                       const SteinerOptions& opt = {}) {
  if (targets.empty()) throw InvalidPair("at least one target is required");
  auto geo = detail::signed_terminals(AtomicMeasure::dirac(origin, mass(targets)), targets);
  if (geo.size() <= 2) {
    if (geo.size() < 2) geo = Geometry{{origin}, {0.0}};
    return detail::trivial_report(geo, alpha);
  }
  // Targets by descending distance from the source (ties by position).
  std::vector<std::size_t> idx(geo.size() - 1);
  std::iota(idx.begin(), idx.end(), std::size_t{1});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return distance(geo.terminals[a], geo.terminals[0]) > distance(geo.terminals[b], geo.terminals[0]);
  });
  Geometry ordered{{geo.terminals[0]}, {geo.masses[0]}};
  for (auto t : idx) {
    ordered.terminals.push_back(geo.terminals[t]);
    ordered.masses.push_back(geo.masses[t]);
  }
  detail::Search search(ordered, alpha, opt);
  const bool exact = ordered.size() - 1 <= opt.exact_threshold;
  auto best = exact ? search.enumerate(true) : search.heuristic();
  return detail::report_from(ordered, *best, alpha, exact, search);
}

/// Transport between two equal-mass atomic measures. A single source is
/// routed through solve_single_source; otherwise every full topology is
/// relaxed (at most 9 distinct atoms).
inline SolveReport transport_between(const AtomicMeasure& a, const AtomicMeasure& b, double alpha,
                                     const SteinerOptions& opt = {}) {
  if (std::abs(mass(a) - mass(b)) > kBalanceTolerance * std::max(1.0, mass(a)))
    throw InvalidPair("measures have different masses");
  auto geo = detail::signed_terminals(a, b);
  std::size_t sources = 0;
  for (double m : geo.masses) sources += m > 0.0 ? 1 : 0;
  if (geo.size() < 2) return detail::trivial_report(geo.size() == 1 ? geo : Geometry{{a.atoms().front().location}, {0.0}}, alpha);
  if (sources == 1) {
    std::size_t s = 0;
    std::vector<Atom> sinks;
    for (std::size_t t = 0; t < geo.size(); ++t) {
      if (geo.masses[t] > 0.0)
        s = t;
      else
        sinks.push_back({geo.terminals[t], -geo.masses[t]});
    }
    return solve_single_source(geo.terminals[s], AtomicMeasure(std::move(sinks)), alpha, opt);
  }
  if (geo.size() > 9) throw Unsupported("multi-source transport supports at most 9 distinct atoms");
  if (geo.size() == 2) return detail::trivial_report(geo, alpha);
  detail::Search search(geo, alpha, opt);
  auto best = search.enumerate(false);
  return detail::report_from(geo, *best, alpha, true, search);
}

/// d_alpha(a, b): minimum M_alpha cost of a transport path from a to b.
inline double d_alpha_between(const AtomicMeasure& a, const AtomicMeasure& b, double alpha,
                              const SteinerOptions& opt = {}) {
  return transport_between(a, b, alpha, opt).cost;
}

}  // namespace ramified
