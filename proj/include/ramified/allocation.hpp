#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ramified/assignment.hpp"
#include "ramified/errors.hpp"
#include "ramified/measures.hpp"
#include "ramified/state_matrix.hpp"
#include "ramified/steiner.hpp"
#include "ramified/transport_path.hpp"

namespace ramified {

enum class Exactness { Exact, HeuristicInner, HeuristicOuter };

inline const char* to_string(Exactness e) {
  switch (e) {
    case Exactness::Exact:
      return "exact";
    case Exactness::HeuristicInner:
      return "heuristic-inner";
    case Exactness::HeuristicOuter:
      return "heuristic-outer";
  }
  return "exact";
}

struct AllocationOptions {
  std::size_t exact_threshold = 7;
  double tol = 1e-9;
  std::size_t max_candidates = 1000000;
  bool prune = true;
  std::size_t beam_width = 64;
  PruneRules rules;
  SteinerOptions steiner;  // exact_threshold above overrides steiner.exact_threshold
};

/// Caches single-source solves per (factory, household subset). One
/// evaluator may be shared between the oracle and several solves of the
/// same instance with the same Steiner settings.
class Evaluator {
 public:
  Evaluator(const Instance& inst, SteinerOptions opt) : inst_(inst), opt_(opt) {}

  const SolveReport& sub_solve(std::size_t i, const std::vector<std::size_t>& households) {
    auto key = std::make_pair(i, households);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    SolveReport rep;
    if (households.empty()) {
      rep.path = TransportPath({inst_.x(i)}, {});
    } else {
      std::vector<Atom> atoms;
      for (auto j : households) atoms.push_back({inst_.y(j), inst_.n(j)});
      rep = solve_single_source(inst_.x(i), AtomicMeasure(std::move(atoms)), inst_.alpha, opt_);
    }
    return cache_.emplace(std::move(key), std::move(rep)).first->second;
  }

  double cost(const AssignmentMap& s, bool* exact = nullptr) {
    double c = 0.0;
    for (std::size_t i = 0; i < inst_.k(); ++i) {
      const auto& rep = sub_solve(i, s.preimage(i));
      c += rep.cost;
      if (exact && !rep.exact) *exact = false;
    }
    return c;
  }

  const Instance& instance() const noexcept { return inst_; }
  std::size_t cache_size() const noexcept { return cache_.size(); }

 private:
  const Instance& inst_;
  SteinerOptions opt_;
  std::map<std::pair<std::size_t, std::vector<std::size_t>>, SolveReport> cache_;
};

struct MapEvaluation {
  double cost = 0.0;
  TransportPath path;  // disjoint union of the per-factory paths
  bool exact = true;
};

inline MapEvaluation evaluate_map(const AssignmentMap& s, Evaluator& ev) {
  const auto& inst = ev.instance();
  s.check_against(inst);
  MapEvaluation out;
  for (std::size_t i = 0; i < inst.k(); ++i) {
    const auto pre = s.preimage(i);
    if (pre.empty()) continue;
    const auto& rep = ev.sub_solve(i, pre);
    out.cost += rep.cost;
    out.exact = out.exact && rep.exact;
    out.path = out.path.disjoint_union(rep.path);
  }
  return out;
}

inline MapEvaluation evaluate_map(const AssignmentMap& s, const Instance& inst, std::size_t exact_threshold = 7) {
  SteinerOptions so;
  so.exact_threshold = exact_threshold;
  Evaluator ev(inst, so);
  return evaluate_map(s, ev);
}

struct AllocationResult {
  AssignmentMap map;
  double cost = 0.0;
  TransportPlan plan;
  TransportPath path;
  std::vector<double> loads;
  Exactness exactness = Exactness::Exact;
  StateMatrix state = StateMatrix::ones(1, 1);
  std::size_t fixpoint_iterations = 0;
  bool greedy_determined = false;
  std::size_t candidates = 0;  // maps consistent with the final state matrix
  std::size_t evaluated = 0;   // maps whose cost was computed
  std::size_t sub_solves = 0;
};

namespace detail {

/// Odometer over maps respecting u, in lexicographic order.
template <class F>
void for_each_map(const StateMatrix& u, F&& visit) {
  const std::size_t ell = u.cols();
  std::vector<std::vector<std::size_t>> cand(ell);
  for (std::size_t j = 0; j < ell; ++j) cand[j] = u.candidates(j);
  std::vector<std::size_t> digit(ell, 0);
  AssignmentMap s{std::vector<std::size_t>(ell)};
  while (true) {
    for (std::size_t j = 0; j < ell; ++j) s.factory_of[j] = cand[j][digit[j]];
    visit(s);
    std::size_t j = ell;
    while (j > 0) {
      --j;
      if (++digit[j] < cand[j].size()) break;
      digit[j] = 0;
      if (j == 0) return;
    }
    if (ell == 0) return;
  }
}

inline double candidate_count(const StateMatrix& u) {
  double c = 1.0;
  for (std::size_t j = 0; j < u.cols(); ++j) c *= static_cast<double>(u.candidates(j).size());
  return c;
}

/// Beam search over households in descending-demand order; partial maps
/// are ranked by the cost of the households placed so far.
inline AssignmentMap beam_search(const StateMatrix& u, Evaluator& ev, std::size_t width, std::size_t& evaluated) {
  const auto& inst = ev.instance();
  struct Partial {
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> assign;
    double cost;
  };
  std::vector<Partial> beam{{std::vector<std::vector<std::size_t>>(inst.k()), std::vector<std::size_t>(inst.ell(), 0), 0.0}};
  for (auto j : demand_order(inst)) {
    std::vector<Partial> next;
    for (const auto& p : beam)
      for (auto i : u.candidates(j)) {
        Partial q = p;
        auto& g = q.groups[i];
        g.insert(std::upper_bound(g.begin(), g.end(), j), j);
        q.assign[j] = i;
        q.cost = 0.0;
        for (std::size_t f = 0; f < inst.k(); ++f) q.cost += ev.sub_solve(f, q.groups[f]).cost;
        ++evaluated;
        next.push_back(std::move(q));
      }
    std::stable_sort(next.begin(), next.end(), [](const Partial& a, const Partial& b) {
      return a.cost < b.cost || (a.cost == b.cost && a.assign < b.assign);
    });
    if (next.size() > width) next.resize(width);
    beam = std::move(next);
  }
  return AssignmentMap{beam.front().assign};
}

}  // namespace detail

inline AllocationResult assemble(const AssignmentMap& s, Evaluator& ev) {
  const auto& inst = ev.instance();
  auto eval = evaluate_map(s, ev);
  AllocationResult r;
  r.map = s;
  r.cost = eval.cost;
  r.path = std::move(eval.path);
  r.plan = plan_from_map(s, inst);
  r.loads = s.loads(inst);
  r.exactness = eval.exact ? Exactness::Exact : Exactness::HeuristicInner;
  return r;
}

/// Optimal allocation: prune with the state-matrix fixpoint, try to read the
/// map off directly, else enumerate every consistent map (beam search past
/// max_candidates). Among maps within tol of the best cost the
/// lexicographically smallest wins.
inline AllocationResult solve(const Instance& inst, const AllocationOptions& opt, Evaluator& ev) {
  validate(inst);
  FixpointResult fp{initial_state(inst), {initial_state(inst)}, 0};
  if (opt.prune) fp = fixpoint(initial_state(inst), inst, opt.rules);

  if (opt.prune)
    if (auto pinned = greedy_determination(fp.state, inst)) {
      auto r = assemble(*pinned, ev);
      r.state = fp.state;
      r.fixpoint_iterations = fp.iterations;
      r.greedy_determined = true;
      r.candidates = 1;
      r.evaluated = 1;
      r.sub_solves = ev.cache_size();
      return r;
    }

  const double count = detail::candidate_count(fp.state);
  std::size_t evaluated = 0;
  AssignmentMap chosen;
  bool outer_exact = true;
  bool inner_exact = true;
  if (count <= static_cast<double>(opt.max_candidates)) {
    std::vector<double> costs;
    double best = std::numeric_limits<double>::infinity();
    detail::for_each_map(fp.state, [&](const AssignmentMap& s) {
      costs.push_back(ev.cost(s, &inner_exact));
      best = std::min(best, costs.back());
    });
    evaluated = costs.size();
    // First map in lexicographic order within tol of the best.
    std::size_t idx = 0;
    bool found = false;
    detail::for_each_map(fp.state, [&](const AssignmentMap& s) {
      if (!found && costs[idx] <= best + opt.tol) {
        chosen = s;
        found = true;
      }
      ++idx;
    });
  } else {
    outer_exact = false;
    chosen = detail::beam_search(fp.state, ev, opt.beam_width, evaluated);
  }
  auto r = assemble(chosen, ev);
  if (!outer_exact)
    r.exactness = Exactness::HeuristicOuter;
  else if (!inner_exact)
    r.exactness = Exactness::HeuristicInner;
  r.state = fp.state;
  r.fixpoint_iterations = fp.iterations;
  r.candidates = count > 1e18 ? static_cast<std::size_t>(-1) : static_cast<std::size_t>(count);
  r.evaluated = evaluated;
  r.sub_solves = ev.cache_size();
  return r;
}

inline AllocationResult solve(const Instance& inst, const AllocationOptions& opt = {}) {
  auto so = opt.steiner;
  so.exact_threshold = opt.exact_threshold;
  Evaluator ev(inst, so);
  return solve(inst, opt, ev);
}

struct OracleResult {
  std::vector<AssignmentMap> optimal_maps;  // lexicographic order
  double cost = 0.0;
  std::size_t evaluated = 0;
  bool exact = true;
};

inline constexpr double kOracleBudget = 1e6;

/// Evaluates every assignment map; returns all maps within 1e-9 of the optimum.
inline OracleResult brute_force_oracle(const Instance& inst, Evaluator& ev, double tie_tol = 1e-9) {
  validate(inst);
  if (std::pow(static_cast<double>(inst.k()), static_cast<double>(inst.ell())) > kOracleBudget)
    throw Refused("brute-force enumeration exceeds 1e6 maps");
  OracleResult out;
  std::vector<std::pair<double, AssignmentMap>> all;
  double best = std::numeric_limits<double>::infinity();
  detail::for_each_map(StateMatrix::ones(inst.k(), inst.ell()), [&](const AssignmentMap& s) {
    const double c = ev.cost(s, &out.exact);
    best = std::min(best, c);
    all.emplace_back(c, s);
  });
  out.evaluated = all.size();
  out.cost = best;
  for (const auto& [c, s] : all)
    if (c <= best + tie_tol) out.optimal_maps.push_back(s);
  return out;
}

inline OracleResult brute_force_oracle(const Instance& inst, std::size_t exact_threshold = 7) {
  SteinerOptions so;
  so.exact_threshold = exact_threshold;
  Evaluator ev(inst, so);
  return brute_force_oracle(inst, ev);
}

/// True when every connected component of the path that carries flow
/// contains exactly one factory with positive load.
inline bool one_factory_per_component(const AllocationResult& r, const Instance& inst) {
  const auto label = r.path.components();
  std::map<std::size_t, std::size_t> factories_in;
  std::map<std::size_t, bool> has_edge;
  for (const auto& e : r.path.edges()) has_edge[label[e.tail]] = true;
  for (std::size_t i = 0; i < inst.k(); ++i) {
    if (!(r.loads[i] > 0.0)) continue;
    for (auto v : r.path.vertices_at(inst.x(i)))
      if (r.path.net_outflow(v) > 0.0) ++factories_in[label[v]];
  }
  for (const auto& [comp, present] : has_edge)
    if (present && factories_in[comp] != 1) return false;
  return true;
}

struct SimplexReport {
  double grid_min = 0.0;
  std::vector<double> grid_argmin;  // factory outputs at the best grid point
  double assignment_min = 0.0;
  double at_optimal_loads = 0.0;  // d_alpha at the optimal map's loads
  double gap = 0.0;               // grid_min - assignment_min
  std::size_t grid_points = 0;
};

/// Grid search over factory outputs m on the simplex, evaluating
/// d_alpha(sum m_i delta_{x_i}, b) with the general transport engine, and
/// comparison with the best assignment map.
inline SimplexReport verify_simplex_equality(const Instance& inst, double resolution, const SteinerOptions& opt = {}) {
  validate(inst);
  if (inst.k() > 3 || inst.ell() > 6) throw DomainError("simplex check supports k <= 3 and l <= 6");
  if (!(resolution > 0.0 && resolution <= 1.0)) throw DomainError("grid resolution must lie in (0, 1]");
  const auto b = inst.household_measure();
  const double total = mass(b);
  auto d_at = [&](const std::vector<double>& m) {
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < inst.k(); ++i)
      if (m[i] > 0.0) atoms.push_back({inst.x(i), m[i]});
    return d_alpha_between(AtomicMeasure(std::move(atoms)), b, inst.alpha, opt);
  };
  SimplexReport rep;
  rep.grid_min = std::numeric_limits<double>::infinity();
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / resolution));
  std::vector<std::size_t> c(inst.k(), 0);
  auto visit = [&](const std::vector<std::size_t>& counts) {
    std::vector<double> m(inst.k());
    for (std::size_t i = 0; i < inst.k(); ++i) m[i] = total * static_cast<double>(counts[i]) / static_cast<double>(steps);
    const double v = d_at(m);
    ++rep.grid_points;
    if (v < rep.grid_min) {
      rep.grid_min = v;
      rep.grid_argmin = m;
    }
  };
  if (inst.k() == 1) {
    visit({steps});
  } else if (inst.k() == 2) {
    for (std::size_t a = 0; a <= steps; ++a) visit({a, steps - a});
  } else {
    for (std::size_t a = 0; a <= steps; ++a)
      for (std::size_t bb = 0; a + bb <= steps; ++bb) visit({a, bb, steps - a - bb});
  }
  Evaluator ev(inst, opt);
  const auto oracle = brute_force_oracle(inst, ev);
  rep.assignment_min = oracle.cost;
  rep.at_optimal_loads = d_at(oracle.optimal_maps.front().loads(inst));
  rep.gap = rep.grid_min - rep.assignment_min;
  return rep;
}

}  // namespace ramified
