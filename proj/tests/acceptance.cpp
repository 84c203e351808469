// Acceptance battery: one PASS/FAIL line per criterion.
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "support.hpp"

using namespace ramified;
using ramified::testing::contains;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

struct BatteryRun {
  Instance inst;
  OracleResult oracle;
  AllocationResult pruned;
  AllocationResult unpruned;
  FixpointResult fixpoint;
};

std::vector<BatteryRun> run_battery() {
  std::vector<BatteryRun> out;
  for (const auto& in : ramified::testing::battery(50)) {
    BatteryRun r{in, {}, {}, {}, fixpoint(initial_state(in), in)};
    Evaluator ev(in, {});
    r.oracle = brute_force_oracle(in, ev);
    AllocationOptions opt;
    r.pruned = solve(in, opt, ev);
    opt.prune = false;
    r.unpruned = solve(in, opt, ev);
    out.push_back(std::move(r));
  }
  return out;
}

std::size_t edge_component_count(const TransportPath& path) {
  const auto label = path.components();
  std::vector<std::size_t> seen;
  for (const auto& e : path.edges())
    if (std::find(seen.begin(), seen.end(), label[e.tail]) == seen.end()) seen.push_back(label[e.tail]);
  return seen.size();
}

AtomicMeasure random_measure(std::mt19937_64& g, std::size_t atoms) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w;
  double total = 0.0;
  for (std::size_t t = 0; t < atoms; ++t) total += w.emplace_back(0.2 + u(g));
  std::vector<Atom> out;
  for (std::size_t t = 0; t < atoms; ++t) out.push_back({Point{u(g) * 3, u(g) * 3}, w[t] / total});
  return AtomicMeasure(std::move(out));
}

Outcome y_junction() {
  Outcome o;
  const auto r = solve_single_source(Point{0, 0}, ramified::testing::y_targets(), 0.5);
  // Independent check: grid plus refinement over the branch point.
  auto f = [](double x, double y) {
    const Point b{x, y};
    return norm(b) + std::sqrt(0.5) * (distance(b, Point{-1, 2}) + distance(b, Point{1, 2}));
  };
  double bx = 0, by = 0, best = f(0, 0), h = 0.02;
  for (double x = -1; x <= 1; x += h)
    for (double y = 0; y <= 2; y += h)
      if (f(x, y) < best) best = f(x, y), bx = x, by = y;
  for (int level = 0; level < 40; ++level, h /= 2)
    for (bool moved = true; moved;) {
      moved = false;
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          if (f(bx + dx * h, by + dy * h) < best) best = f(bx + dx * h, by + dy * h), bx += dx * h, by += dy * h, moved = true;
    }
  const TransportPath v({Point{0, 0}, Point{-1, 2}, Point{1, 2}}, {{0, 1, 0.5}, {0, 2, 0.5}});
  const double v_cost = m_alpha_cost(v, 0.5);
  o.require(r.exact, "solve is exact");
  o.require(std::abs(r.cost - 3.0) <= 1e-6, "cost 3.0");
  o.require(std::abs(best - 3.0) <= 1e-9, "grid oracle reaches 3.0");
  o.require(r.path.vertex_count() == 4, "one branch point");
  double dist = 1.0;
  if (r.path.vertex_count() == 4) dist = distance(r.path.vertices()[3], Point{0, 1});
  o.require(dist <= 1e-4, "branch point at (0,1)");
  o.require(r.cost < v_cost, "V shape strictly worse");
  o.detail.precision(10);
  o.detail << "cost=" << r.cost << " grid=" << best << " branch_offset=" << dist << " V=" << v_cost;
  return o;
}

Outcome scaling_law() {
  Outcome o;
  std::mt19937_64 g(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const double alpha = 0.95 * u(g);
    const auto targets = random_measure(g, 1 + t % 6);
    const Point origin{u(g) * 3, u(g) * 3};
    const auto a = AtomicMeasure::dirac(origin, mass(targets));
    const double base = d_alpha_between(a, targets, alpha);
    for (double lambda : {0.25, 4.0}) {
      const double scaled = d_alpha_between(a.scaled(lambda), targets.scaled(lambda), alpha);
      const double err = std::abs(scaled / base - std::pow(lambda, alpha)) / std::pow(lambda, alpha);
      worst = std::max(worst, err);
    }
  }
  o.require(worst <= 1e-7, "relative error within 1e-7");
  o.detail << "50 instances, worst relative error=" << worst;
  return o;
}

Outcome metric_sanity() {
  Outcome o;
  std::mt19937_64 g(303);
  std::size_t violations = 0;
  double worst = -1e300;
  for (int t = 0; t < 100; ++t) {
    const auto a = random_measure(g, 1 + t % 3), b = random_measure(g, 1 + (t / 3) % 3), c = random_measure(g, 1 + (t / 9) % 3);
    const double alpha = 0.1 + 0.8 * ((t * 37) % 100) / 100.0;
    o.require(d_alpha_between(a, a, alpha) == 0.0, "d(a,a) = 0");
    const auto ab = transport_between(a, b, alpha), bc = transport_between(b, c, alpha), ac = transport_between(a, c, alpha);
    o.require(ab.exact && bc.exact && ac.exact, "exact mode");
    const double excess = ac.cost - (ab.cost + bc.cost);
    worst = std::max(worst, excess);
    if (excess > 1e-9) ++violations;
  }
  o.require(violations == 0, "triangle inequality");
  o.detail << "100 triples, violations=" << violations << " max(d(a,c)-d(a,b)-d(b,c))=" << worst;
  return o;
}

Outcome oracle_equivalence(const std::vector<BatteryRun>& runs) {
  Outcome o;
  std::size_t mismatches = 0;
  for (const auto& r : runs) {
    for (const auto* s : {&r.pruned, &r.unpruned}) {
      const bool ok = std::abs(s->cost - r.oracle.cost) <= 1e-9 && contains(r.oracle.optimal_maps, s->map) &&
                      s->exactness == Exactness::Exact && r.oracle.exact;
      if (!ok) ++mismatches;
    }
  }
  o.require(mismatches == 0, "solve matches oracle");
  o.detail << runs.size() << " instances x {pruned, unpruned}, mismatches=" << mismatches;
  return o;
}

Outcome pruning_soundness(const std::vector<BatteryRun>& runs) {
  Outcome o;
  std::size_t zeros = 0, violations = 0;
  for (const auto& r : runs)
    for (std::size_t i = 0; i < r.inst.k(); ++i)
      for (std::size_t j = 0; j < r.inst.ell(); ++j) {
        if (r.pruned.state(i, j)) continue;
        ++zeros;
        for (const auto& s : r.oracle.optimal_maps)
          if (s[j] == i) ++violations;
      }
  o.require(violations == 0, "no optimal map violates a zero");
  o.detail << "zeros=" << zeros << " violations=" << violations;
  return o;
}

Instance clustered_twenty() {
  std::mt19937_64 g(606);
  std::normal_distribution<double> jitter(0.0, 0.6);
  std::uniform_real_distribution<double> demand(0.5, 1.5);
  Instance in;
  in.alpha = 0.7;
  in.factories = {Point{0, 0}, Point{8, 3}};
  for (int j = 0; j < 20; ++j) {
    const Point c = j < 11 ? Point{0.5, 0.5} : Point{7.5, 3.5};
    in.households.push_back({c + Point{jitter(g), jitter(g)}, demand(g)});
  }
  return normalize(in);
}

Outcome component_decomposition(const std::vector<BatteryRun>& runs) {
  Outcome o;
  std::size_t bad = 0;
  for (const auto& r : runs)
    for (const auto* s : {&r.pruned, &r.unpruned})
      if (!one_factory_per_component(*s, r.inst) || !is_compatible(s->path, s->plan, r.inst)) ++bad;
  const auto in = clustered_twenty();
  const auto big = solve(in);
  const auto components = edge_component_count(big.path);
  o.require(bad == 0, "one factory per component on the battery");
  o.require(one_factory_per_component(big, in), "one factory per component on l=20");
  o.require(components == 2, "two components on l=20");
  o.detail << "battery failures=" << bad << "; l=20 instance components=" << components
           << " exactness=" << to_string(big.exactness);
  return o;
}

Outcome region_correctness() {
  Outcome o;
  std::mt19937_64 g(707);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // The region is empty at alpha = 0, so every constructed instance has alpha > 0.
  static constexpr double kAlphas[] = {0.25, 0.3, 0.5, 0.8};
  std::size_t confirmed = 0;
  for (int t = 0; t < 20; ++t) {
    Instance in;
    in.alpha = kAlphas[t % 4];
    const std::size_t k = 2 + t % 2, ell = 4 + t % 3;
    for (std::size_t i = 0; i < k; ++i) in.factories.push_back(Point{u(g) * 4, u(g) * 4});
    for (std::size_t j = 0; j < ell; ++j) in.households.push_back({Point{u(g) * 4, u(g) * 4}, 0.2 + u(g)});
    in = normalize(in);
    const std::size_t s = t % k;
    // Move household 0 towards x_s until it lies in the assign-to-s region.
    Point z = in.y(0);
    for (int step = 0; step < 200 && uniform_region_membership(z, 0, s, in) != Region::InOmega; ++step)
      z = in.x(s) + (z - in.x(s)) * 0.8;
    in.households[0].position = z;
    bool ok = uniform_region_membership(z, 0, s, in) == Region::InOmega;
    try {
      validate(in);
    } catch (const Error&) {
      ok = false;
    }
    if (ok) {
      const auto oracle = brute_force_oracle(in);
      for (const auto& m : oracle.optimal_maps) ok = ok && m[0] == s;
    }
    if (ok) ++confirmed;
  }
  // Region growth with demand on the three-factory triangle.
  auto with_demand = [](double n) {
    Instance in;
    in.alpha = 0.5;
    in.factories = {Point{0, 0}, Point{2, 0}, Point{1, 2}};
    in.households = {{Point{10, 10}, n}, {Point{11, 10}, 1.0 - n}};
    return in;
  };
  const auto low = with_demand(0.5), high = with_demand(0.8);
  std::size_t in_low = 0, in_high = 0, escapes = 0;
  for (int a = 0; a < 100; ++a)
    for (int b = 0; b < 100; ++b) {
      const Point z{-1.0 + 4.0 * (a + 0.5) / 100, -1.0 + 4.0 * (b + 0.5) / 100};
      for (std::size_t s = 0; s < 3; ++s) {
        const bool lo = uniform_region_membership(z, 0, s, low) == Region::InOmega;
        const bool hi = uniform_region_membership(z, 0, s, high) == Region::InOmega;
        in_low += lo;
        in_high += hi;
        if (lo && !hi) ++escapes;
      }
    }
  auto flat = with_demand(0.5);
  flat.alpha = 0.0;
  std::size_t flat_hits = 0;
  for (int a = 0; a < 100; ++a)
    for (int b = 0; b < 100; ++b)
      flat_hits += uniform_region_membership(Point{-1.0 + 0.04 * a, -1.0 + 0.04 * b}, 0, 0, flat) == Region::InOmega;
  o.require(confirmed == 20, "oracle confirms 20/20");
  o.require(flat_hits == 0, "empty region at alpha = 0");
  o.require(escapes == 0 && in_low > 0 && in_high > in_low, "region inclusion on the grid");
  o.detail << "oracle confirmed " << confirmed << "/20; grid 10^4 points x 3 factories: |Omega(0.5)|=" << in_low
           << " |Omega(0.8)|=" << in_high << " points of Omega(0.5) outside Omega(0.8)=" << escapes << "; alpha=0 hits=" << flat_hits;
  return o;
}

Outcome autarky() {
  Outcome o;
  const double c = projection_constant_c(2, 0.5);
  const double r = 0.1, sigma = 1.0, t1 = 0.0, t2 = t1 + 2 * c * r + sigma;
  Instance in;
  in.alpha = 0.5;
  in.factories = {Point{t1, 0}, Point{t2, 0}};
  const std::vector<std::pair<double, double>> low = {{-1.0, 0.1}, {-0.7, -0.1}, {-0.4, 0.08}, {-0.1, -0.05}};
  const std::vector<std::pair<double, double>> high = {{t2 + 0.05, 0.1}, {t2 + 0.4, -0.1}, {t2 + 0.8, 0.05}};
  for (auto [x, y] : low) in.households.push_back({Point{x, y}, 1.0});
  for (auto [x, y] : high) in.households.push_back({Point{x, y}, 1.2});
  in = normalize(in);
  const Projection pi(Point{0, 0}, Point{1, 0});
  const auto split = autarky_split(in, pi, t1, t2, sigma);
  const auto u = fixpoint(initial_state(in), in).state;
  bool block = true;
  for (std::size_t j = 0; j < in.ell(); ++j) {
    const std::size_t side = j < low.size() ? 0 : 1;
    block = block && u(side, j) && !u(1 - side, j);
  }
  const auto oracle = brute_force_oracle(in);
  bool local = true;
  for (const auto& m : oracle.optimal_maps)
    for (std::size_t j = 0; j < in.ell(); ++j) local = local && m[j] == (j < low.size() ? 0u : 1u);
  o.require(std::abs(c - 3.4142136) < 1e-7, "C for m=2, alpha=0.5");
  o.require(split.has_value(), "split certified");
  if (split) o.require(split->low_households.size() == low.size() && split->high_households.size() == high.size(), "split sides");
  o.require(block, "U* block-diagonal");
  o.require(local, "oracle optimum local");
  o.detail.precision(9);
  o.detail << "C=" << c << " R=" << max_deviation(pi, all_sites(in)) << " gap=" << t2 - t1 << " U*=";
  for (const auto& row : u.to_rows()) o.detail << row << ' ';
  o.detail << "optimal maps=" << oracle.optimal_maps.size();
  return o;
}

std::string capture(const std::string& command) {
  std::string out;
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(command.c_str(), "r"), pclose);
  if (!pipe) return "<popen failed>";
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe.get())) out.append(buf.data(), n);
  return out;
}

Outcome fixpoint_behavior(const std::vector<BatteryRun>& runs) {
  Outcome o;
  std::size_t worst_ratio_num = 0, worst_ratio_den = 1;
  for (const auto& r : runs) {
    const auto& tr = r.fixpoint.trace;
    for (std::size_t t = 1; t < tr.size(); ++t)
      o.require(tr[t].below(tr[t - 1]) && tr[t].count_ones() < tr[t - 1].count_ones(), "strict descent");
    const std::size_t bound = r.inst.k() * r.inst.ell();
    o.require(r.fixpoint.iterations <= bound, "iterations <= k*l");
    if (r.fixpoint.iterations * worst_ratio_den > worst_ratio_num * bound) {
      worst_ratio_num = r.fixpoint.iterations;
      worst_ratio_den = bound;
    }
    o.require(r.fixpoint.state == r.pruned.state, "solver uses the same fixpoint");
  }
  // The prune subcommand, run as a separate process five times.
  const auto dir = std::filesystem::temp_directory_path() / ("ramified_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const auto input = (dir / "instance.json").string();
  write_file(input, instance_to_json(runs[7].inst).dump(2));
  const std::string cmd = std::string("\"") + RAMIFIED_CLI_PATH + "\" prune --input \"" + input + "\"";
  const auto first = capture(cmd);
  bool same = first.find("state_matrix") != std::string::npos;
  for (int t = 1; t < 5; ++t) same = same && capture(cmd) == first;
  std::filesystem::remove_all(dir);
  o.require(same, "prune output identical across 5 runs");
  o.detail << runs.size() << " instances, max iterations/(k*l)=" << worst_ratio_num << "/" << worst_ratio_den
           << "; prune subcommand identical over 5 runs=" << (same ? "yes" : "no");
  return o;
}

Outcome marginal_consistency() {
  Outcome o;
  std::mt19937_64 g(1010);
  double worst_fd = 0.0;
  std::size_t bound_failures = 0, checks = 0;
  for (int t = 0; t < 20; ++t) {
    const auto path = ramified::testing::random_tree(g, 3 + t % 8);
    const double alpha = 0.2 + 0.035 * t;
    const double total = flow_density(path, PathPoint::vertex(0));
    for (std::size_t v = 1; v < path.vertex_count(); ++v) {
      for (const auto& p : {PathPoint::vertex(v), PathPoint::on_edge(v - 1, 0.37)}) {
        const double mc = marginal_cost(path, p, alpha);
        const double fd = increment_cost(path, p, 1e-7, alpha) / 1e-7;
        worst_fd = std::max(worst_fd, std::abs(fd - mc) / mc);
        // Length of the source-to-p curve, walked independently.
        double len = 0.0;
        std::size_t at = p.kind == PathPoint::Kind::Vertex ? p.index : path.edges()[p.index].tail;
        if (p.kind == PathPoint::Kind::EdgeInterior) len += p.t * path.length(p.index);
        while (at != 0) {
          const auto e = path.incoming(at).front();
          len += path.length(e);
          at = path.edges()[e].tail;
        }
        const double theta = flow_density(path, p);
        for (double dm : {1e-3, 0.1, 1.0}) {
          ++checks;
          const double inc = increment_cost(path, p, dm, alpha);
          const double lower = (std::pow(total + dm, alpha) - std::pow(total, alpha)) * len;
          const double upper = (std::pow(theta + dm, alpha) - std::pow(theta, alpha)) * len;
          if (inc < lower - 1e-12 || inc > upper + 1e-12) ++bound_failures;
        }
      }
    }
  }
  o.require(worst_fd <= 1e-5, "finite difference agreement");
  o.require(bound_failures == 0, "increment bounds");
  o.detail << "20 trees, worst relative FD error=" << worst_fd << ", bound checks=" << checks
           << " failures=" << bound_failures;
  return o;
}

Outcome round_trip(const std::vector<BatteryRun>& runs) {
  Outcome o;
  std::size_t trips = 0, disagreements = 0;
  AllocationOptions opt;
  for (const auto& r : runs) {
    const auto file = make_result_file(r.inst, r.pruned, opt);
    const auto text = result_to_json(file).dump(2);
    const auto back = parse_result(text);
    o.require(back == file, "ResultFile equality after reparse");
    o.require(result_to_json(back).dump(2) == text, "re-emission identical");
    o.require(check_result(back).empty(), "reparsed result passes check");
    o.require(parse_instance(instance_to_json(r.inst).dump()) == r.inst, "instance round trip");
    ++trips;
    if (r.pruned.map != r.unpruned.map || std::abs(r.pruned.cost - r.unpruned.cost) > 1e-9) ++disagreements;
  }
  o.require(disagreements == 0, "pruned and unpruned agree");
  o.detail << trips << " result files round-tripped; pruned/unpruned disagreements=" << disagreements;
  return o;
}

}  // namespace

int main() {
  const auto runs = run_battery();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Y-junction exact value", y_junction},
      {"scaling law", scaling_law},
      {"metric sanity", metric_sanity},
      {"solve equals brute-force oracle", [&] { return oracle_equivalence(runs); }},
      {"pruning soundness", [&] { return pruning_soundness(runs); }},
      {"component decomposition", [&] { return component_decomposition(runs); }},
      {"region correctness", region_correctness},
      {"autarky split", autarky},
      {"fixpoint behavior", [&] { return fixpoint_behavior(runs); }},
      {"marginal-cost consistency", marginal_consistency},
      {"round trip and pruning equivalence", [&] { return round_trip(runs); }},
  };
  int failed = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c + 1 << ": " << criteria[c].first << " -- "
              << o.detail.str() << std::endl;
  }
  std::cout << (failed ? "FAILED " : "all ") << criteria.size() - failed << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed ? 1 : 0;
}
