#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ramified/criteria.hpp"
#include "ramified/errors.hpp"
#include "ramified/measures.hpp"
#include "ramified/transport_path.hpp"

namespace ramified {

struct RegionOverlay {
  std::size_t factory = 0;  // 0-based
  double demand = 0.0;
};

struct SvgOptions {
  double width = 640.0;
  double margin = 24.0;
  std::optional<RegionOverlay> regions;
};

/// Stroke width for an edge of weight w.
inline double stroke_width(double w, double alpha) { return std::max(0.5, 4.0 * std::pow(w, alpha)); }

/// Balls whose intersection is the assign-to-s region and whose union is
/// the never-s region, at demand n with the uniform load bound.
struct RegionBalls {
  std::vector<Ball> omega;
  std::vector<Ball> never;
};

inline RegionBalls region_balls(const Instance& inst, std::size_t s, double n) {
  RegionBalls out;
  const double r = rho(inst.alpha, std::max(inst.total_demand(), n), n);
  if (!(r > 0.0 && r < 1.0)) return out;
  for (std::size_t i = 0; i < inst.k(); ++i) {
    if (i == s) continue;
    out.omega.push_back(closeness_ball(inst.x(s), inst.x(i), r));
    out.never.push_back(closeness_ball(inst.x(i), inst.x(s), r));
  }
  return out;
}

/// Draws the allocation: factories as squares, households as circles sized
/// by demand, edges with width 4 w^alpha (at least 0.5 px).
inline std::string render_svg(const Instance& inst, const TransportPath& path, const SvgOptions& opt = {}) {
  if (inst.dim() != 2) throw Unsupported("rendering needs planar (dimension 2) coordinates");
  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x, hi_x = -lo_x, hi_y = -lo_x;
  auto extend = [&](const Point& p, double r = 0.0) {
    lo_x = std::min(lo_x, p[0] - r);
    hi_x = std::max(hi_x, p[0] + r);
    lo_y = std::min(lo_y, p[1] - r);
    hi_y = std::max(hi_y, p[1] + r);
  };
  for (const auto& f : inst.factories) extend(f);
  for (const auto& h : inst.households) extend(h.position);
  for (const auto& v : path.vertices()) extend(v);
  RegionBalls balls;
  if (opt.regions) {
    if (opt.regions->factory >= inst.k()) throw DomainError("region overlay factory out of range");
    balls = region_balls(inst, opt.regions->factory, opt.regions->demand);
    for (const auto& b : balls.omega) extend(b.center, b.radius);
  }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  const double scale = (opt.width - 2 * opt.margin) / span;
  const double height = (hi_y - lo_y) * scale + 2 * opt.margin;
  auto px = [&](const Point& p) { return opt.margin + (p[0] - lo_x) * scale; };
  auto py = [&](const Point& p) { return height - opt.margin - (p[1] - lo_y) * scale; };

  std::ostringstream s;
  s.precision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << height << "\" viewBox=\"0 0 "
    << opt.width << ' ' << height << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (opt.regions) {
    // Intersection of the omega balls through nested clip paths.
    s << "<defs>\n";
    for (std::size_t b = 0; b + 1 < balls.omega.size(); ++b)
      s << "<clipPath id=\"omega" << b << "\"><circle cx=\"" << px(balls.omega[b].center) << "\" cy=\""
        << py(balls.omega[b].center) << "\" r=\"" << balls.omega[b].radius * scale << "\"/></clipPath>\n";
    s << "</defs>\n";
    s << "<g class=\"never-region\" fill=\"#d62728\" fill-opacity=\"0.15\">\n";
    for (const auto& b : balls.never)
      s << "<circle cx=\"" << px(b.center) << "\" cy=\"" << py(b.center) << "\" r=\"" << b.radius * scale << "\"/>\n";
    s << "</g>\n";
    if (!balls.omega.empty()) {
      s << "<g class=\"omega-region\" fill=\"#1f77b4\" fill-opacity=\"0.25\">";
      for (std::size_t b = 0; b + 1 < balls.omega.size(); ++b) s << "<g clip-path=\"url(#omega" << b << ")\">";
      const auto& last = balls.omega.back();
      s << "<circle cx=\"" << px(last.center) << "\" cy=\"" << py(last.center) << "\" r=\"" << last.radius * scale << "\"/>";
      for (std::size_t b = 0; b + 1 < balls.omega.size(); ++b) s << "</g>";
      s << "</g>\n";
    }
  }
  s << "<g class=\"edges\" stroke=\"#333333\" stroke-linecap=\"round\">\n";
  for (const auto& e : path.edges()) {
    const auto& a = path.vertices()[e.tail];
    const auto& b = path.vertices()[e.head];
    s << "<line x1=\"" << px(a) << "\" y1=\"" << py(a) << "\" x2=\"" << px(b) << "\" y2=\"" << py(b)
      << "\" stroke-width=\"" << stroke_width(e.weight, inst.alpha) << "\"/>\n";
  }
  s << "</g>\n<g class=\"households\" fill=\"#2ca02c\">\n";
  for (const auto& h : inst.households)
    s << "<circle cx=\"" << px(h.position) << "\" cy=\"" << py(h.position) << "\" r=\"" << 2.0 + 10.0 * std::sqrt(h.demand)
      << "\"/>\n";
  s << "</g>\n<g class=\"factories\" fill=\"#9467bd\">\n";
  for (const auto& f : inst.factories)
    s << "<rect x=\"" << px(f) - 6 << "\" y=\"" << py(f) - 6 << "\" width=\"12\" height=\"12\"/>\n";
  s << "</g>\n</svg>\n";
  return s.str();
}

}  // namespace ramified
