#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ramified/allocation.hpp"
#include "ramified/errors.hpp"
#include "ramified/measures.hpp"
#include "ramified/transport_path.hpp"

namespace ramified {

using json = nlohmann::json;

/// Malformed JSON or schema violation, with a 1-based source position when known.
class ParseError : public InvalidInstance {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : InvalidInstance(line ? what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")" : what),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_, column_;
};

namespace detail {

inline json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is the 1-based offset of the offending character.
    std::size_t line = 1, column = 1;
    const std::size_t stop = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string msg = e.what();
    if (auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
    throw ParseError("malformed JSON: " + msg, line, column);
  }
}

inline void require_keys(const json& j, const std::set<std::string>& allowed, const std::set<std::string>& required,
                         const std::string& where) {
  if (!j.is_object()) throw ParseError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ParseError("unknown key '" + key + "' in " + where);
  for (const auto& key : required)
    if (!j.contains(key)) throw ParseError("missing key '" + key + "' in " + where);
}

inline double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ParseError(what + " must be a number");
  return j.get<double>();
}

inline Point point(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array of coordinates");
  std::vector<double> c;
  for (const auto& v : j) c.push_back(number(v, what));
  return Point(std::move(c));
}

inline json point_json(const Point& p) { return json(p.coords()); }

}  // namespace detail

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInstance("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInstance("cannot write file '" + path + "'");
  out << text;
}

/// Instance from parsed JSON. Structure is validated unless `check` is false;
/// demand normalization never is.
inline Instance instance_from_json(const json& j, bool check = true) {
  detail::require_keys(j, {"alpha", "dimension", "factories", "households"}, {"alpha", "factories", "households"},
                       "instance");
  Instance inst;
  inst.alpha = detail::number(j.at("alpha"), "alpha");
  if (!j.at("factories").is_array()) throw ParseError("factories must be an array");
  for (const auto& f : j.at("factories")) inst.factories.push_back(detail::point(f, "factory position"));
  if (!j.at("households").is_array()) throw ParseError("households must be an array");
  for (const auto& h : j.at("households")) {
    detail::require_keys(h, {"position", "demand"}, {"position", "demand"}, "household");
    inst.households.push_back({detail::point(h.at("position"), "household position"), detail::number(h.at("demand"), "demand")});
  }
  if (j.contains("dimension")) {
    const auto& d = j.at("dimension");
    if (!d.is_number_integer() || d.get<long long>() < 1) throw ParseError("dimension must be a positive integer");
    const auto dim = static_cast<std::size_t>(d.get<long long>());
    for (const auto& f : inst.factories)
      if (f.dim() != dim) throw InvalidInstance("factory coordinates do not match the declared dimension");
    for (const auto& h : inst.households)
      if (h.position.dim() != dim) throw InvalidInstance("household coordinates do not match the declared dimension");
  }
  if (check) validate_structure(inst);
  return inst;
}

inline Instance parse_instance(const std::string& text, bool check = true) {
  return instance_from_json(detail::parse_json(text), check);
}

inline json instance_to_json(const Instance& inst) {
  json hs = json::array();
  for (const auto& h : inst.households) hs.push_back({{"position", detail::point_json(h.position)}, {"demand", h.demand}});
  json fs = json::array();
  for (const auto& f : inst.factories) fs.push_back(detail::point_json(f));
  return {{"alpha", inst.alpha}, {"dimension", inst.dim()}, {"factories", fs}, {"households", hs}};
}

inline json path_to_json(const TransportPath& p) {
  json vs = json::array();
  for (const auto& v : p.vertices()) vs.push_back(detail::point_json(v));
  json es = json::array();
  for (const auto& e : p.edges()) es.push_back({{"tail", e.tail}, {"head", e.head}, {"weight", e.weight}});
  return {{"vertices", vs}, {"edges", es}};
}

inline TransportPath path_from_json(const json& j) {
  detail::require_keys(j, {"vertices", "edges"}, {"vertices", "edges"}, "path");
  std::vector<Point> vs;
  for (const auto& v : j.at("vertices")) vs.push_back(detail::point(v, "path vertex"));
  std::vector<Edge> es;
  for (const auto& e : j.at("edges")) {
    detail::require_keys(e, {"tail", "head", "weight"}, {"tail", "head", "weight"}, "edge");
    if (!e.at("tail").is_number_unsigned() || !e.at("head").is_number_unsigned())
      throw ParseError("edge endpoints must be non-negative integers");
    es.push_back({e.at("tail").get<std::size_t>(), e.at("head").get<std::size_t>(), detail::number(e.at("weight"), "weight")});
  }
  return TransportPath(std::move(vs), std::move(es));
}

/// Everything a solve run produces, as stored on disk.
struct ResultFile {
  Instance instance;
  AssignmentMap map;
  double cost = 0.0;
  std::vector<double> loads;
  TransportPath path;
  std::vector<std::string> state_rows;
  std::string exactness = "exact";
  bool greedy_determined = false;
  // Solver settings and counters.
  std::size_t exact_threshold = 7;
  double tol = 1e-9;
  std::size_t max_candidates = 1000000;
  bool prune = true;
  std::size_t fixpoint_iterations = 0;
  std::size_t candidates = 0;
  std::size_t evaluated = 0;
  std::size_t sub_solves = 0;

  friend bool operator==(const ResultFile&, const ResultFile&) = default;
};

inline ResultFile make_result_file(const Instance& inst, const AllocationResult& r, const AllocationOptions& opt) {
  ResultFile f;
  f.instance = inst;
  f.map = r.map;
  f.cost = r.cost;
  f.loads = r.loads;
  f.path = r.path;
  f.state_rows = r.state.to_rows();
  f.exactness = to_string(r.exactness);
  f.greedy_determined = r.greedy_determined;
  f.exact_threshold = opt.exact_threshold;
  f.tol = opt.tol;
  f.max_candidates = opt.max_candidates;
  f.prune = opt.prune;
  f.fixpoint_iterations = r.fixpoint_iterations;
  f.candidates = r.candidates;
  f.evaluated = r.evaluated;
  f.sub_solves = r.sub_solves;
  return f;
}

inline json result_to_json(const ResultFile& f) {
  json assignment = json::array();
  for (auto i : f.map.factory_of) assignment.push_back(i + 1);
  return {{"instance", instance_to_json(f.instance)},
          {"assignment", assignment},
          {"cost", f.cost},
          {"loads", f.loads},
          {"path", path_to_json(f.path)},
          {"state_matrix", f.state_rows},
          {"exactness", f.exactness},
          {"greedy_determined", f.greedy_determined},
          {"solver",
           {{"exact_threshold", f.exact_threshold},
            {"tol", f.tol},
            {"max_candidates", f.max_candidates},
            {"prune", f.prune},
            {"fixpoint_iterations", f.fixpoint_iterations},
            {"candidates", f.candidates},
            {"evaluated", f.evaluated},
            {"sub_solves", f.sub_solves}}}};
}

inline ResultFile result_from_json(const json& j) {
  detail::require_keys(j,
                       {"instance", "assignment", "cost", "loads", "path", "state_matrix", "exactness",
                        "greedy_determined", "solver"},
                       {"instance", "assignment", "cost", "loads", "path"}, "result");
  ResultFile f;
  f.instance = instance_from_json(j.at("instance"));
  for (const auto& a : j.at("assignment")) {
    if (!a.is_number_unsigned() || a.get<std::size_t>() == 0) throw ParseError("assignment entries must be 1-based factory indices");
    f.map.factory_of.push_back(a.get<std::size_t>() - 1);
  }
  f.cost = detail::number(j.at("cost"), "cost");
  for (const auto& l : j.at("loads")) f.loads.push_back(detail::number(l, "load"));
  f.path = path_from_json(j.at("path"));
  if (j.contains("state_matrix"))
    for (const auto& r : j.at("state_matrix")) f.state_rows.push_back(r.get<std::string>());
  if (j.contains("exactness")) f.exactness = j.at("exactness").get<std::string>();
  if (j.contains("greedy_determined")) f.greedy_determined = j.at("greedy_determined").get<bool>();
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    detail::require_keys(s,
                         {"exact_threshold", "tol", "max_candidates", "prune", "fixpoint_iterations", "candidates",
                          "evaluated", "sub_solves"},
                         {}, "solver");
    f.exact_threshold = s.value("exact_threshold", f.exact_threshold);
    f.tol = s.value("tol", f.tol);
    f.max_candidates = s.value("max_candidates", f.max_candidates);
    f.prune = s.value("prune", f.prune);
    f.fixpoint_iterations = s.value("fixpoint_iterations", f.fixpoint_iterations);
    f.candidates = s.value("candidates", f.candidates);
    f.evaluated = s.value("evaluated", f.evaluated);
    f.sub_solves = s.value("sub_solves", f.sub_solves);
  }
  return f;
}

inline ResultFile parse_result(const std::string& text) { return result_from_json(detail::parse_json(text)); }

/// Invariant violations of a stored result (empty when consistent).
inline std::vector<std::string> check_result(const ResultFile& f) {
  std::vector<std::string> problems;
  const auto& inst = f.instance;
  try {
    validate(inst);
  } catch (const Error& e) {
    problems.push_back(std::string("instance: ") + e.what());
    return problems;
  }
  try {
    f.map.check_against(inst);
  } catch (const Error& e) {
    problems.push_back(std::string("assignment: ") + e.what());
    return problems;
  }
  const auto plan = plan_from_map(f.map, inst);
  const auto loads = f.map.loads(inst);
  if (f.loads.size() != inst.k()) {
    problems.push_back("loads: wrong number of entries");
  } else {
    for (std::size_t i = 0; i < inst.k(); ++i)
      if (std::abs(f.loads[i] - plan.row_sum(i)) > 1e-9) problems.push_back("loads: factory " + std::to_string(i + 1) + " differs from its plan row sum");
  }
  const double cost = m_alpha_cost(f.path, inst.alpha);
  if (std::abs(cost - f.cost) > 1e-9 * std::max(1.0, std::abs(f.cost))) problems.push_back("cost: differs from the path's M_alpha cost");
  try {
    if (!is_compatible(f.path, plan, inst)) problems.push_back("path: not compatible with the assignment plan");
  } catch (const Error& e) {
    problems.push_back(std::string("path: ") + e.what());
  }
  AllocationResult r;
  r.map = f.map;
  r.path = f.path;
  r.loads = loads;
  if (!one_factory_per_component(r, inst)) problems.push_back("path: a connected component does not hold exactly one factory");
  if (!f.state_rows.empty()) {
    try {
      const auto u = StateMatrix::from_rows(f.state_rows);
      if (u.rows() != inst.k() || u.cols() != inst.ell())
        problems.push_back("state matrix: wrong shape");
      else if (!u.admits(f.map))
        problems.push_back("state matrix: excludes the chosen assignment");
    } catch (const Error& e) {
      problems.push_back(std::string("state matrix: ") + e.what());
    }
  }
  return problems;
}

inline json oracle_to_json(const OracleResult& o) {
  json maps = json::array();
  for (const auto& m : o.optimal_maps) {
    json a = json::array();
    for (auto i : m.factory_of) a.push_back(i + 1);
    maps.push_back(a);
  }
  return {{"optimal_maps", maps}, {"cost", o.cost}, {"evaluated", o.evaluated}, {"exact", o.exact}};
}

inline json fixpoint_to_json(const FixpointResult& fp) {
  json trace = json::array();
  for (const auto& u : fp.trace) trace.push_back(u.to_rows());
  return {{"state_matrix", fp.state.to_rows()}, {"iterations", fp.iterations}, {"trace", trace}};
}

}  // namespace ramified
