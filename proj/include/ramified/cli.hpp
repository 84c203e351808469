#pragma once

#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ramified/allocation.hpp"
#include "ramified/errors.hpp"
#include "ramified/io.hpp"
#include "ramified/state_matrix.hpp"
#include "ramified/svg.hpp"

namespace ramified {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitRefused = 3;

namespace detail {

struct InstanceArgs {
  std::string input;
  bool normalize = false;
  bool merge_duplicates = false;
};

inline void add_instance_args(CLI::App* cmd, InstanceArgs& a) {
  cmd->add_option("--input", a.input, "Instance JSON file")->required();
  cmd->add_flag("--normalize", a.normalize, "Rescale demands to sum to one");
  cmd->add_flag("--merge-duplicates", a.merge_duplicates, "Merge households sharing a location");
}

inline Instance load_instance(const InstanceArgs& a, std::ostream& err) {
  auto inst = parse_instance(read_file(a.input), !a.merge_duplicates);
  if (a.merge_duplicates) {
    auto [merged, warnings] = merge_duplicate_households(std::move(inst));
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    inst = std::move(merged);
  }
  if (a.normalize) inst = normalize(std::move(inst));
  validate(inst);
  return inst;
}

inline void emit(const std::string& out_path, const std::string& text, std::ostream& out) {
  if (out_path.empty() || out_path == "-")
    out << text;
  else
    write_file(out_path, text);
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

/// Command-line entry point. Output goes to `out`/`err` unless a file is named.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Optimal allocation of a household demand to factories under ramified transport cost", "ramified"};
  app.require_subcommand(1);

  detail::InstanceArgs solve_in;
  std::string solve_out;
  AllocationOptions solve_opt;
  bool no_prune = false;
  auto* solve_cmd = app.add_subcommand("solve", "Compute an optimal assignment map and its transport path");
  detail::add_instance_args(solve_cmd, solve_in);
  solve_cmd->add_option("--out", solve_out, "Result JSON file (default: stdout)");
  solve_cmd->add_option("--exact-threshold", solve_opt.exact_threshold, "Largest household group solved exactly")
      ->capture_default_str();
  solve_cmd->add_option("--tol", solve_opt.tol, "Cost tolerance for ties")->capture_default_str();
  solve_cmd->add_option("--max-candidates", solve_opt.max_candidates, "Enumeration budget before beam search")
      ->capture_default_str();
  solve_cmd->add_flag("--no-prune", no_prune, "Skip state-matrix pruning");

  detail::InstanceArgs oracle_in;
  std::string oracle_out;
  std::size_t oracle_threshold = 7;
  auto* oracle_cmd = app.add_subcommand("oracle", "Evaluate every assignment map and report all optimal ones");
  detail::add_instance_args(oracle_cmd, oracle_in);
  oracle_cmd->add_option("--out", oracle_out, "Output JSON file (default: stdout)");
  oracle_cmd->add_option("--exact-threshold", oracle_threshold, "Largest household group solved exactly")
      ->capture_default_str();

  detail::InstanceArgs prune_in;
  std::string prune_out;
  auto* prune_cmd = app.add_subcommand("prune", "Emit the pruned state matrix and its iteration trace");
  detail::add_instance_args(prune_cmd, prune_in);
  prune_cmd->add_option("--out", prune_out, "Output JSON file (default: stdout)");

  std::string render_result, render_out, render_regions;
  auto* render_cmd = app.add_subcommand("render", "Draw a result as SVG");
  render_cmd->add_option("--result", render_result, "Result JSON file")->required();
  render_cmd->add_option("--out", render_out, "SVG file (default: stdout)");
  render_cmd->add_option("--regions", render_regions, "Overlay regions for factory s at demand n, given as s,n");

  std::string check_result_path;
  auto* check_cmd = app.add_subcommand("check", "Validate the invariants of a result file");
  check_cmd->add_option("--result", check_result_path, "Result JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    if (*solve_cmd) {
      const auto inst = detail::load_instance(solve_in, err);
      solve_opt.prune = !no_prune;
      const auto r = solve(inst, solve_opt);
      detail::emit(solve_out, detail::dump(result_to_json(make_result_file(inst, r, solve_opt))), out);
    } else if (*oracle_cmd) {
      const auto inst = detail::load_instance(oracle_in, err);
      detail::emit(oracle_out, detail::dump(oracle_to_json(brute_force_oracle(inst, oracle_threshold))), out);
    } else if (*prune_cmd) {
      const auto inst = detail::load_instance(prune_in, err);
      detail::emit(prune_out, detail::dump(fixpoint_to_json(fixpoint(initial_state(inst), inst))), out);
    } else if (*render_cmd) {
      const auto f = parse_result(read_file(render_result));
      SvgOptions opt;
      if (!render_regions.empty()) {
        const auto comma = render_regions.find(',');
        if (comma == std::string::npos) throw InvalidInstance("--regions expects s,n");
        std::size_t s = 0;
        double n = 0.0;
        try {
          s = std::stoul(render_regions.substr(0, comma));
          n = std::stod(render_regions.substr(comma + 1));
        } catch (const std::exception&) {
          throw InvalidInstance("--regions expects s,n");
        }
        if (s == 0 || s > f.instance.k()) throw InvalidInstance("--regions factory index out of range");
        if (!(n > 0.0)) throw InvalidInstance("--regions demand must be positive");
        opt.regions = RegionOverlay{s - 1, n};
      }
      detail::emit(render_out, render_svg(f.instance, f.path, opt), out);
    } else if (*check_cmd) {
      const auto problems = check_result(parse_result(read_file(check_result_path)));
      for (const auto& p : problems) out << p << '\n';
      if (!problems.empty()) return kExitInvalid;
      out << "ok\n";
    }
  } catch (const Refused& e) {
    err << "refused: " << e.what() << '\n';
    return kExitRefused;
  } catch (const ConvergenceFailure& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitOk;
}

}  // namespace ramified
