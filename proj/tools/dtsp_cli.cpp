// dtsp: command-line front end for abstraction, synthesis, simulation and TSP interop.
//
// Exit codes: 0 success, 2 unsolvable, 3 runtime fault, 4 config error, 1 other failures.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dtsp/abstraction.hpp"
#include "dtsp/atsp.hpp"
#include "dtsp/errors.hpp"
#include "dtsp/scenario.hpp"
#include "dtsp/simulation.hpp"
#include "dtsp/synthesis.hpp"

namespace fs = std::filesystem;
using namespace dtsp;

namespace {

constexpr int kExitUnsolvable = 2;
constexpr int kExitFault = 3;
constexpr int kExitConfig = 4;

class RuntimeFault : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string out_dir = ".";
  std::string backend;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool naive = false;
  std::string abstraction;
  std::string controller;
  unsigned threads = 0;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number '" + tok + "'");
    }
    if (used != tok.size())
      throw ConfigError("cannot parse number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

fs::path out_path(const Common& c, const std::string& stem, const std::string& ext) {
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / (stem + ext);
}

std::string ctrl_stem(const Scenario& s, bool naive) {
  return s.config().name + (naive ? "-naive" : "");
}

/* abstraction from --abstraction (checked against the scenario grid) or built from scratch */
FiniteSystem obtain_system(const Scenario& s, const Common& c) {
  if (!c.abstraction.empty()) {
    if (!s.continuous())
      throw ConfigError("--abstraction is meaningless for graph scenarios");
    auto cache = load_abstraction(c.abstraction);
    if (!(cache.grid == s.grid()) || cache.inputs.values != s.inputs().values)
      throw ConfigError("abstraction file '" + c.abstraction + "' does not match the scenario grid or inputs");
    return std::move(cache.system);
  }
  const auto t0 = std::chrono::steady_clock::now();
  FiniteSystem sys = s.build_abstraction(c.threads);
  std::fprintf(stderr, "abstraction: %zu states, %zu inputs, %zu transitions (%.2f s)\n", sys.num_states(),
               sys.num_inputs(), sys.num_transitions(), seconds_since(t0));
  return sys;
}

SynthesisOptions synthesis_options(const Scenario& s, const Common& c) {
  SynthesisOptions opt;
  opt.backend = s.config().backend;
  opt.external_solver = s.config().external_solver;
  if (!c.backend.empty())
    parse_backend(c.backend, opt.backend, opt.external_solver);
  opt.seed = c.seed_given ? c.seed : s.config().seed;
  opt.naive_chaining = c.naive;
  opt.work_dir = c.out_dir;
  return opt;
}

void print_result(const SynthesisResult& r) {
  std::printf("tour %s\n", r.tour.to_string().c_str());
  std::printf("tour cost (matrix) %.6f\n", tour_cost(r.cost_matrix, r.tour));
  for (std::size_t i = 0; i < r.num_targets(); ++i)
    std::printf("A'_%zu: %zu cells\n", i + 1, r.shrunk[i].count());
  std::printf("cost matrix:\n");
  for (std::size_t i = 0; i < r.cost_matrix.n; ++i) {
    for (std::size_t j = 0; j < r.cost_matrix.n; ++j)
      std::printf("%s%10.4f", j ? " " : "", r.cost_matrix(i, j));
    std::printf("\n");
  }
}

int cmd_abstract(const Common& c) {
  Scenario s(load_scenario(c.config));
  if (!s.continuous())
    throw ConfigError("'abstract' needs a continuous scenario");
  const FiniteSystem sys = obtain_system(s, Common{c.config, c.out_dir, "", 0, false, false, "", "", c.threads});
  const auto path = out_path(c, s.config().name, ".abs");
  save_abstraction(path.string(), s.grid(), s.inputs(), sys);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_synth(const Common& c, const std::string& forced_tour, const std::string& output) {
  Scenario s(load_scenario(c.config));
  const FiniteSystem sys = obtain_system(s, c);
  auto opt = synthesis_options(s, c);
  if (!forced_tour.empty())
    for (double v : parse_list(forced_tour))
      opt.forced_tour.push_back(static_cast<std::size_t>(v));
  const auto t0 = std::chrono::steady_clock::now();
  SynthesisResult r = synthesize(sys, s.target_sets(sys.num_states()), opt);
  if (s.continuous())
    r.grid_hash = s.grid().metadata_hash();
  std::fprintf(stderr, "synthesis: %.2f s\n", seconds_since(t0));
  print_result(r);
  const fs::path path = output.empty() ? out_path(c, ctrl_stem(s, c.naive), ".ctrl") : fs::path(output);
  save_result(path.string(), r);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

DisturbanceSignal make_signal(const Scenario& s, const std::string& spec, std::uint64_t seed) {
  const Vec lo = s.continuous() ? s.config().w_lower : Vec{0.0};
  const Vec hi = s.continuous() ? s.config().w_upper : Vec{1.0};
  if (spec == "nominal" || spec.empty()) {
    Vec w(lo.size());
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = 0.5 * (lo[i] + hi[i]);
    return DisturbanceSignal::constant(w, lo, hi);
  }
  if (spec == "random")
    return DisturbanceSignal::random(lo, hi, seed);
  if (spec.starts_with("vertex:")) {
    const auto k = static_cast<std::size_t>(std::stoul(spec.substr(7)));
    const auto v = disturbance_vertices(lo, hi);
    if (k >= v.size())
      throw ConfigError("vertex index out of range (W has " + std::to_string(v.size()) + " vertices)");
    return DisturbanceSignal::constant(v[k], lo, hi);
  }
  const auto w = parse_list(spec);
  if (w.size() != lo.size())
    throw ConfigError("disturbance needs " + std::to_string(lo.size()) + " components");
  try {
    return DisturbanceSignal::constant(Vec(std::span<const double>(w)), lo, hi);
  } catch (const UsageError& e) {
    throw ConfigError(e.what());
  }
}

int cmd_simulate(const Common& c, const std::string& start, const std::string& disturbance, std::size_t trials,
                 std::size_t max_steps) {
  Scenario s(load_scenario(c.config));
  const fs::path ctrl = c.controller.empty() ? out_path(c, ctrl_stem(s, c.naive), ".ctrl") : fs::path(c.controller);
  const SynthesisResult r = load_result(ctrl.string());
  if (s.continuous() && r.grid_hash != s.grid().metadata_hash())
    throw ConfigError("controller file '" + ctrl.string() + "' was synthesized for a different grid");
  std::unique_ptr<FiniteSystem> graph;
  if (!s.continuous())
    graph = std::make_unique<FiniteSystem>(read_graph_file(s.config().graph_path));

  Vec x0;
  if (!start.empty()) {
    const auto v = parse_list(start);
    x0 = Vec(std::span<const double>(v));
  } else if (s.config().start.size() > 0) {
    x0 = s.config().start;
  } else {
    const StateIndex c0 = r.shrunk.front().to_indices().front();
    x0 = s.continuous() ? s.grid().cell_box(c0).center : Vec{static_cast<double>(c0)};
  }
  const std::size_t n = s.continuous() ? s.config().state_dim() : 1;
  const std::size_t m = s.continuous() ? s.config().input_dim() : 1;
  if (x0.size() != n)
    throw ConfigError("start state needs " + std::to_string(n) + " components");

  const std::uint64_t seed = c.seed_given ? c.seed : s.config().seed;
  const auto traj = simulate_closed_loop(r, s, graph.get(), x0, make_signal(s, disturbance, seed), max_steps);
  const auto csv = out_path(c, ctrl_stem(s, c.naive), ".csv");
  export_trajectory(traj, n, m, csv.string());
  std::printf("wrote %s\n", csv.string().c_str());
  if (s.continuous()) {
    const auto svg = out_path(c, ctrl_stem(s, c.naive), ".svg");
    render_svg(traj, s, svg.string());
    std::printf("wrote %s\n", svg.string().c_str());
  }

  if (traj.outcome == TrajectoryRecord::Outcome::Fault)
    throw RuntimeFault("closed loop fault: " + traj.fault);
  if (!traj.terminated())
    throw RuntimeFault("no termination within " + std::to_string(max_steps) + " steps");
  const Cost J = evaluate_total_cost(traj, s, graph.get());
  std::printf("T %zu\ncondition(*) %s\nJ %.17g\n", *traj.T, check_condition_star(traj, s) ? "true" : "false", J);
  if (trials > 0)
    std::printf("performance estimate %.17g\n", estimate_performance(r, s, graph.get(), x0, trials, seed, max_steps));
  return 0;
}

int cmd_tour(const Common& c, const std::string& atsp, double scale, const std::string& tour_out) {
  const ATSPInstance inst = import_tsplib(atsp, scale);
  SynthesisOptions opt;
  if (!c.backend.empty())
    parse_backend(c.backend, opt.backend, opt.external_solver);
  opt.seed = c.seed_given ? c.seed : 1;
  opt.work_dir = c.out_dir;
  const Tour t = solve_tour(inst, opt);
  std::printf("tour %s\ncost %.17g\n", t.to_string().c_str(), tour_cost(inst, t));
  if (!tour_out.empty()) {
    std::ofstream out(tour_out);
    if (!out)
      throw std::runtime_error("cannot write '" + tour_out + "'");
    write_tour(out, t, fs::path(atsp).stem().string());
    std::printf("wrote %s\n", tour_out.c_str());
  }
  return 0;
}

int cmd_export(const Common& c, const std::string& tsplib, const std::string& graph_out, const std::string& csv,
               const std::string& svg) {
  Scenario s(load_scenario(c.config));
  int done = 0;
  if (!tsplib.empty()) {
    const fs::path ctrl =
        c.controller.empty() ? out_path(c, ctrl_stem(s, c.naive), ".ctrl") : fs::path(c.controller);
    const SynthesisResult r = load_result(ctrl.string());
    TsplibOptions opt;
    opt.name = s.config().name;
    export_tsplib(r.cost_matrix, tsplib, opt);
    std::printf("wrote %s\n", tsplib.c_str());
    ++done;
  }
  if (!graph_out.empty()) {
    const FiniteSystem sys = obtain_system(s, c);
    std::ofstream out(graph_out);
    if (!out)
      throw std::runtime_error("cannot write '" + graph_out + "'");
    write_graph(out, sys);
    std::printf("wrote %s\n", graph_out.c_str());
    ++done;
  }
  if (!csv.empty()) {
    if (svg.empty())
      throw ConfigError("--csv needs --svg");
    render_svg(import_trajectory(csv), s, svg);
    std::printf("wrote %s\n", svg.c_str());
    ++done;
  }
  if (done == 0)
    throw ConfigError("nothing to export (use --tsplib, --graph or --csv with --svg)");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dtsp: travelling salesman controller synthesis for sampled systems"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub, bool config) {
    if (config)
      sub->add_option("config", c.config, "scenario YAML file")->required();
    sub->add_option("--out-dir", c.out_dir, "directory for output files");
    sub->add_option("--seed", c.seed, "seed for the heuristic and random disturbances")
        ->each([&](const std::string&) { c.seed_given = true; });
  };

  auto* abstract = app.add_subcommand("abstract", "compute and store the finite abstraction");
  add_common(abstract, true);
  abstract->add_option("--threads", c.threads, "worker threads (0 = all cores)");

  std::string forced_tour, output;
  auto* synth = app.add_subcommand("synth", "synthesize the switching controller");
  add_common(synth, true);
  synth->add_option("--tsp-backend", c.backend, "exact | heuristic | external:<path>");
  synth->add_flag("--naive-chaining", c.naive, "solve Reach(A'_i, 0) instead of chaining terminal costs");
  synth->add_option("--abstraction", c.abstraction, "precomputed abstraction file");
  synth->add_option("--threads", c.threads, "worker threads for the abstraction (0 = all cores)");
  synth->add_option("--tour", forced_tour, "fixed tour as comma separated labels, e.g. 1,3,2,1");
  synth->add_option("-o,--output", output, "controller file (default <out-dir>/<name>.ctrl)");

  std::string start, disturbance = "nominal";
  std::size_t trials = 0, max_steps = 100000;
  auto* simulate = app.add_subcommand("simulate", "simulate the closed loop and evaluate J");
  add_common(simulate, true);
  simulate->add_option("--controller", c.controller, "controller file (default <out-dir>/<name>.ctrl)");
  simulate->add_flag("--naive-chaining", c.naive, "use the naive controller file <name>-naive.ctrl");
  simulate->add_option("--start", start, "initial state, comma separated");
  simulate->add_option("--disturbance", disturbance, "nominal | random | vertex:<k> | w1,w2,...");
  simulate->add_option("--trials", trials, "random disturbance trials for the performance estimate");
  simulate->add_option("--max-steps", max_steps, "step limit");

  std::string atsp, tour_out;
  double scale = 1.0;
  auto* tour = app.add_subcommand("tour", "solve a TSPLIB ATSP instance");
  add_common(tour, false);
  tour->add_option("instance", atsp, "TSPLIB ATSP file")->required();
  tour->add_option("--tsp-backend", c.backend, "exact | heuristic | external:<path>");
  tour->add_option("--scale", scale, "divide matrix entries by this factor");
  tour->add_option("--tour-out", tour_out, "write the tour in TSPLIB TOUR format");

  std::string tsplib, graph_out, csv, svg;
  auto* exp = app.add_subcommand("export", "export cost matrix, abstraction or trajectory plots");
  add_common(exp, true);
  exp->add_option("--controller", c.controller, "controller file (default <out-dir>/<name>.ctrl)");
  exp->add_flag("--naive-chaining", c.naive, "use the naive controller file");
  exp->add_option("--tsplib", tsplib, "write the cost matrix as TSPLIB ATSP");
  exp->add_option("--graph", graph_out, "write the abstraction in the plain-text graph format");
  exp->add_option("--abstraction", c.abstraction, "precomputed abstraction file");
  exp->add_option("--csv", csv, "trajectory CSV to render");
  exp->add_option("--svg", svg, "SVG output for --csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*abstract)
      return cmd_abstract(c);
    if (*synth)
      return cmd_synth(c, forced_tour, output);
    if (*simulate)
      return cmd_simulate(c, start, disturbance, trials, max_steps);
    if (*tour)
      return cmd_tour(c, atsp, scale, tour_out);
    if (*exp)
      return cmd_export(c, tsplib, graph_out, csv, svg);
  } catch (const UnsolvableError& e) {
    std::fprintf(stderr, "unsolvable: %s\n", e.what());
    return kExitUnsolvable;
  } catch (const WinningDomainExit& e) {
    std::fprintf(stderr, "runtime fault: %s\n", e.what());
    return kExitFault;
  } catch (const RuntimeFault& e) {
    std::fprintf(stderr, "runtime fault: %s\n", e.what());
    return kExitFault;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "runtime fault: %s\n", e.what());
    return kExitFault;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
