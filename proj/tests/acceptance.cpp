/*
 * Acceptance suite: one PASS/FAIL line per criterion.
 *
 *   acceptance            run all criteria
 *   acceptance 1 3 7      run a subset
 */
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dtsp/atsp.hpp"
#include "dtsp/reach_avoid.hpp"
#include "dtsp/scenario.hpp"
#include "dtsp/simulation.hpp"
#include "dtsp/synthesis.hpp"
#include "oracles.hpp"

using namespace dtsp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::string scenario_path(const std::string& name) { return std::string(DTSP_SCENARIO_DIR) + "/" + name + ".yaml"; }

/* scenario, abstraction and synthesis result, built once per scenario */
struct Prepared {
  std::unique_ptr<Scenario> scenario;
  FiniteSystem abs;
  SynthesisResult result;
  double seconds = 0;
};

Prepared& prepared(const std::string& name) {
  static std::map<std::string, Prepared> cache;
  auto it = cache.find(name);
  if (it != cache.end())
    return it->second;
  const auto t0 = Clock::now();
  Prepared p;
  p.scenario = std::make_unique<Scenario>(load_scenario(scenario_path(name)));
  p.abs = p.scenario->build_abstraction();
  SynthesisOptions opt;
  opt.backend = p.scenario->config().backend;
  opt.seed = p.scenario->config().seed;
  p.result = synthesize(p.abs, p.scenario->target_sets(p.abs.num_states()), opt);
  p.seconds = seconds_since(t0);
  std::printf("  [%s: %zu states, tour %s, prepared in %.1f s]\n", name.c_str(), p.abs.num_states(),
              p.result.tour.to_string().c_str(), p.seconds);
  return cache.emplace(name, std::move(p)).first->second;
}

Vec center_of(const Vec& lo, const Vec& hi) {
  Vec c(lo.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

DisturbanceSignal nominal(const Scenario& s) {
  const auto& c = s.config();
  return DisturbanceSignal::constant(center_of(c.w_lower, c.w_upper), c.w_lower, c.w_upper);
}

/* in-place Gauss-Seidel sweeps of the reach-avoid Bellman equation until nothing changes */
std::vector<double> gauss_seidel(const ReachAvoidProblem& p) {
  const FiniteSystem& sys = *p.system;
  const std::size_t n = sys.num_states();
  std::vector<double> V(n, kInfinity);
  for (bool changed = true; changed;) {
    changed = false;
    for (StateIndex x = 0; x < n; ++x) {
      double best = p.target.contains(x) ? p.stop_cost(x) : kInfinity;
      for (InputIndex u = 0; u < sys.num_inputs(); ++u) {
        const PairIndex pr = sys.pair(x, u);
        const auto succ = sys.successors_of_pair(pr);
        double worst = 0;
        for (std::size_t i = 0; i < succ.size(); ++i)
          worst = std::max(worst, add_cost(sys.edge_cost(pr, i), V[succ[i]]));
        best = std::min(best, worst);
      }
      if (best != V[x]) {
        V[x] = best;
        changed = true;
      }
    }
  }
  return V;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::size_t mismatches = 0, states = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 199, m = 1 + rng() % 5;
    const FiniteSystem sys = oracle::random_system(rng, n, m);
    std::vector<StateIndex> target;
    for (StateIndex x = 0; x + 1 < n; ++x)
      if (rng() % 8 == 0)
        target.push_back(x);
    if (target.empty())
      target.push_back(0);
    const auto p = ReachAvoidProblem::zero_terminal(sys, StateSet::from_indices(n, target));
    const auto ls = solve(p, SolveMethod::LabelSetting).value;
    const auto ref = gauss_seidel(p);
    for (std::size_t x = 0; x < n; ++x) {
      const bool same = is_finite(ref[x]) ? std::abs(ls[x] - ref[x]) <= 1e-9 : ls[x] == ref[x];
      mismatches += !same;
    }
    states += n;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10.0,
          format("100 systems, %zu states, %zu mismatches, %.2f s (limit 10 s)", states, mismatches, secs)};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2002);
  std::size_t wrong = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t N = 4 + trial % 5;
    const ATSPInstance inst = oracle::random_instance(rng, N);
    wrong += tour_cost(inst, solve_exact(inst)) != oracle::brute_force_tour_cost(inst);
  }
  const double secs = seconds_since(t0);
  return {wrong == 0 && secs < 5.0, format("50 instances N=4..8, %zu differ from brute force, %.2f s (limit 5 s)",
                                           wrong, secs)};
}

Outcome criterion3() {
  std::mt19937_64 rng(3003);
  std::size_t below = 0, within = 0;
  double worst = 1.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ATSPInstance inst = oracle::random_instance(rng, 12);
    const double h = tour_cost(inst, solve_heuristic(inst, static_cast<std::uint64_t>(trial + 1)));
    const double e = tour_cost(inst, solve_exact(inst));
    below += h < e;
    within += h <= 1.15 * e;
    worst = std::max(worst, h / e);
  }
  return {below == 0 && within >= 95,
          format("100 instances N=12, %zu below exact, %zu within 1.15x (need 95), worst ratio %.4f", below, within,
                 worst)};
}

/* one-step samples: random cell, input and start point, disturbance piecewise constant within the period */
std::size_t soundness_samples(const Prepared& p, std::size_t samples, std::uint64_t seed) {
  const Scenario& s = *p.scenario;
  const auto& grid = s.grid();
  const auto& spec = s.dynamics();
  const std::size_t n = grid.dim();
  constexpr int kSubsteps = 60, kPieces = 6;
  std::mt19937_64 rng(seed);
  std::size_t violations = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    const auto c = static_cast<StateIndex>(rng() % grid.num_cells());
    const auto u = static_cast<InputIndex>(rng() % s.inputs().values.size());
    const IntervalBox box = grid.cell_box(c);
    Vec lo(n), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = box.lower(i);
      hi[i] = std::nextafter(box.upper(i), box.lower(i));
    }
    const Vec x0 = oracle::uniform_in(rng, lo, hi);
    std::vector<Vec> pieces;
    for (int j = 0; j < kPieces; ++j)
      pieces.push_back(oracle::uniform_in(rng, spec.w_lower, spec.w_upper));
    const Vec x1 = oracle::flow(spec.rhs, x0, s.inputs().values[u],
                                [&](int step) { return pieces[step * kPieces / kSubsteps]; }, spec.tau, kSubsteps);
    const auto succ = p.abs.successors(c, u);
    if (std::find(succ.begin(), succ.end(), grid.quantize(x1)) == succ.end())
      ++violations;
  }
  return violations;
}

Outcome criterion4() {
  const std::size_t uav = soundness_samples(prepared("uav-mini"), 10000, 4004);
  const std::size_t truck = soundness_samples(prepared("truck-mini"), 10000, 4005);
  return {uav == 0 && truck == 0,
          format("10^4 samples each, violations: uav-mini %zu, truck-mini %zu", uav, truck)};
}

Outcome criterion5() {
  const Prepared& p = prepared("uav-mini");
  const Scenario& s = *p.scenario;
  const auto& c = s.config();
  std::vector<Vec> ws = disturbance_vertices(c.w_lower, c.w_upper);
  ws.insert(ws.begin(), center_of(c.w_lower, c.w_upper));
  const ValueFunction bound = abstract_closed_loop_cost(p.abs, p.result);
  std::size_t runs = 0, bad = 0, above_bound = 0, cells = 0;
  double worst_J = 0;
  p.result.shrunk.front().for_each([&](StateIndex cell) {
    ++cells;
    const Vec x0 = s.grid().cell_box(cell).center;
    for (const auto& w : ws) {
      const auto rec = simulate_closed_loop(p.result, s, nullptr, x0,
                                            DisturbanceSignal::constant(w, c.w_lower, c.w_upper), 100000);
      const Cost J = evaluate_total_cost(rec, s);
      ++runs;
      if (!rec.terminated() || !check_condition_star(rec, s) || !is_finite(J))
        ++bad;
      else
        worst_J = std::max(worst_J, J);
      above_bound += J > bound[cell] + 1e-9;
    }
  });
  return {bad == 0 && above_bound == 0,
          format("%zu cells of A'_1 x %zu disturbances = %zu runs, %zu failed, %zu above the abstract bound, max J %.3f",
                 cells, ws.size(), runs, bad, above_bound, worst_J)};
}

Outcome criterion6() {
  const Prepared& p = prepared("uav-mini");
  const Scenario& s = *p.scenario;
  SynthesisResult naive = p.result;
  naive.naive_chaining = true;
  chain_controllers(p.abs, naive);
  const auto d = nominal(s);
  std::size_t cells = 0, worse = 0, infinite = 0;
  double sum = 0, sum_naive = 0, rel = 0;
  p.result.shrunk.front().for_each([&](StateIndex cell) {
    const Vec x0 = s.grid().cell_box(cell).center;
    const Cost J = evaluate_total_cost(simulate_closed_loop(p.result, s, nullptr, x0, d, 100000), s);
    const Cost Jn = evaluate_total_cost(simulate_closed_loop(naive, s, nullptr, x0, d, 100000), s);
    ++cells;
    if (!is_finite(J) || !is_finite(Jn)) {
      ++infinite;
      return;
    }
    worse += J > Jn;
    sum += J;
    sum_naive += Jn;
    rel += (Jn - J) / Jn;
  });
  const double k = static_cast<double>(cells - infinite);
  return {worse == 0 && infinite == 0,
          format("%zu start cells, chained worse in %zu, mean J chained %.3f naive %.3f, mean improvement %.3f (%.1f%%)",
                 cells, worse, sum / k, sum_naive / k, (sum_naive - sum) / k, 100.0 * rel / k)};
}

Outcome criterion7() {
  const auto t0 = Clock::now();
  const Prepared& p = prepared("truck-mini");
  const Scenario& s = *p.scenario;
  const auto d = nominal(s);
  auto J_of = [&](const SynthesisResult& r) {
    return evaluate_total_cost(simulate_closed_loop(r, s, nullptr, s.config().start, d, 100000), s);
  };
  const Cost heuristic = J_of(p.result);
  Cost best = kInfinity;
  std::string best_tour;
  std::vector<std::size_t> perm{2, 3, 4, 5};
  std::size_t tours = 0;
  do {
    SynthesisResult r = p.result;
    std::vector<std::size_t> labels{1};
    labels.insert(labels.end(), perm.begin(), perm.end());
    labels.push_back(1);
    r.tour = tour_from_labels(labels);
    chain_controllers(p.abs, r);
    const Cost J = J_of(r);
    ++tours;
    if (J < best) {
      best = J;
      best_tour = r.tour.to_string();
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double secs = seconds_since(t0);
  return {is_finite(heuristic) && heuristic <= best && tours == 24 && secs < 1800,
          format("heuristic tour %s J %.4f, best of %zu tours %s J %.4f, %.0f s (limit 1800 s)",
                 p.result.tour.to_string().c_str(), heuristic, tours, best_tour.c_str(), best, secs)};
}

/* J from the CSV columns alone, summing the step costs in order */
Outcome criterion8() {
  std::size_t failures = 0;
  std::vector<std::string> notes;
  for (const char* name : {"uav-mini", "truck-mini"}) {
    const Prepared& p = prepared(name);
    const Scenario& s = *p.scenario;
    const auto& c = s.config();
    const std::size_t n = c.state_dim(), m = c.input_dim();
    const auto rec = simulate_closed_loop(p.result, s, nullptr, c.start, nominal(s), 100000);
    const Cost J = evaluate_total_cost(rec, s);
    failures += !is_finite(J);

    /* v never 1: J infinite, whatever the prefix */
    for (std::size_t steps : {0, 1, 5, 20}) {
      const auto cut = simulate_closed_loop(p.result, s, nullptr, c.start, nominal(s), steps);
      failures += cut.terminated() || evaluate_total_cost(cut, s) != kInfinity;
    }
    /* condition (*) broken: drop the states inside each non-depot target, or stop early */
    for (std::size_t i = 1; i < s.num_targets(); ++i) {
      TrajectoryRecord broken = rec;
      for (auto& st : broken.steps)
        if (s.in_target(i, st.x))
          st.x = c.domain_lower;  // outside every target box of this layout
      failures += check_condition_star(broken, s) || evaluate_total_cost(broken, s) != kInfinity;
    }
    TrajectoryRecord early = rec;
    early.T = 0;
    failures += evaluate_total_cost(early, s) != kInfinity;

    /* CSV export and re-accumulation, bit for bit */
    const fs::path path = fs::temp_directory_path() / (std::string("dtsp_acceptance_") + name + ".csv");
    export_trajectory(rec, n, m, path.string());
    const TrajectoryRecord back = import_trajectory(path.string());
    fs::remove(path);
    Cost from_csv = 0;
    for (std::size_t t = 0; t < *back.T; ++t)
      from_csv += back.steps[t].step_cost;
    const Cost recomputed = evaluate_total_cost(back, s);
    const bool exact = back.T == rec.T && from_csv == J && recomputed == J && back.steps[*back.T].acc_cost == J;
    failures += !exact;
    notes.push_back(format("%s J %.17g (%s)", name, J, exact ? "bit-exact" : "MISMATCH"));
  }
  return {failures == 0, format("%zu failed checks; %s; %s", failures, notes[0].c_str(), notes[1].c_str())};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion9() {
  const fs::path root = fs::temp_directory_path() / "dtsp_acceptance_determinism";
  fs::remove_all(root);
  const std::string config = scenario_path("uav-mini");
  std::size_t failed_runs = 0;
  for (const char* dir : {"run-a", "run-b"}) {
    const fs::path out = root / dir;
    fs::create_directories(out);
    for (const char* cmd : {"synth", "simulate"}) {
      const std::string line = std::string("\"") + DTSP_CLI + "\" " + cmd + " \"" + config + "\" --out-dir \"" +
                               out.string() + "\" --seed 7 > \"" + (out / cmd).string() + ".log\" 2>&1";
      failed_runs += std::system(line.c_str()) != 0;
    }
  }
  bool same = failed_runs == 0;
  std::string sizes;
  for (const char* file : {"uav-mini.ctrl", "uav-mini.csv"}) {
    const std::string a = slurp(root / "run-a" / file), b = slurp(root / "run-b" / file);
    same = same && !a.empty() && a == b;
    sizes += format(" %s %zu bytes", file, a.size());
  }
  fs::remove_all(root);
  return {same, format("%zu failed CLI runs,%s, %s", failed_runs, sizes.c_str(), same ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"reach-avoid oracle equivalence", criterion1},
      {"exact ATSP correctness", criterion2},
      {"heuristic ATSP quality", criterion3},
      {"abstraction soundness", criterion4},
      {"coverage from every depot cell", criterion5},
      {"chaining improvement", criterion6},
      {"tour optimality on truck-mini", criterion7},
      {"cost functional semantics", criterion8},
      {"determinism of synth + simulate", criterion9}};

  std::set<int> selected;
  for (int i = 1; i < argc; ++i)
    selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!selected.empty() && !selected.count(id))
      continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d %s: %s | %s\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail.c_str());
  }
  return failures == 0 ? 0 : 1;
}
