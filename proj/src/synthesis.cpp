#include "dtsp/synthesis.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <future>
#include <map>
#include <numeric>

#include "dtsp/binary_io.hpp"
#include "dtsp/errors.hpp"

namespace dtsp {

UnsolvableError::UnsolvableError(std::size_t source, std::size_t emptied)
    : std::runtime_error("problem can't be solved: target " + std::to_string(emptied + 1) +
                         " has no state from which target " + std::to_string(source + 1) +
                         " is reachable with finite worst-case cost"),
      m_source(source),
      m_emptied(emptied) {}

WinningDomainExit::WinningDomainExit(std::size_t stage, StateIndex cell)
    : std::runtime_error("closed loop left the winning domain at stage " + std::to_string(stage) +
                         " in abstract state " + std::to_string(cell)),
      m_stage(stage),
      m_cell(cell) {}

ShrinkResult shrink_fixed_point(const FiniteSystem& sys, const std::vector<StateSet>& targets) {
  const std::size_t N = targets.size();
  if (N < 2)
    throw UsageError("shrink_fixed_point: need at least two targets");
  for (std::size_t i = 0; i < N; ++i) {
    if (targets[i].universe() != sys.num_states())
      throw UsageError("shrink_fixed_point: target " + std::to_string(i + 1) + " has wrong universe");
    if (targets[i].empty())
      throw UsageError("shrink_fixed_point: target " + std::to_string(i + 1) + " is empty");
  }

  ShrinkResult r;
  r.shrunk = targets;
  r.values.assign(N, {});
  std::deque<std::size_t> queue;
  std::vector<char> queued(N, 1);
  for (std::size_t i = 0; i < N; ++i)
    queue.push_back(i);

  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    queued[i] = 0;
    r.values[i] = solve(ReachAvoidProblem::zero_terminal(sys, r.shrunk[i])).value;
    ++r.value_solves;
    const StateSet unreachable = restrict_infinite(r.values[i]);
    /* every other target is checked, queued or not, so that V_i is finite on all of them */
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i || !r.shrunk[j].intersects(unreachable))
        continue;
      r.shrunk[j] -= unreachable;
      if (r.shrunk[j].empty())
        throw UnsolvableError(i, j);
      if (!queued[j]) {
        queued[j] = 1;
        queue.push_back(j);
      }
    }
  }
  return r;
}

ATSPInstance build_cost_matrix(const std::vector<StateSet>& shrunk, const std::vector<ValueFunction>& values) {
  const std::size_t N = shrunk.size();
  if (values.size() != N)
    throw UsageError("build_cost_matrix: one value function per target required");
  std::vector<Cost> C(N * N, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      if (i == j)
        continue;
      Cost best = kInfinity;
      shrunk[i].for_each([&](StateIndex p) { best = std::min(best, values[j][p]); });
      if (!is_finite(best))
        throw std::logic_error("build_cost_matrix: infinite entry (" + std::to_string(i + 1) + "," +
                               std::to_string(j + 1) + "); targets are not at the fixed point");
      C[i * N + j] = best;
    }
  return ATSPInstance(N, std::move(C));
}

Tour solve_tour(const ATSPInstance& inst, const SynthesisOptions& options) {
  if (!options.forced_tour.empty()) {
    Tour t = tour_from_labels(options.forced_tour);
    validate_tour(t, inst.n);
    return t;
  }
  switch (options.backend) {
    case TspBackend::Exact:
      return solve_exact(inst);
    case TspBackend::Heuristic:
      return solve_heuristic(inst, options.seed);
    case TspBackend::External:
      return solve_external(inst, options.external_solver, options.work_dir);
  }
  throw UsageError("solve_tour: unknown backend");
}

void chain_controllers(const FiniteSystem& sys, SynthesisResult& result) {
  const std::size_t N = result.num_targets();
  validate_tour(result.tour, N);
  if (result.value_functions.size() != N)
    throw UsageError("chain_controllers: value functions missing");

  /* positions with the same (target, successor target) share one solve */
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> unique;
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  std::vector<std::size_t> job_of_position(N);
  for (std::size_t pos = 0; pos < N; ++pos) {
    const std::size_t a = result.tour.cities[pos];
    const std::size_t b = result.naive_chaining ? N : result.tour.cities[pos + 1];
    auto [it, inserted] = unique.emplace(std::make_pair(a, b), jobs.size());
    if (inserted)
      jobs.emplace_back(a, b);
    job_of_position[pos] = it->second;
  }

  auto run = [&](std::size_t a, std::size_t b) {
    if (b == N)
      return solve(ReachAvoidProblem::zero_terminal(sys, result.shrunk[a]));
    return solve(ReachAvoidProblem::with_terminal(sys, result.shrunk[a], result.value_functions[b]));
  };
  std::vector<std::future<ReachAvoidSolution>> futures;
  for (const auto& [a, b] : jobs)
    futures.push_back(std::async(std::launch::async, run, a, b));
  std::vector<ReachAvoidSolution> solved;
  for (auto& f : futures)
    solved.push_back(f.get());

  result.controllers.assign(N, {});
  result.controller_values.assign(N, {});
  for (std::size_t pos = 0; pos < N; ++pos) {
    result.controllers[pos] = solved[job_of_position[pos]].controller;
    result.controller_values[pos] = solved[job_of_position[pos]].value;
  }
}

SynthesisResult synthesize(const FiniteSystem& sys, const std::vector<StateSet>& targets,
                           const SynthesisOptions& options) {
  if (sys.num_inputs() > 0xffff)
    throw UsageError("synthesize: at most 65535 inputs can be stored in a result file");
  ShrinkResult fixed = shrink_fixed_point(sys, targets);
  SynthesisResult result;
  result.num_states = sys.num_states();
  result.naive_chaining = options.naive_chaining;
  result.shrunk = std::move(fixed.shrunk);
  result.value_functions = std::move(fixed.values);
  result.cost_matrix = build_cost_matrix(result.shrunk, result.value_functions);
  result.tour = solve_tour(result.cost_matrix, options);
  chain_controllers(sys, result);
  return result;
}

std::size_t controller_for_stage(const SynthesisResult& result, std::size_t stage) {
  const std::size_t N = result.num_targets();
  if (stage < 1 || stage > N + 1)
    throw UsageError("stage " + std::to_string(stage) + " outside [1, N+1]");
  return stage == N + 1 ? 0 : stage - 1;
}

SwitchingOutput switching_step(const SynthesisResult& result, SwitchingState& state, StateIndex cell) {
  if (state.complete)
    throw UsageError("switching_step: mission already complete");
  const std::size_t N = result.num_targets();
  while (true) {
    const MemorylessController& mu = result.controllers[controller_for_stage(result, state.stage)];
    if (cell >= mu.size() || !mu.defined(cell))
      throw WinningDomainExit(state.stage, cell);
    if (!mu.stop(cell))
      return {mu.input[cell], false};
    if (state.stage <= N) {
      ++state.stage;
      continue;
    }
    state.complete = true;
    return {0, true};
  }
}

ValueFunction abstract_closed_loop_cost(const FiniteSystem& sys, const SynthesisResult& result) {
  const std::size_t N = result.num_targets();
  const std::size_t n = sys.num_states();
  if (result.controller_values.size() != N)
    throw UsageError("abstract_closed_loop_cost: controller value functions are required");

  ValueFunction next(n, 0.0);  // cost after the final stop
  ValueFunction cur(n);
  std::vector<StateIndex> order(n);
  std::vector<char> known(n);
  for (std::size_t stage = N + 1; stage >= 1; --stage) {
    const std::size_t pos = controller_for_stage(result, stage);
    const MemorylessController& mu = result.controllers[pos];
    const ValueFunction& V = result.controller_values[pos];
    std::iota(order.begin(), order.end(), StateIndex{0});
    std::stable_sort(order.begin(), order.end(), [&](StateIndex a, StateIndex b) { return V[a] < V[b]; });
    std::fill(cur.begin(), cur.end(), kInfinity);
    std::fill(known.begin(), known.end(), 0);
    /* chosen inputs lead to states of strictly smaller value, so ascending order is topological */
    for (StateIndex x : order) {
      if (!mu.defined(x))
        break;
      Cost c;
      if (mu.stop(x)) {
        c = stage <= N ? next[x] : 0.0;
      } else {
        const PairIndex p = sys.pair(x, mu.input[x]);
        const auto succ = sys.successors_of_pair(p);
        c = 0;
        for (std::size_t i = 0; i < succ.size(); ++i) {
          const Cost y = known[succ[i]] ? cur[succ[i]] : kInfinity;
          c = std::max(c, add_cost(sys.edge_cost(p, i), y));
        }
      }
      cur[x] = c;
      known[x] = 1;
    }
    std::swap(cur, next);
    if (stage == 1)
      break;
  }
  return next;
}

namespace {

constexpr std::uint64_t kResultVersion = 1;

}  // namespace

void save_result(const std::string& path, const SynthesisResult& r, bool with_values) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write result file '" + path + "'");
  using namespace bin;
  const std::size_t N = r.num_targets();
  write_magic(out, "DTSPCTRL");
  write_u64(out, kResultVersion);
  write_u64(out, r.grid_hash);
  write_u64(out, r.num_states);
  write_u64(out, N);
  write_u64(out, r.naive_chaining ? 1 : 0);
  for (std::size_t i = 0; i <= N; ++i)
    write_u64(out, r.tour.label(i));
  for (const auto& s : r.shrunk)
    for (auto w : s.words())
      write_u64(out, w);
  for (auto c : r.cost_matrix.cost)
    write_f64(out, c);
  for (const auto& mu : r.controllers)
    for (std::size_t x = 0; x < r.num_states; ++x) {
      write_u16(out, static_cast<std::uint16_t>(mu.input[x]));
      write_u8(out, mu.flags[x]);
    }
  const bool values = with_values && r.value_functions.size() == N && r.controller_values.size() == N;
  write_u64(out, values ? 1 : 0);
  if (values) {
    for (const auto& V : r.value_functions)
      for (auto v : V)
        write_f64(out, v);
    for (const auto& V : r.controller_values)
      for (auto v : V)
        write_f64(out, v);
  }
  if (!out)
    throw std::runtime_error("failed writing result file '" + path + "'");
}

SynthesisResult load_result(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ParseError("cannot open result file '" + path + "'");
  using namespace bin;
  expect_magic(in, "DTSPCTRL");
  if (read_u64(in) != kResultVersion)
    throw ParseError("result file: unsupported version");
  SynthesisResult r;
  r.grid_hash = read_u64(in);
  r.num_states = read_count(in, std::uint64_t{1} << 32, "state count");
  const std::size_t N = read_count(in, 1u << 16, "target count");
  if (N < 2)
    throw ParseError("result file: fewer than two targets");
  r.naive_chaining = read_u64(in) != 0;
  std::vector<std::size_t> labels(N + 1);
  for (auto& l : labels)
    l = read_count(in, N, "tour label");
  try {
    r.tour = tour_from_labels(labels);
  } catch (const UsageError& e) {
    throw ParseError(std::string("result file: ") + e.what());
  }
  const std::size_t words = (r.num_states + 63) / 64;
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<std::uint64_t> w(words);
    for (auto& v : w)
      v = read_u64(in);
    r.shrunk.push_back(StateSet::from_words(r.num_states, std::move(w)));
  }
  std::vector<Cost> C(N * N);
  for (auto& c : C)
    c = read_f64(in);
  r.cost_matrix = ATSPInstance(N, std::move(C));
  r.controllers.assign(N, {});
  for (auto& mu : r.controllers) {
    mu.input.resize(r.num_states);
    mu.flags.resize(r.num_states);
    for (std::size_t x = 0; x < r.num_states; ++x) {
      mu.input[x] = read_u16(in);
      mu.flags[x] = read_u8(in);
    }
  }
  if (read_u64(in)) {
    r.value_functions.assign(N, ValueFunction(r.num_states));
    for (auto& V : r.value_functions)
      for (auto& v : V)
        v = read_f64(in);
    r.controller_values.assign(N, ValueFunction(r.num_states));
    for (auto& V : r.controller_values)
      for (auto& v : V)
        v = read_f64(in);
  }
  return r;
}

}  // namespace dtsp
