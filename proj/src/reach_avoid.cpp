#include "dtsp/reach_avoid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <utility>

#include "dtsp/errors.hpp"

namespace dtsp {

ReachAvoidProblem ReachAvoidProblem::zero_terminal(const FiniteSystem& sys, StateSet target) {
  return with_terminal(sys, std::move(target), std::vector<Cost>(sys.num_states(), 0.0));
}

ReachAvoidProblem ReachAvoidProblem::with_terminal(const FiniteSystem& sys, StateSet target,
                                                   std::vector<Cost> g0) {
  ReachAvoidProblem p{&sys, std::move(target), std::move(g0)};
  p.validate();
  return p;
}

void ReachAvoidProblem::validate() const {
  if (!system)
    throw UsageError("ReachAvoidProblem: no system");
  if (target.universe() != system->num_states() || terminal_cost.size() != system->num_states())
    throw UsageError("ReachAvoidProblem: target or terminal cost size differs from the state count");
  bool finite = false;
  target.for_each([&](StateIndex x) {
    if (std::isnan(terminal_cost[x]) || terminal_cost[x] < 0)
      throw UsageError("ReachAvoidProblem: terminal cost must be nonnegative");
    finite = finite || is_finite(terminal_cost[x]);
  });
  if (target.empty())
    throw UsageError("ReachAvoidProblem: empty target set");
  if (!finite)
    throw UsageError("ReachAvoidProblem: terminal cost is infinite on the whole target");
}

Cost q_value(const FiniteSystem& sys, const ValueFunction& V, StateIndex x, InputIndex u) {
  const PairIndex p = sys.pair(x, u);
  const auto succ = sys.successors_of_pair(p);
  Cost worst = 0;
  for (std::size_t i = 0; i < succ.size(); ++i) {
    const Cost c = add_cost(sys.edge_cost(p, i), V[succ[i]]);
    if (c > worst) {
      worst = c;
      if (worst == kInfinity)
        break;
    }
  }
  return worst;
}

ValueFunction bellman_backup(const ReachAvoidProblem& problem, const ValueFunction& V) {
  const FiniteSystem& sys = *problem.system;
  if (V.size() != sys.num_states())
    throw UsageError("bellman_backup: value function has wrong size");
  ValueFunction out(V.size());
  for (StateIndex x = 0; x < sys.num_states(); ++x) {
    Cost best = problem.stop_cost(x);
    for (InputIndex u = 0; u < sys.num_inputs(); ++u)
      best = std::min(best, q_value(sys, V, x, u));
    out[x] = best;
  }
  return out;
}

MemorylessController extract_controller(const ReachAvoidProblem& problem, const ValueFunction& V) {
  const FiniteSystem& sys = *problem.system;
  MemorylessController mu;
  mu.input.assign(sys.num_states(), 0);
  mu.flags.assign(sys.num_states(), 0);
  for (StateIndex x = 0; x < sys.num_states(); ++x) {
    if (!is_finite(V[x]))
      continue;
    mu.flags[x] = MemorylessController::kDefined;
    if (problem.stop_cost(x) <= V[x]) {
      mu.flags[x] |= MemorylessController::kStop;
      continue;
    }
    Cost best = kInfinity;
    InputIndex arg = 0;
    for (InputIndex u = 0; u < sys.num_inputs(); ++u) {
      const Cost q = q_value(sys, V, x, u);
      if (q < best) {
        best = q;
        arg = u;
      }
    }
    mu.input[x] = arg;
  }
  return mu;
}

namespace {

ValueFunction label_setting(const ReachAvoidProblem& problem) {
  const FiniteSystem& sys = *problem.system;
  const std::size_t n = sys.num_states();
  const std::size_t m = sys.num_inputs();

  ValueFunction label(n, kInfinity);
  std::vector<char> done(n, 0);
  std::vector<std::uint32_t> pending(n * m);
  std::vector<Cost> acc(n * m, 0.0);
  for (PairIndex p = 0; p < n * m; ++p)
    pending[p] = static_cast<std::uint32_t>(sys.offsets()[p + 1] - sys.offsets()[p]);

  using Entry = std::pair<Cost, StateIndex>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  problem.target.for_each([&](StateIndex x) {
    const Cost g0 = problem.terminal_cost[x];
    if (is_finite(g0)) {
      label[x] = g0;
      heap.emplace(g0, x);
    }
  });

  const bool per_edge = sys.has_edge_costs();
  while (!heap.empty()) {
    const auto [v, y] = heap.top();
    heap.pop();
    if (done[y] || v > label[y])
      continue;
    done[y] = 1;
    for (PairIndex p : sys.predecessors(y)) {
      const auto x = static_cast<StateIndex>(p / m);
      if (done[x])
        continue;
      Cost g;
      if (per_edge) {
        const auto succ = sys.successors_of_pair(p);
        const auto i = static_cast<std::size_t>(std::lower_bound(succ.begin(), succ.end(), y) - succ.begin());
        g = sys.edge_cost(p, i);
      } else {
        g = sys.edge_cost(p, 0);
      }
      acc[p] = std::max(acc[p], add_cost(g, v));
      /* the hyperedge is settled once its last successor is final */
      if (--pending[p] == 0 && acc[p] < label[x]) {
        label[x] = acc[p];
        heap.emplace(acc[p], x);
      }
    }
  }
  return label;
}

ValueFunction gauss_seidel(const ReachAvoidProblem& problem) {
  const FiniteSystem& sys = *problem.system;
  const std::size_t n = sys.num_states();
  ValueFunction V(n, kInfinity);
  for (StateIndex x = 0; x < n; ++x)
    V[x] = problem.stop_cost(x);
  /* iterates decrease monotonically and are exact after at most n+1 sweeps */
  for (std::size_t sweep = 0; sweep <= n + 1; ++sweep) {
    bool changed = false;
    for (StateIndex x = 0; x < n; ++x) {
      Cost best = problem.stop_cost(x);
      for (InputIndex u = 0; u < sys.num_inputs(); ++u)
        best = std::min(best, q_value(sys, V, x, u));
      if (best < V[x]) {
        if (!is_finite(V[x]) || V[x] - best > 1e-12)
          changed = true;
        V[x] = best;
      }
    }
    if (!changed)
      break;
  }
  return V;
}

}  // namespace

ReachAvoidSolution solve(const ReachAvoidProblem& problem, SolveMethod method) {
  problem.validate();
  const FiniteSystem& sys = *problem.system;
  const bool positive = !(sys.min_finite_cost() <= 0);
  if (method == SolveMethod::Automatic)
    method = positive ? SolveMethod::LabelSetting : SolveMethod::ValueIteration;
  if (method == SolveMethod::LabelSetting && !positive)
    throw UsageError("solve: label setting requires strictly positive finite step costs");

  ReachAvoidSolution sol;
  sol.value = method == SolveMethod::LabelSetting ? label_setting(problem) : gauss_seidel(problem);
  sol.controller = extract_controller(problem, sol.value);
  return sol;
}

StateSet restrict_infinite(const ValueFunction& V) {
  StateSet s(V.size());
  for (StateIndex x = 0; x < V.size(); ++x)
    if (!is_finite(V[x]))
      s.insert(x);
  return s;
}

}  // namespace dtsp
