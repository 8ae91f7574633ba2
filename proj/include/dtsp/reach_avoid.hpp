/*
 * reach_avoid.hpp
 *
 * Quantitative reach-avoid problems Reach(A, G0) on finite systems: worst-case
 * optimal cost-to-go and memoryless controllers with stopping signal.
 */
#ifndef DTSP_REACH_AVOID_HPP_
#define DTSP_REACH_AVOID_HPP_

#include <cstdint>
#include <vector>

#include "dtsp/cost.hpp"
#include "dtsp/finite_system.hpp"
#include "dtsp/state_set.hpp"

namespace dtsp {

using ValueFunction = std::vector<Cost>;

/**
 * @brief Reach(A, G0): stop inside A paying G0, pay g for every step before
 *
 * terminal_cost has one entry per state; entries outside the target are
 * ignored (treated as +inf).
 **/
struct ReachAvoidProblem {
  const FiniteSystem* system = nullptr;
  StateSet target;
  std::vector<Cost> terminal_cost;

  /* G0 = 0 on the target */
  static ReachAvoidProblem zero_terminal(const FiniteSystem& sys, StateSet target);
  /* G0 = V restricted to the target */
  static ReachAvoidProblem with_terminal(const FiniteSystem& sys, StateSet target, std::vector<Cost> g0);

  Cost stop_cost(StateIndex x) const noexcept {
    return target.contains(x) ? terminal_cost[x] : kInfinity;
  }
  /* throws UsageError: empty target, size mismatch, no finite G0 on the target */
  void validate() const;
};

/**
 * @brief per-state choice of input or stop
 *
 * flags bit 0: stop, bit 1: defined (value finite). Undefined states carry
 * input 0 and stop 0.
 **/
struct MemorylessController {
  static constexpr std::uint8_t kStop = 1;
  static constexpr std::uint8_t kDefined = 2;

  std::vector<InputIndex> input;
  std::vector<std::uint8_t> flags;

  bool stop(StateIndex x) const noexcept { return flags[x] & kStop; }
  bool defined(StateIndex x) const noexcept { return flags[x] & kDefined; }
  std::size_t size() const noexcept { return flags.size(); }

  friend bool operator==(const MemorylessController&, const MemorylessController&) = default;
};

struct ReachAvoidSolution {
  ValueFunction value;
  MemorylessController controller;
};

enum class SolveMethod { Automatic, LabelSetting, ValueIteration };

/* max over successors y of g(x,y,u) + V(y), saturating */
Cost q_value(const FiniteSystem& sys, const ValueFunction& V, StateIndex x, InputIndex u);

/* V'(x) = min{ stop(x), min_u q_value(x,u) } */
ValueFunction bellman_backup(const ReachAvoidProblem& problem, const ValueFunction& V);

/**
 * @brief optimal value function and controller
 *
 * Automatic uses label setting when every finite step cost is positive and
 * Gauss-Seidel value iteration otherwise. LabelSetting throws UsageError on
 * zero-cost edges.
 */
ReachAvoidSolution solve(const ReachAvoidProblem& problem, SolveMethod method = SolveMethod::Automatic);

/* controller attaining V: stop where V = G0 on the target, else the lowest minimizing input */
MemorylessController extract_controller(const ReachAvoidProblem& problem, const ValueFunction& V);

/* {x : V(x) = inf} */
StateSet restrict_infinite(const ValueFunction& V);

}  // namespace dtsp

#endif  // DTSP_REACH_AVOID_HPP_
