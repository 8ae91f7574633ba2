/*
 * synthesis.hpp
 *
 * Controller synthesis for the travelling salesman problem on a finite
 * system: target shrinking fixed point, cost matrix, tour, chained
 * reach-avoid controllers and the runtime switching logic.
 */
#ifndef DTSP_SYNTHESIS_HPP_
#define DTSP_SYNTHESIS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtsp/atsp.hpp"
#include "dtsp/finite_system.hpp"
#include "dtsp/reach_avoid.hpp"
#include "dtsp/state_set.hpp"

namespace dtsp {

/* some shrunk target became empty: from states of target `emptied` the target `source` is unreachable */
class UnsolvableError : public std::runtime_error {
public:
  UnsolvableError(std::size_t source, std::size_t emptied);
  std::size_t source() const noexcept { return m_source; }
  std::size_t emptied() const noexcept { return m_emptied; }

private:
  std::size_t m_source, m_emptied;
};

/* the closed loop left the winning domain of the active controller */
class WinningDomainExit : public std::runtime_error {
public:
  WinningDomainExit(std::size_t stage, StateIndex cell);
  std::size_t stage() const noexcept { return m_stage; }
  StateIndex cell() const noexcept { return m_cell; }

private:
  std::size_t m_stage;
  StateIndex m_cell;
};

struct ShrinkResult {
  std::vector<StateSet> shrunk;         // A'_1..A'_N
  std::vector<ValueFunction> values;    // V_i of Reach(A'_i, 0)
  std::size_t value_solves = 0;
};

/**
 * @brief fixed point of the target shrinking loop (FIFO queue)
 *
 * Afterwards V_i(p) < inf for all i != j and p in A'_j. Throws
 * UnsolvableError when a target runs empty.
 */
ShrinkResult shrink_fixed_point(const FiniteSystem& sys, const std::vector<StateSet>& targets);

/* C(i,j) = min{ V_j(p) | p in A'_i }; diagonal 0 */
ATSPInstance build_cost_matrix(const std::vector<StateSet>& shrunk, const std::vector<ValueFunction>& values);

enum class TspBackend { Exact, Heuristic, External };

struct SynthesisOptions {
  TspBackend backend = TspBackend::Exact;
  std::string external_solver;           // binary for TspBackend::External
  std::string work_dir = ".";            // scratch files of the external solver
  std::uint64_t seed = 1;                // heuristic seed
  bool naive_chaining = false;           // Reach(A'_Tour(i), 0) instead of chained terminal costs
  /* when set, use this tour instead of solving the TSP (1-based labels) */
  std::vector<std::size_t> forced_tour;
};

/**
 * @brief output of the synthesis algorithm
 *
 * controllers[i] belongs to tour position i (0-based): it solves
 * Reach(A'_{tour[i]}, V_{tour[i+1]}) (or G0 = 0 in naive mode).
 * controller_values[i] is its value function.
 **/
struct SynthesisResult {
  std::uint64_t grid_hash = 0;
  std::size_t num_states = 0;
  bool naive_chaining = false;
  std::vector<StateSet> shrunk;
  Tour tour;
  ATSPInstance cost_matrix;
  std::vector<MemorylessController> controllers;
  std::vector<ValueFunction> value_functions;
  std::vector<ValueFunction> controller_values;

  std::size_t num_targets() const noexcept { return shrunk.size(); }
};

SynthesisResult synthesize(const FiniteSystem& sys, const std::vector<StateSet>& targets,
                           const SynthesisOptions& options = {});

/* solves the TSP (N, C) with the configured backend */
Tour solve_tour(const ATSPInstance& inst, const SynthesisOptions& options);

/* chained (or naive) controllers for a given tour; reuses the value functions */
void chain_controllers(const FiniteSystem& sys, SynthesisResult& result);

/* stage k in [1, N+1]; complete once the final stop fired */
struct SwitchingState {
  std::size_t stage = 1;
  bool complete = false;
};

struct SwitchingOutput {
  InputIndex input = 0;
  bool stop = false;  // overall stopping signal v
};

/**
 * @brief one evaluation of the switching controller at abstract state `cell`
 *
 * While the active controller signals stop and k <= N the stage advances. At
 * stage N+1 the position-1 controller (target A'_1) runs and its stop
 * completes the mission. Throws WinningDomainExit where the active
 * controller is undefined.
 */
SwitchingOutput switching_step(const SynthesisResult& result, SwitchingState& state, StateIndex cell);

/* controller index used at stage k */
std::size_t controller_for_stage(const SynthesisResult& result, std::size_t stage);

/**
 * @brief worst-case total cost of the switching closed loop on the abstraction
 *
 * Entry p is the maximal accumulated running cost over all abstract behaviours
 * from p at stage 1 until the final stop (+inf outside the winning domain).
 */
ValueFunction abstract_closed_loop_cost(const FiniteSystem& sys, const SynthesisResult& result);

/*
 * binary result file: magic "DTSPCTRL", version, grid hash, num_states, N,
 * naive flag, tour labels, per-target bitsets, cost matrix, per-position
 * controllers (input u16, flags u8 per state), optional value functions and
 * controller values (f64, +inf as IEEE infinity). Integers u64 LE unless noted.
 */
void save_result(const std::string& path, const SynthesisResult& result, bool with_values = true);
SynthesisResult load_result(const std::string& path);

}  // namespace dtsp

#endif  // DTSP_SYNTHESIS_HPP_
