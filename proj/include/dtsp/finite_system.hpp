/*
 * finite_system.hpp
 *
 * Finite nondeterministic transition systems (X, U, F) annotated with a
 * nonnegative running cost g(x, y, u).
 */
#ifndef DTSP_FINITE_SYSTEM_HPP_
#define DTSP_FINITE_SYSTEM_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dtsp/cost.hpp"
#include "dtsp/state_set.hpp"

namespace dtsp {

using InputIndex = std::uint32_t;
/* flat index of a (state, input) pair: x * num_inputs + u */
using PairIndex = std::uint64_t;

/**
 * @class FiniteSystem
 *
 * @brief immutable compressed transition relation with running costs
 *
 * Successors of all (state, input) pairs are stored in one flat array with an
 * offset table. Costs are either one value per (state, input) pair (the cost
 * does not depend on the successor) or one value per stored edge.
 *
 * A reverse index (for every state the pairs it is a successor of) is built
 * on construction; the label-setting solver walks it backwards.
 **/
class FiniteSystem {
public:
  FiniteSystem() = default;

  /**
   * @param offsets     size num_states*num_inputs+1, nondecreasing, offsets[0]=0
   * @param successors  flat successor array, each pair's list sorted and unique
   * @param pair_cost   size num_states*num_inputs, or empty when edge_cost is given
   * @param edge_cost   size successors.size(), or empty
   *
   * Throws UsageError if the relation is not strict or any index/cost is invalid.
   */
  FiniteSystem(std::size_t num_states, std::size_t num_inputs, std::vector<std::uint64_t> offsets,
               std::vector<StateIndex> successors, std::vector<Cost> pair_cost,
               std::vector<Cost> edge_cost = {});

  std::size_t num_states() const noexcept { return m_num_states; }
  std::size_t num_inputs() const noexcept { return m_num_inputs; }
  std::size_t num_transitions() const noexcept { return m_successors.size(); }

  std::span<const StateIndex> successors(StateIndex x, InputIndex u) const;
  /* g(x, y, u) of the i-th stored successor of (x, u); no range checks */
  Cost edge_cost(PairIndex pair, std::size_t i) const noexcept {
    return m_edge_cost.empty() ? m_pair_cost[pair] : m_edge_cost[m_offsets[pair] + i];
  }
  /* g(x, y, u); +inf if y is not a successor */
  Cost step_cost(StateIndex x, StateIndex y, InputIndex u) const;
  /* max over successors y of g(x, y, u) */
  Cost worst_case_step_cost(StateIndex x, InputIndex u) const;

  bool has_edge_costs() const noexcept { return !m_edge_cost.empty(); }
  /* smallest finite step cost over all edges (+inf if none) */
  Cost min_finite_cost() const noexcept { return m_min_finite_cost; }

  /* unchecked accessors for solver kernels */
  PairIndex pair(StateIndex x, InputIndex u) const noexcept {
    return static_cast<PairIndex>(x) * m_num_inputs + u;
  }
  std::span<const StateIndex> successors_of_pair(PairIndex p) const noexcept {
    return {m_successors.data() + m_offsets[p], m_successors.data() + m_offsets[p + 1]};
  }
  /* all pairs (x, u) with y in F(x, u) */
  std::span<const std::uint32_t> predecessors(StateIndex y) const noexcept {
    return {m_pred.data() + m_pred_offsets[y], m_pred.data() + m_pred_offsets[y + 1]};
  }

  const std::vector<std::uint64_t>& offsets() const noexcept { return m_offsets; }
  const std::vector<StateIndex>& flat_successors() const noexcept { return m_successors; }
  const std::vector<Cost>& pair_costs() const noexcept { return m_pair_cost; }
  const std::vector<Cost>& edge_costs() const noexcept { return m_edge_cost; }

private:
  void check_indices(StateIndex x, InputIndex u) const;

  std::size_t m_num_states = 0;
  std::size_t m_num_inputs = 0;
  std::vector<std::uint64_t> m_offsets{0};
  std::vector<StateIndex> m_successors;
  std::vector<Cost> m_pair_cost;
  std::vector<Cost> m_edge_cost;
  std::vector<std::uint64_t> m_pred_offsets{0};
  std::vector<std::uint32_t> m_pred;  // pair indices
  Cost m_min_finite_cost = kInfinity;
};

/**
 * @class FiniteSystemBuilder
 *
 * @brief accumulates individual transitions (x, u, y, cost) for hand-built graphs
 *
 * Inserting the same (x, u, y) twice keeps the larger cost.
 **/
class FiniteSystemBuilder {
public:
  FiniteSystemBuilder(std::size_t num_states, std::size_t num_inputs);

  FiniteSystemBuilder& add(StateIndex x, InputIndex u, StateIndex y, Cost cost);
  /* adds y -> y under every input with the given cost */
  FiniteSystemBuilder& add_absorbing(StateIndex y, Cost cost = kInfinity);

  /* throws UsageError if some (x, u) has no successor */
  FiniteSystem build() const;

private:
  std::size_t m_num_states;
  std::size_t m_num_inputs;
  std::map<std::pair<PairIndex, StateIndex>, Cost> m_edges;
};

/*
 * plain-text graph format:
 *   states N inputs M
 *   x u y cost        (one line per transition; "inf" allowed; '#' comments)
 */
FiniteSystem read_graph(std::istream& in);
FiniteSystem read_graph_file(const std::string& path);
void write_graph(std::ostream& out, const FiniteSystem& sys);

}  // namespace dtsp

#endif  // DTSP_FINITE_SYSTEM_HPP_
