/*
 * abstraction.hpp
 *
 * Finite abstraction (X', U', F') of a sampled system on a uniform grid.
 */
#ifndef DTSP_ABSTRACTION_HPP_
#define DTSP_ABSTRACTION_HPP_

#include <functional>
#include <string>
#include <vector>

#include "dtsp/cost.hpp"
#include "dtsp/finite_system.hpp"
#include "dtsp/grid.hpp"
#include "dtsp/sampled_dynamics.hpp"

namespace dtsp {

/* finite sample of the input set U; the position in `values` is the abstract input index */
struct InputSample {
  std::vector<Vec> values;
};

/* counts[i] evenly spaced values per component including both bounds, row-major */
InputSample grid_inputs(const Vec& lower, const Vec& upper, const std::vector<std::size_t>& counts);

/**
 * @brief abstract running cost g'(c, y, u)
 *
 * obstacle(cell) marks cells whose outgoing steps cost +inf. finite_cost gets
 * the cell box, the input and the overapproximated successor box so that
 * successor-dependent costs can be bounded from above.
 **/
struct AbstractRunningCost {
  std::function<bool(StateIndex cell, const IntervalBox& box)> obstacle;
  std::function<Cost(const IntervalBox& cell, const Vec& u, const IntervalBox& successor)> finite_cost;
};

/**
 * @brief builds the abstraction with the sink as state grid.sink()
 *
 * For every cell c and input k the successors are the cells meeting the
 * growth-bound box of (c, u_k), plus the sink if the box leaves the domain.
 * The sink is absorbing with cost +inf. Work is split over `threads` workers
 * (0 = hardware concurrency); the result does not depend on the split.
 */
FiniteSystem build_abstraction(const VectorFieldSpec& spec, const GrowthBoundModel& model,
                               const UniformGrid& grid, const InputSample& inputs,
                               const AbstractRunningCost& cost, unsigned threads = 0);

struct AbstractionCache {
  UniformGrid grid;
  InputSample inputs;
  FiniteSystem system;
};

/*
 * binary cache file: magic "DTSPABS1", grid (n, lower, eta, counts, periodic flags,
 * periods), input sample (count, dim, values), num_states, num_inputs, offset
 * table, successor count, flat successors, per-pair costs. Integers u64 LE,
 * reals f64 LE.
 */
void save_abstraction(const std::string& path, const UniformGrid& grid, const InputSample& inputs,
                      const FiniteSystem& system);
AbstractionCache load_abstraction(const std::string& path);

}  // namespace dtsp

#endif  // DTSP_ABSTRACTION_HPP_
