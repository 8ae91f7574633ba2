/*
 * cost.hpp
 *
 * Extended nonnegative reals [0, inf] used for running costs and values.
 */
#ifndef DTSP_COST_HPP_
#define DTSP_COST_HPP_

#include <limits>

namespace dtsp {

using Cost = double;

/* IEEE +inf is the infinity sentinel; inf + c = inf for every finite c >= 0 */
inline constexpr Cost kInfinity = std::numeric_limits<Cost>::infinity();

inline constexpr bool is_finite(Cost c) noexcept { return c < kInfinity; }

/* saturating sum of two nonnegative costs */
inline constexpr Cost add_cost(Cost a, Cost b) noexcept {
  return (a == kInfinity || b == kInfinity) ? kInfinity : a + b;
}

}  // namespace dtsp

#endif  // DTSP_COST_HPP_
