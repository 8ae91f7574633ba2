/*
 * sampled_dynamics.hpp
 *
 * Continuous-time dynamics  x' in f(x,u) + W  sampled with period tau, and
 * growth-bound overapproximations of one sampling step.
 */
#ifndef DTSP_SAMPLED_DYNAMICS_HPP_
#define DTSP_SAMPLED_DYNAMICS_HPP_

#include <functional>
#include <vector>

#include "dtsp/vec.hpp"

namespace dtsp {

/* axis-aligned box given by center and (nonnegative) radius */
struct IntervalBox {
  Vec center;
  Vec radius;

  double lower(std::size_t i) const noexcept { return center[i] - radius[i]; }
  double upper(std::size_t i) const noexcept { return center[i] + radius[i]; }
  bool contains(const Vec& p) const noexcept;
};

/**
 * @brief right-hand side, disturbance box and sampling period of a sampled system
 **/
struct VectorFieldSpec {
  std::size_t state_dim = 0;
  std::size_t input_dim = 0;
  std::function<Vec(const Vec& x, const Vec& u)> rhs;
  Vec w_lower;  // disturbance box W, componentwise bounds
  Vec w_upper;
  double tau = 0;
  int substeps = 5;  // fixed RK4 steps per sampling period

  /* throws UsageError on inconsistent dimensions, unordered W, tau <= 0 */
  void validate() const;
  Vec w_center() const;
  Vec w_half_width() const;
};

/**
 * @brief growth bound L(u): n x n matrix (row-major) with nonnegative off-diagonal
 *
 * L must bound the Jacobian of f componentwise, |df_i/dx_j| <= L_ij for
 * i != j and df_i/dx_i <= L_ii, on every state reachable from `cell` within
 * one sampling period. Models that need no state information ignore `cell`.
 **/
struct GrowthBoundModel {
  std::function<std::vector<double>(const Vec& u, const IntervalBox& cell)> matrix;
};

/* one sampling period of x' = f(x,u) + w with w held constant; RK4 with spec.substeps steps */
Vec integrate(const VectorFieldSpec& spec, const Vec& x, const Vec& u, const Vec& w);
/* integrate() with w at the center of W */
Vec integrate_nominal(const VectorFieldSpec& spec, const Vec& x, const Vec& u);

/* r(tau) for r' = L r + w_half, r(0) = r0, same RK4 scheme as integrate() */
Vec propagate_radius(const std::vector<double>& L, const Vec& r0, const Vec& w_half, double tau,
                     int substeps = 5);
/* same with L = model.matrix(u, {center of zeros, r0}) */
Vec propagate_radius(const GrowthBoundModel& model, const Vec& r0, const Vec& u, const Vec& w_half,
                     double tau, int substeps = 5);

/* box containing all sampled successors of points in cell under any w in W */
IntervalBox overapprox_successor(const VectorFieldSpec& spec, const GrowthBoundModel& model,
                                 const IntervalBox& cell, const Vec& u);

}  // namespace dtsp

#endif  // DTSP_SAMPLED_DYNAMICS_HPP_
