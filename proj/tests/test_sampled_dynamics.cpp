#include <cmath>
#include <random>

#include "doctest.h"
#include "dtsp/errors.hpp"
#include "dtsp/grid.hpp"
#include "dtsp/sampled_dynamics.hpp"
#include "dtsp/scenario.hpp"
#include "oracles.hpp"

using namespace dtsp;

namespace {

VectorFieldSpec scalar_input(double w_lo = 0, double w_hi = 0, double tau = 1) {
  VectorFieldSpec s;
  s.state_dim = 1;
  s.input_dim = 1;
  s.rhs = [](const Vec&, const Vec& u) { return Vec{u[0]}; };
  s.w_lower = Vec{w_lo};
  s.w_upper = Vec{w_hi};
  s.tau = tau;
  return s;
}

VectorFieldSpec dubins(double tau = 0.65) {
  VectorFieldSpec s;
  s.state_dim = 3;
  s.input_dim = 2;
  s.rhs = dubins_rhs;
  s.w_lower = Vec{-5, -2, -0.04};
  s.w_upper = Vec{5, 2, 0.04};
  s.tau = tau;
  return s;
}

GrowthBoundModel dubins_model() {
  return {[](const Vec& u, const IntervalBox&) { return dubins_growth_bound(u); }};
}

VectorFieldSpec truck(double tau = 0.4) {
  VectorFieldSpec s;
  s.state_dim = 4;
  s.input_dim = 2;
  s.rhs = truck_rhs;
  s.w_lower = Vec{0, 0, -0.01, -0.1};
  s.w_upper = Vec{0, 0, 0.01, 0.1};
  s.tau = tau;
  return s;
}

GrowthBoundModel truck_model(double tau = 0.4) {
  return {[tau](const Vec& u, const IntervalBox& cell) { return truck_growth_bound(u, cell, tau, -0.1, 0.1); }};
}

bool contains(const IntervalBox& b, const Vec& p, double slack = 1e-9) {
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] < b.lower(i) - slack || p[i] > b.upper(i) + slack)
      return false;
  return true;
}

/* random start in the cell, disturbance redrawn on each of `pieces` sub-intervals */
std::size_t monte_carlo_misses(const VectorFieldSpec& spec, const GrowthBoundModel& model, const IntervalBox& cell,
                               const Vec& u, std::size_t runs, std::mt19937_64& rng) {
  const IntervalBox post = overapprox_successor(spec, model, cell, u);
  Vec lo(cell.center.size()), hi(cell.center.size());
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lo[i] = cell.lower(i);
    hi[i] = cell.upper(i);
  }
  std::size_t misses = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    const Vec x0 = oracle::uniform_in(rng, lo, hi);
    const int pieces = 1 + static_cast<int>(rng() % 4);
    std::vector<Vec> ws;
    for (int k = 0; k < pieces; ++k)
      ws.push_back(oracle::uniform_in(rng, spec.w_lower, spec.w_upper));
    const int steps = 40 * pieces;
    const Vec x1 = oracle::flow(spec.rhs, x0, u, [&](int k) { return ws[k / 40]; }, spec.tau, steps);
    misses += !contains(post, x1);
  }
  return misses;
}

}  // namespace

TEST_CASE("integrate_nominal: linear and straight-line cases") {
  VectorFieldSpec s = scalar_input(0, 0, 0.5);
  CHECK(integrate_nominal(s, Vec{1}, Vec{2})[0] == doctest::Approx(2.0).epsilon(1e-15));

  const Vec x = integrate_nominal(dubins(), Vec{0, 0, 0}, Vec{20, 0});
  CHECK(x[0] == doctest::Approx(13.0).epsilon(1e-12));
  CHECK(std::abs(x[1]) < 1e-12);
  CHECK(std::abs(x[2]) < 1e-12);
}

TEST_CASE("integrate_nominal: Dubins arc against the closed form") {
  const double v = 20, omega = 0.5, tau = 0.65;
  const double radius = v / omega, dtheta = omega * tau;
  CHECK(radius == 40.0);
  CHECK(dtheta == doctest::Approx(0.325));
  const Vec x = integrate_nominal(dubins(tau), Vec{0, 0, 0}, Vec{v, omega});
  CHECK(std::abs(x[0] - radius * std::sin(dtheta)) < 1e-6);
  CHECK(std::abs(x[1] - radius * (1 - std::cos(dtheta))) < 1e-6);
  CHECK(std::abs(x[2] - dtheta) < 1e-6);
}

TEST_CASE("integrate_nominal uses the center of an asymmetric W") {
  VectorFieldSpec s = scalar_input(0, 1, 1);
  s.rhs = [](const Vec&, const Vec&) { return Vec{0}; };
  CHECK(integrate_nominal(s, Vec{0}, Vec{0})[0] == doctest::Approx(0.5));
}

TEST_CASE("integrate reports non-finite derivatives") {
  VectorFieldSpec s = scalar_input();
  s.rhs = [](const Vec& x, const Vec&) { return Vec{std::log(x[0])}; };
  CHECK_THROWS_AS(integrate_nominal(s, Vec{-1}, Vec{0}), NumericError);
}

TEST_CASE("spec validation") {
  VectorFieldSpec s = scalar_input();
  CHECK_NOTHROW(s.validate());
  s.tau = 0;
  CHECK_THROWS_AS(s.validate(), UsageError);
  s = scalar_input(1, 0);
  CHECK_THROWS_AS(s.validate(), UsageError);
  s = scalar_input();
  s.rhs = nullptr;
  CHECK_THROWS_AS(s.validate(), UsageError);
}

TEST_CASE("propagate_radius closed forms") {
  /* no growth */
  const Vec r = propagate_radius({0, 0, 0, 0}, Vec{0.3, 0.7}, Vec{0, 0}, 0.65);
  CHECK(r[0] == doctest::Approx(0.3));
  CHECK(r[1] == doctest::Approx(0.7));

  /* r' = w: r0 + w tau */
  CHECK(propagate_radius({0}, Vec{0.5}, Vec{0.1}, 2.0)[0] == doctest::Approx(0.7).epsilon(1e-14));

  /* nilpotent Dubins bound: r1 = r2 = |u1| rho tau */
  const double rho = 0.05, tau = 0.65;
  for (double v : {20.0, -35.0, 50.0}) {
    const Vec rd = propagate_radius(dubins_growth_bound(Vec{v, 0.3}), Vec{0, 0, rho}, Vec{0, 0, 0}, tau);
    CHECK(rd[0] == doctest::Approx(std::abs(v) * rho * tau).epsilon(1e-13));
    CHECK(rd[1] == doctest::Approx(std::abs(v) * rho * tau).epsilon(1e-13));
    CHECK(rd[2] == doctest::Approx(rho).epsilon(1e-15));
  }

  /* scalar r' = a r: exp(a tau) within the RK4 error */
  CHECK(propagate_radius({0.8}, Vec{1.0}, Vec{0.0}, 1.0, 50)[0] == doctest::Approx(std::exp(0.8)).epsilon(1e-9));
}

TEST_CASE("propagate_radius rejects invalid input") {
  CHECK_THROWS_AS(propagate_radius({0}, Vec{-0.1}, Vec{0}, 1.0), UsageError);
  CHECK_THROWS_AS(propagate_radius({0}, Vec{0.1}, Vec{-1}, 1.0), UsageError);
  CHECK_THROWS_AS(propagate_radius({0, -1, 0, 0}, Vec{0.1, 0.1}, Vec{0, 0}, 1.0), UsageError);
  CHECK_THROWS_AS(propagate_radius({0, 0}, Vec{0.1}, Vec{0}, 1.0), UsageError);
}

TEST_CASE("propagate_radius is monotone in r0 and w_half") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec u{oracle::uniform(rng, 20, 50), oracle::uniform(rng, -0.5, 0.5)};
    const auto L = dubins_growth_bound(u);
    const Vec r0 = oracle::uniform_in(rng, Vec{0, 0, 0}, Vec{5, 5, 0.1});
    const Vec w = oracle::uniform_in(rng, Vec{0, 0, 0}, Vec{5, 2, 0.04});
    Vec r0b = r0, wb = w;
    for (std::size_t i = 0; i < 3; ++i) {
      r0b[i] += oracle::uniform(rng, 0, 1);
      wb[i] += oracle::uniform(rng, 0, 1);
    }
    const Vec a = propagate_radius(L, r0, w, 0.65);
    const Vec b = propagate_radius(L, r0b, wb, 0.65);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a[i] >= 0);
      CHECK(a[i] <= b[i]);
    }
  }
}

TEST_CASE("overapprox_successor: degenerate and scalar cases") {
  const IntervalBox point{Vec{3, 4, 0.2}, Vec{0, 0, 0}};
  VectorFieldSpec d = dubins();
  d.w_lower = Vec{0, 0, 0};
  d.w_upper = Vec{0, 0, 0};
  const IntervalBox b = overapprox_successor(d, dubins_model(), point, Vec{30, 0.1});
  CHECK(b.center == integrate_nominal(d, point.center, Vec{30, 0.1}));
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(b.radius[i] == 0.0);

  /* x' = u on [2,3], u = 1, tau = 1, W = [-0.1, 0.1] */
  const VectorFieldSpec s = scalar_input(-0.1, 0.1, 1.0);
  const GrowthBoundModel zero{[](const Vec&, const IntervalBox&) { return std::vector<double>{0}; }};
  const IntervalBox post = overapprox_successor(s, zero, IntervalBox{Vec{2.5}, Vec{0.5}}, Vec{1});
  CHECK(post.center[0] == doctest::Approx(3.5));
  CHECK(post.radius[0] == doctest::Approx(0.6));
  CHECK(post.lower(0) == doctest::Approx(2.9));
  CHECK(post.upper(0) == doctest::Approx(4.1));
}

TEST_CASE("overapprox_successor is deterministic") {
  const IntervalBox cell{Vec{105, 215, 1.1}, Vec{5, 5, 0.05}};
  const IntervalBox a = overapprox_successor(dubins(), dubins_model(), cell, Vec{35, -0.25});
  const IntervalBox b = overapprox_successor(dubins(), dubins_model(), cell, Vec{35, -0.25});
  CHECK(a.center == b.center);
  CHECK(a.radius == b.radius);
}

TEST_CASE("overapprox_successor is monotone in the cell") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec c = oracle::uniform_in(rng, Vec{0, 0, 0, 2}, Vec{50, 30, 6.28, 7});
    const Vec r = oracle::uniform_in(rng, Vec{0, 0, 0, 0}, Vec{1, 1, 0.2, 0.5});
    Vec big = r;
    for (std::size_t i = 0; i < 4; ++i)
      big[i] += oracle::uniform(rng, 0, 0.5);
    const Vec u{oracle::uniform(rng, -6, 4), oracle::uniform(rng, -0.5, 0.5)};
    const IntervalBox a = overapprox_successor(truck(), truck_model(), IntervalBox{c, r}, u);
    const IntervalBox b = overapprox_successor(truck(), truck_model(), IntervalBox{c, big}, u);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(b.lower(i) <= a.lower(i) + 1e-12);
      CHECK(b.upper(i) >= a.upper(i) - 1e-12);
    }
  }
}

TEST_CASE("overapprox_successor contains sampled Dubins trajectories") {
  std::mt19937_64 rng(3);
  const auto spec = dubins();
  std::size_t misses = 0;
  for (int c = 0; c < 50; ++c) {
    const IntervalBox cell{oracle::uniform_in(rng, Vec{50, 50, 0}, Vec{450, 400, 6.28}), Vec{5, 5, M_PI / 64}};
    const Vec u{oracle::uniform(rng, 20, 50), oracle::uniform(rng, -0.5, 0.5)};
    misses += monte_carlo_misses(spec, dubins_model(), cell, u, 100, rng);
  }
  CHECK(misses == 0);
}

TEST_CASE("overapprox_successor contains sampled truck trajectories") {
  std::mt19937_64 rng(5);
  const auto spec = truck();
  std::size_t misses = 0;
  for (int c = 0; c < 50; ++c) {
    const IntervalBox cell{oracle::uniform_in(rng, Vec{5, 5, 0, 2.5}, Vec{45, 25, 6.28, 6.5}),
                           Vec{0.5, 0.5, M_PI / 32, 0.5}};
    const Vec u{oracle::uniform(rng, -6, 4), oracle::uniform(rng, -0.5, 0.5)};
    misses += monte_carlo_misses(spec, truck_model(), cell, u, 100, rng);
  }
  CHECK(misses == 0);
}

TEST_CASE("truck growth bound covers the velocity range of the period") {
  const IntervalBox cell{Vec{0, 0, 0, 4.5}, Vec{0.5, 0.5, 0.1, 0.5}};
  const double tau = 0.4;
  /* accelerating: the upper speed grows by (u1 + w4_hi) tau */
  const auto acc = truck_growth_bound(Vec{4, 0}, cell, tau, -0.1, 0.1);
  CHECK(acc[2] == doctest::Approx(5.0 + 4.1 * tau));
  /* braking: the lower speed drops, the upper stays */
  const auto brk = truck_growth_bound(Vec{-6, 0.3}, cell, tau, -0.1, 0.1);
  const double beta = 1 / std::cos(std::atan(std::tan(0.3) / 2));
  CHECK(brk[2] == doctest::Approx(5.0 * beta));
  CHECK(brk[3] == doctest::Approx(beta));
  CHECK(brk[11] == doctest::Approx(std::tan(0.3)));
  for (double e : brk)
    CHECK(e >= 0);
}
