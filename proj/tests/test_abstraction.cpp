#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "dtsp/abstraction.hpp"
#include "dtsp/errors.hpp"
#include "dtsp/scenario.hpp"
#include "oracles.hpp"

using namespace dtsp;

namespace {

std::vector<StateIndex> succ(const FiniteSystem& sys, StateIndex x, InputIndex u) {
  const auto s = sys.successors(x, u);
  return {s.begin(), s.end()};
}

VectorFieldSpec scalar_spec() {
  VectorFieldSpec s;
  s.state_dim = 1;
  s.input_dim = 1;
  s.rhs = [](const Vec&, const Vec& u) { return Vec{u[0]}; };
  s.w_lower = Vec{-0.1};
  s.w_upper = Vec{0.1};
  s.tau = 1;
  return s;
}

const GrowthBoundModel kZeroGrowth{[](const Vec& u, const IntervalBox&) { return std::vector<double>(u.size() * u.size(), 0.0); }};

struct DubinsSetup {
  VectorFieldSpec spec;
  GrowthBoundModel model{[](const Vec& u, const IntervalBox&) { return dubins_growth_bound(u); }};
  UniformGrid grid;
  InputSample inputs;

  explicit DubinsSetup(std::uint64_t scale) {
    spec.state_dim = 3;
    spec.input_dim = 2;
    spec.rhs = dubins_rhs;
    spec.w_lower = Vec{-5, -2, -0.04};
    spec.w_upper = Vec{5, 2, 0.04};
    spec.tau = 0.65;
    const double eta = 40.0 / static_cast<double>(scale);
    grid = UniformGrid(Vec{0, 0, 0}, Vec{eta, eta, 2 * M_PI / (8.0 * static_cast<double>(scale))},
                       {10 * scale, 10 * scale, 8 * scale}, {0, 0, 2 * M_PI});
    inputs = grid_inputs(Vec{20, -0.5}, Vec{50, 0.5}, {2, 3});
  }
};

/* concrete one-step successors of random points must quantize into the abstract successor list */
std::size_t soundness_violations(const DubinsSetup& d, const FiniteSystem& sys, std::size_t cells, std::size_t per_cell,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::size_t violations = 0;
  for (std::size_t k = 0; k < cells; ++k) {
    const auto c = static_cast<StateIndex>(rng() % d.grid.num_cells());
    const auto u = static_cast<InputIndex>(rng() % d.inputs.values.size());
    const IntervalBox box = d.grid.cell_box(c);
    const auto list = succ(sys, c, u);
    for (std::size_t r = 0; r < per_cell; ++r) {
      Vec lo(3), hi(3);
      for (std::size_t i = 0; i < 3; ++i) {
        lo[i] = box.lower(i);
        hi[i] = std::nextafter(box.upper(i), box.lower(i));
      }
      const Vec x0 = oracle::uniform_in(rng, lo, hi);
      const Vec w = oracle::uniform_in(rng, d.spec.w_lower, d.spec.w_upper);
      const Vec x1 = oracle::flow(d.spec.rhs, x0, d.inputs.values[u], [&](int) { return w; }, d.spec.tau, 50);
      violations += !std::binary_search(list.begin(), list.end(), d.grid.quantize(x1));
    }
  }
  return violations;
}

}  // namespace

TEST_CASE("quantize and cell_box on a planar grid") {
  const UniformGrid g(Vec{0, 0}, Vec{1, 1}, {10, 10});
  CHECK(g.num_cells() == 100);
  CHECK(g.num_states() == 101);
  CHECK(g.quantize(Vec{0.5, 0.5}) == g.flat_index({0, 0}));
  CHECK(g.quantize(Vec{-0.1, 5}) == g.sink());
  CHECK(g.quantize(Vec{10.0, 5}) == g.sink());  // half-open upper face
  CHECK(g.quantize(Vec{3.0, 0.0}) == g.flat_index({3, 0}));
  const IntervalBox b = g.cell_box(g.flat_index({0, 0}));
  CHECK(b.lower(0) == 0.0);
  CHECK(b.upper(0) == 1.0);
  CHECK(b.lower(1) == 0.0);
  CHECK(b.upper(1) == 1.0);
  CHECK_THROWS_AS(g.cell_box(g.sink()), UsageError);
  /* row-major, last dimension fastest */
  CHECK(g.flat_index({2, 3}) == 23);
  CHECK(g.multi_index(23) == std::vector<std::uint64_t>{2, 3});
}

TEST_CASE("periodic dimension wraps") {
  const UniformGrid g(Vec{0}, Vec{M_PI / 2}, {4}, {2 * M_PI});
  CHECK(g.quantize(Vec{2 * M_PI + 0.1}) == g.quantize(Vec{0.1}));
  CHECK(g.quantize(Vec{-0.1}) == 3);
  CHECK(g.cell_box(0).center[0] == doctest::Approx(M_PI / 4));
  CHECK_THROWS_AS(UniformGrid(Vec{0}, Vec{1.0}, {4}, {2 * M_PI}), UsageError);

  /* a box crossing the seam meets the last and the first cell */
  std::vector<StateIndex> out;
  g.cells_intersecting(IntervalBox{Vec{0}, Vec{0.2}}, out);
  CHECK(out == std::vector<StateIndex>{0, 3});
}

TEST_CASE("quantize(cell_box(c).center) == c for random cells") {
  const UniformGrid g(Vec{-3, 0, 0}, Vec{0.7, 2.5, 2 * M_PI / 75}, {17, 9, 75}, {0, 0, 2 * M_PI});
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto c = static_cast<StateIndex>(rng() % g.num_cells());
    CHECK(g.quantize(g.cell_box(c).center) == c);
  }
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(UniformGrid(Vec{0}, Vec{0.0}, {3}), UsageError);
  CHECK_THROWS_AS(UniformGrid(Vec{0}, Vec{1.0}, {0}), UsageError);
  CHECK_THROWS_AS(UniformGrid(Vec{0, 0}, Vec{1.0}, {3}), UsageError);
}

TEST_CASE("inner and outer approximations of regions") {
  const UniformGrid g(Vec{0, 0}, Vec{1, 1}, {4, 4});
  const Box region{Vec{0.5, 0}, Vec{2, 2}};
  const StateSet inner = g.inner_cells({region});
  const StateSet outer = g.outer_cells({region});
  CHECK(inner.to_indices() == std::vector<StateIndex>{4, 5});
  CHECK(outer.count() == 9);  // columns 0..2 meet the closed box, rows 0..2 likewise
  CHECK(inner.is_subset_of(outer));
  /* a lower-dimensional region ignores the remaining dimensions */
  const UniformGrid g3(Vec{0, 0, 0}, Vec{1, 1, 1}, {2, 2, 3});
  CHECK(g3.inner_cells({Box{Vec{0, 0}, Vec{1, 1}}}).count() == 3);
}

TEST_CASE("grid_inputs spans the box row-major") {
  const InputSample s = grid_inputs(Vec{20, -0.5}, Vec{50, 0.5}, {2, 3});
  REQUIRE(s.values.size() == 6);
  CHECK(s.values[0] == Vec{20, -0.5});
  CHECK(s.values[1] == Vec{20, 0.0});
  CHECK(s.values[2] == Vec{20, 0.5});
  CHECK(s.values[5] == Vec{50, 0.5});
  CHECK(grid_inputs(Vec{1}, Vec{3}, {1}).values[0] == Vec{2});
}

TEST_CASE("scalar abstraction matches hand interval arithmetic") {
  const UniformGrid g(Vec{0}, Vec{1}, {10});
  const InputSample in{{Vec{1}}};
  const FiniteSystem sys = build_abstraction(scalar_spec(), kZeroGrowth, g, in, {}, 1);
  CHECK(sys.num_states() == 11);
  CHECK(succ(sys, 2, 0) == std::vector<StateIndex>{2, 3, 4});
  /* [9,10] -> [9.9, 11.1] leaves the domain */
  CHECK(succ(sys, 9, 0) == std::vector<StateIndex>{9, g.sink()});
  /* the sink is absorbing at +inf */
  CHECK(succ(sys, g.sink(), 0) == std::vector<StateIndex>{g.sink()});
  CHECK(sys.worst_case_step_cost(g.sink(), 0) == kInfinity);
}

TEST_CASE("zero dynamics keep every cell among its successors") {
  VectorFieldSpec s = scalar_spec();
  s.rhs = [](const Vec&, const Vec&) { return Vec{0}; };
  s.w_lower = Vec{0};
  s.w_upper = Vec{0};
  const UniformGrid g(Vec{0}, Vec{1}, {5});
  const FiniteSystem sys = build_abstraction(s, kZeroGrowth, g, InputSample{{Vec{0}}}, {}, 1);
  /* the closed box [c, c+1] also touches the lower face of cell c+1 */
  for (StateIndex c = 0; c < 4; ++c)
    CHECK(succ(sys, c, 0) == std::vector<StateIndex>{c, c + 1});
  CHECK(succ(sys, 4, 0) == std::vector<StateIndex>{4, g.sink()});
  /* a degenerate point box has exactly one successor */
  std::vector<StateIndex> out;
  g.cells_intersecting(IntervalBox{Vec{2.5}, Vec{0}}, out);
  CHECK(out == std::vector<StateIndex>{2});
}

TEST_CASE("obstacle cells cost +inf under every input") {
  const UniformGrid g(Vec{0}, Vec{1}, {10});
  const InputSample in{{Vec{1}, Vec{0}}};
  AbstractRunningCost cost;
  cost.obstacle = [](StateIndex c, const IntervalBox&) { return c == 4; };
  cost.finite_cost = [](const IntervalBox&, const Vec& u, const IntervalBox&) { return 1.0 + u[0]; };
  const FiniteSystem sys = build_abstraction(scalar_spec(), kZeroGrowth, g, in, cost, 1);
  CHECK(sys.worst_case_step_cost(4, 0) == kInfinity);
  CHECK(sys.worst_case_step_cost(4, 1) == kInfinity);
  CHECK(sys.worst_case_step_cost(3, 0) == 2.0);
  CHECK(sys.worst_case_step_cost(3, 1) == 1.0);
}

TEST_CASE("abstraction does not depend on the thread split") {
  const DubinsSetup d(1);
  const FiniteSystem a = build_abstraction(d.spec, d.model, d.grid, d.inputs, {}, 1);
  const FiniteSystem b = build_abstraction(d.spec, d.model, d.grid, d.inputs, {}, 3);
  CHECK(a.offsets() == b.offsets());
  CHECK(a.flat_successors() == b.flat_successors());
  CHECK(a.pair_costs() == b.pair_costs());
  /* strict: every pair has a successor */
  for (std::size_t p = 0; p + 1 < a.offsets().size(); ++p)
    CHECK(a.offsets()[p + 1] > a.offsets()[p]);
}

TEST_CASE("abstraction cache roundtrip") {
  const DubinsSetup d(1);
  AbstractRunningCost cost;
  cost.finite_cost = [](const IntervalBox&, const Vec& u, const IntervalBox&) { return 0.65 + u[1] * u[1]; };
  const FiniteSystem sys = build_abstraction(d.spec, d.model, d.grid, d.inputs, cost, 1);
  const std::string path = "test_abstraction_cache.abs";
  save_abstraction(path, d.grid, d.inputs, sys);
  const AbstractionCache back = load_abstraction(path);
  std::remove(path.c_str());
  CHECK(back.grid == d.grid);
  REQUIRE(back.inputs.values.size() == d.inputs.values.size());
  for (std::size_t k = 0; k < d.inputs.values.size(); ++k)
    CHECK(back.inputs.values[k] == d.inputs.values[k]);
  CHECK(back.system.offsets() == sys.offsets());
  CHECK(back.system.flat_successors() == sys.flat_successors());
  CHECK(back.system.pair_costs() == sys.pair_costs());
}

TEST_CASE("loading a corrupt cache fails cleanly") {
  const std::string path = "test_abstraction_bad.abs";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("DTSPABS1garbage", f);
    std::fclose(f);
  }
  CHECK_THROWS(load_abstraction(path));
  std::remove(path.c_str());
  CHECK_THROWS(load_abstraction("does-not-exist.abs"));
}

TEST_CASE("sampled soundness at two resolutions") {
  for (std::uint64_t scale : {1u, 2u}) {
    const DubinsSetup d(scale);
    const FiniteSystem sys = build_abstraction(d.spec, d.model, d.grid, d.inputs, {}, 1);
    CHECK(soundness_violations(d, sys, 300, 100, 17 + scale) == 0);
  }
}
