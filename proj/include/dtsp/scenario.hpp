/*
 * scenario.hpp
 *
 * Scenario configurations: dynamics, grid, inputs, disturbances, targets,
 * obstacles and running-cost rules, loaded from YAML files.
 */
#ifndef DTSP_SCENARIO_HPP_
#define DTSP_SCENARIO_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dtsp/abstraction.hpp"
#include "dtsp/atsp.hpp"
#include "dtsp/grid.hpp"
#include "dtsp/sampled_dynamics.hpp"
#include "dtsp/synthesis.hpp"

namespace dtsp {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class DynamicsKind { Dubins, Truck, CustomGraph };

/* planar segment (a, b) of a roadway axis */
struct Segment {
  double ax, ay, bx, by;
};

/* named union of boxes; the first target is the depot */
struct TargetRegion {
  std::string name;
  std::vector<Box> boxes;
  std::vector<StateIndex> states;  // custom-graph only
};

struct CostRules {
  double angular_rate_weight = 1.0;  // weight of u_2^2
  double distance_weight = 1.0;      // weight of the distance to the roadway axes
  std::vector<Segment> roadway_axes;
  /* when nonempty, states outside every lane box violate the traffic rules (cost inf) */
  std::vector<Box> lanes;
};

struct ScenarioConfig {
  std::string name;
  DynamicsKind dynamics = DynamicsKind::Dubins;
  double tau = 0;
  int substeps = 5;

  Vec domain_lower, domain_upper;
  std::vector<bool> periodic;
  std::vector<std::uint64_t> counts;

  Vec input_lower, input_upper;
  std::vector<std::size_t> input_counts;

  Vec w_lower, w_upper;

  std::vector<TargetRegion> targets;
  std::vector<Box> obstacles;
  CostRules cost;

  Vec start;  // optional reference initial state
  std::string graph_path;  // custom-graph only

  TspBackend backend = TspBackend::Exact;
  std::string external_solver;
  std::uint64_t seed = 1;

  std::size_t state_dim() const noexcept { return domain_lower.size(); }
  std::size_t input_dim() const noexcept { return input_lower.size(); }
};

/* parses a YAML scenario; ConfigError with a description on any problem */
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& yaml_text, const std::string& base_dir = ".");

/* "exact" | "heuristic" | "external:<path>" */
void parse_backend(const std::string& text, TspBackend& backend, std::string& external_solver);

/**
 * @class Scenario
 *
 * @brief a loaded configuration with the objects derived from it
 **/
class Scenario {
public:
  explicit Scenario(ScenarioConfig config);

  const ScenarioConfig& config() const noexcept { return m_config; }
  bool continuous() const noexcept { return m_config.dynamics != DynamicsKind::CustomGraph; }
  const VectorFieldSpec& dynamics() const noexcept { return m_spec; }
  const GrowthBoundModel& growth_bound() const noexcept { return m_growth; }
  const UniformGrid& grid() const noexcept { return m_grid; }
  const InputSample& inputs() const noexcept { return m_inputs; }
  AbstractRunningCost abstract_cost() const;

  /* concrete running cost g(x, y, u) */
  Cost running_cost(const Vec& x, const Vec& y, const Vec& u) const;
  bool is_obstacle(const Vec& x) const;

  /* concrete membership x in A_i (periodic coordinates wrapped) */
  bool in_target(std::size_t i, const Vec& x) const;
  std::size_t num_targets() const noexcept { return m_config.targets.size(); }

  /* inner approximations of the targets on the grid (or the listed states of a graph) */
  std::vector<StateSet> target_sets(std::size_t num_states) const;

  FiniteSystem build_abstraction(unsigned threads = 0) const;
  /* min over roadway axes of the Euclidean distance of (px, py) */
  double axis_distance(double px, double py) const;

private:
  bool in_box(const Box& b, const Vec& x) const;

  ScenarioConfig m_config;
  VectorFieldSpec m_spec;
  GrowthBoundModel m_growth;
  UniformGrid m_grid;
  InputSample m_inputs;
};

/* Dubins vehicle (x1' = u1 cos x3, x2' = u1 sin x3, x3' = u2) */
Vec dubins_rhs(const Vec& x, const Vec& u);
std::vector<double> dubins_growth_bound(const Vec& u);

/* kinematic truck with velocity state (x4) */
Vec truck_rhs(const Vec& x, const Vec& u);
/* bound with |x4| capped by the velocities reachable from `cell` within tau */
std::vector<double> truck_growth_bound(const Vec& u, const IntervalBox& cell, double tau, double w4_lo,
                                       double w4_hi);

}  // namespace dtsp

#endif  // DTSP_SCENARIO_HPP_
