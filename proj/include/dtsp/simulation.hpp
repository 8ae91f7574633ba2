/*
 * simulation.hpp
 *
 * Closed-loop simulation of synthesized controllers, the total cost J,
 * condition (*) and trajectory exports.
 */
#ifndef DTSP_SIMULATION_HPP_
#define DTSP_SIMULATION_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dtsp/finite_system.hpp"
#include "dtsp/scenario.hpp"
#include "dtsp/synthesis.hpp"

namespace dtsp {

/**
 * @class DisturbanceSignal
 *
 * @brief piecewise-constant disturbance w(t) in W, one value per sampling period
 *
 * Random values depend only on (seed, t), so a signal can be replayed from
 * any step. A script shorter than the run repeats its last entry.
 **/
class DisturbanceSignal {
public:
  enum class Mode { Constant, Random, Scripted };

  /* UsageError if a value lies outside [lower, upper] */
  static DisturbanceSignal constant(const Vec& w, const Vec& lower, const Vec& upper);
  static DisturbanceSignal random(const Vec& lower, const Vec& upper, std::uint64_t seed);
  static DisturbanceSignal scripted(std::vector<Vec> script, const Vec& lower, const Vec& upper);

  Mode mode() const noexcept { return m_mode; }
  std::uint64_t seed() const noexcept { return m_seed; }
  Vec at(std::size_t t) const;

private:
  Mode m_mode = Mode::Constant;
  Vec m_lower, m_upper;
  std::vector<Vec> m_values;
  std::uint64_t m_seed = 0;
};

/* the 2^n vertices of W in binary order (bit i set: upper bound in component i) */
std::vector<Vec> disturbance_vertices(const Vec& lower, const Vec& upper);

struct TrajectoryStep {
  Vec x;
  Vec u;
  bool v = false;
  std::size_t stage = 1;
  Cost step_cost = 0;  // g(x(t), x(t+1), u(t)); 0 at the stopping step
  Cost acc_cost = 0;   // sum of step costs up to and including t
};

struct TrajectoryRecord {
  enum class Outcome { Completed, MaxSteps, Fault };

  std::vector<TrajectoryStep> steps;
  std::optional<std::size_t> T;  // first t with v(t) = 1
  Outcome outcome = Outcome::MaxSteps;
  std::string fault;

  bool terminated() const noexcept { return T.has_value(); }
};

/**
 * @brief runs quantizer, switching logic and the sampled plant from x0
 *
 * Stops at the first v = 1, after max_steps plant transitions, or when the
 * switching logic reports a winning-domain exit (recorded as Fault). For
 * custom graphs x is the state index and the signal's stream picks among the
 * successors. UsageError if quantize(x0) is not in A'_1.
 */
TrajectoryRecord simulate_closed_loop(const SynthesisResult& result, const Scenario& scenario,
                                      const FiniteSystem* graph, const Vec& x0, const DisturbanceSignal& dist,
                                      std::size_t max_steps);

/* abstract cell of a concrete state (the state index itself for graphs) */
StateIndex quantize_state(const Scenario& scenario, const Vec& x);

/* x(0) in A_1, x(T) in A_1 and each A_i visited at a sampling instant in [0, T] */
bool check_condition_star(const TrajectoryRecord& traj, const Scenario& scenario);

/* concrete J: +inf without termination or when condition (*) fails */
Cost evaluate_total_cost(const TrajectoryRecord& traj, const Scenario& scenario, const FiniteSystem* graph = nullptr);

/* max of J over the nominal run, the vertices of W and `trials` seeded random signals */
Cost estimate_performance(const SynthesisResult& result, const Scenario& scenario, const FiniteSystem* graph,
                          const Vec& x0, std::size_t trials, std::uint64_t seed, std::size_t max_steps);

/* CSV: header t,x1..xn,u1..um,v,stage,step_cost,acc_cost; reals with 17 significant digits */
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& traj, std::size_t n, std::size_t m);
void export_trajectory(const TrajectoryRecord& traj, std::size_t n, std::size_t m, const std::string& path);
/* inverse of write_trajectory_csv; T is the first row with v = 1 */
TrajectoryRecord read_trajectory_csv(std::istream& in);
TrajectoryRecord import_trajectory(const std::string& path);

/* planar view (x1, x2): domain, obstacles, targets, depot and the state polyline */
void write_svg(std::ostream& out, const TrajectoryRecord& traj, const Scenario& scenario);
void render_svg(const TrajectoryRecord& traj, const Scenario& scenario, const std::string& path);

}  // namespace dtsp

#endif  // DTSP_SIMULATION_HPP_
