#include "dtsp/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "dtsp/errors.hpp"

namespace dtsp {

namespace {

void check_in_box(const Vec& w, const Vec& lower, const Vec& upper) {
  if (w.size() != lower.size())
    throw UsageError("disturbance " + to_string(w) + " has the wrong dimension");
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!(w[i] >= lower[i] && w[i] <= upper[i]))
      throw UsageError("disturbance " + to_string(w) + " lies outside W");
}

std::string fmt(double v) {
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(const std::string& s, std::size_t line) {
  if (s == "inf")
    return kInfinity;
  if (s == "-inf")
    return -kInfinity;
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError("trajectory CSV: bad number '" + s + "'", line);
  }
  if (used != s.size())
    throw ParseError("trajectory CSV: bad number '" + s + "'", line);
  return v;
}

Vec input_vector(const Scenario& scenario, InputIndex k) {
  if (!scenario.continuous())
    return Vec{static_cast<double>(k)};
  return scenario.inputs().values.at(k);
}

Cost step_cost(const Scenario& scenario, const FiniteSystem* graph, const Vec& x, const Vec& y, const Vec& u) {
  if (scenario.continuous())
    return scenario.running_cost(x, y, u);
  if (!graph)
    throw UsageError("graph scenario needs its transition system for cost evaluation");
  return graph->step_cost(static_cast<StateIndex>(x[0]), static_cast<StateIndex>(y[0]),
                          static_cast<InputIndex>(u[0]));
}

}  // namespace

DisturbanceSignal DisturbanceSignal::constant(const Vec& w, const Vec& lower, const Vec& upper) {
  check_in_box(w, lower, upper);
  DisturbanceSignal s;
  s.m_mode = Mode::Constant;
  s.m_lower = lower;
  s.m_upper = upper;
  s.m_values = {w};
  return s;
}

DisturbanceSignal DisturbanceSignal::random(const Vec& lower, const Vec& upper, std::uint64_t seed) {
  check_in_box(lower, lower, upper);
  DisturbanceSignal s;
  s.m_mode = Mode::Random;
  s.m_lower = lower;
  s.m_upper = upper;
  s.m_seed = seed;
  return s;
}

DisturbanceSignal DisturbanceSignal::scripted(std::vector<Vec> script, const Vec& lower, const Vec& upper) {
  if (script.empty())
    throw UsageError("scripted disturbance needs at least one value");
  for (const auto& w : script)
    check_in_box(w, lower, upper);
  DisturbanceSignal s;
  s.m_mode = Mode::Scripted;
  s.m_lower = lower;
  s.m_upper = upper;
  s.m_values = std::move(script);
  return s;
}

Vec DisturbanceSignal::at(std::size_t t) const {
  switch (m_mode) {
    case Mode::Constant:
      return m_values.front();
    case Mode::Scripted:
      return m_values[std::min(t, m_values.size() - 1)];
    case Mode::Random:
      break;
  }
  std::mt19937_64 rng(m_seed ^ (static_cast<std::uint64_t>(t) * 0x9E3779B97F4A7C15ULL));
  Vec w(m_lower.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double r = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    w[i] = std::min(m_upper[i], m_lower[i] + (m_upper[i] - m_lower[i]) * r);
  }
  return w;
}

std::vector<Vec> disturbance_vertices(const Vec& lower, const Vec& upper) {
  const std::size_t n = lower.size();
  std::vector<Vec> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Vec w(n);
    for (std::size_t i = 0; i < n; ++i)
      w[i] = (mask >> i) & 1 ? upper[i] : lower[i];
    out.push_back(w);
  }
  return out;
}

StateIndex quantize_state(const Scenario& scenario, const Vec& x) {
  if (!scenario.continuous())
    return static_cast<StateIndex>(x[0]);
  return scenario.grid().quantize(x);
}

TrajectoryRecord simulate_closed_loop(const SynthesisResult& result, const Scenario& scenario,
                                      const FiniteSystem* graph, const Vec& x0, const DisturbanceSignal& dist,
                                      std::size_t max_steps) {
  if (!scenario.continuous() && !graph)
    throw UsageError("graph scenario needs its transition system for simulation");
  const StateIndex c0 = quantize_state(scenario, x0);
  if (c0 >= result.num_states || !result.shrunk.front().contains(c0))
    throw UsageError("start state " + to_string(x0) + " is not in the shrunk depot A'_1");

  TrajectoryRecord rec;
  SwitchingState state;
  Vec x = x0;
  Cost acc = 0;
  for (std::size_t t = 0;; ++t) {
    TrajectoryStep step;
    step.x = x;
    step.stage = state.stage;
    const StateIndex cell = quantize_state(scenario, x);
    SwitchingOutput out;
    try {
      out = switching_step(result, state, cell);
    } catch (const WinningDomainExit& e) {
      step.u = Vec(scenario.continuous() ? scenario.config().input_dim() : 1);
      step.acc_cost = acc;
      rec.steps.push_back(step);
      rec.outcome = TrajectoryRecord::Outcome::Fault;
      rec.fault = e.what();
      return rec;
    }
    step.u = input_vector(scenario, out.input);
    step.v = out.stop;
    step.stage = state.stage;
    if (out.stop || t == max_steps) {
      step.acc_cost = acc;
      rec.steps.push_back(step);
      if (out.stop) {
        rec.T = t;
        rec.outcome = TrajectoryRecord::Outcome::Completed;
      }
      return rec;
    }

    Vec y;
    const Vec w = dist.at(t);
    if (scenario.continuous()) {
      try {
        y = integrate(scenario.dynamics(), x, step.u, w);
      } catch (const NumericError& e) {
        step.acc_cost = acc;
        rec.steps.push_back(step);
        rec.outcome = TrajectoryRecord::Outcome::Fault;
        rec.fault = e.what();
        return rec;
      }
      const auto& c = scenario.config();
      for (std::size_t i = 0; i < y.size(); ++i)
        if (c.periodic[i]) {
          const double p = c.domain_upper[i] - c.domain_lower[i];
          y[i] -= p * std::floor((y[i] - c.domain_lower[i]) / p);
        }
    } else {
      const auto succ = graph->successors(cell, out.input);
      const auto k = std::min(succ.size() - 1, static_cast<std::size_t>(std::max(0.0, w[0]) * succ.size()));
      y = Vec{static_cast<double>(succ[k])};
    }
    step.step_cost = step_cost(scenario, graph, x, y, step.u);
    acc += step.step_cost;
    step.acc_cost = acc;
    rec.steps.push_back(step);
    x = y;
  }
}

bool check_condition_star(const TrajectoryRecord& traj, const Scenario& scenario) {
  if (!traj.T || *traj.T >= traj.steps.size())
    return false;
  const std::size_t T = *traj.T;
  if (!scenario.in_target(0, traj.steps.front().x) || !scenario.in_target(0, traj.steps[T].x))
    return false;
  for (std::size_t i = 1; i < scenario.num_targets(); ++i) {
    bool seen = false;
    for (std::size_t s = 0; s <= T && !seen; ++s)
      seen = scenario.in_target(i, traj.steps[s].x);
    if (!seen)
      return false;
  }
  return true;
}

Cost evaluate_total_cost(const TrajectoryRecord& traj, const Scenario& scenario, const FiniteSystem* graph) {
  if (!check_condition_star(traj, scenario))
    return kInfinity;
  Cost J = 0;
  for (std::size_t t = 0; t < *traj.T; ++t)
    J += step_cost(scenario, graph, traj.steps[t].x, traj.steps[t + 1].x, traj.steps[t].u);
  return J;
}

Cost estimate_performance(const SynthesisResult& result, const Scenario& scenario, const FiniteSystem* graph,
                          const Vec& x0, std::size_t trials, std::uint64_t seed, std::size_t max_steps) {
  const auto& lo = scenario.continuous() ? scenario.config().w_lower : Vec{0.0};
  const auto& hi = scenario.continuous() ? scenario.config().w_upper : Vec{1.0};
  Vec center(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i)
    center[i] = 0.5 * (lo[i] + hi[i]);

  auto run = [&](const DisturbanceSignal& d) {
    return evaluate_total_cost(simulate_closed_loop(result, scenario, graph, x0, d, max_steps), scenario, graph);
  };
  Cost worst = run(DisturbanceSignal::constant(center, lo, hi));
  for (const auto& w : disturbance_vertices(lo, hi))
    worst = std::max(worst, run(DisturbanceSignal::constant(w, lo, hi)));
  for (std::size_t k = 0; k < trials; ++k)
    worst = std::max(worst, run(DisturbanceSignal::random(lo, hi, seed + k)));
  return worst;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& traj, std::size_t n, std::size_t m) {
  out << "t";
  for (std::size_t i = 1; i <= n; ++i)
    out << ",x" << i;
  for (std::size_t i = 1; i <= m; ++i)
    out << ",u" << i;
  out << ",v,stage,step_cost,acc_cost\n";
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const auto& s = traj.steps[t];
    if (s.x.size() != n || s.u.size() != m)
      throw UsageError("trajectory step " + std::to_string(t) + " has the wrong dimension");
    out << t;
    for (double v : s.x)
      out << ',' << fmt(v);
    for (double v : s.u)
      out << ',' << fmt(v);
    out << ',' << (s.v ? 1 : 0) << ',' << s.stage << ',' << fmt(s.step_cost) << ',' << fmt(s.acc_cost) << '\n';
  }
}

void export_trajectory(const TrajectoryRecord& traj, std::size_t n, std::size_t m, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write trajectory file '" + path + "'");
  write_trajectory_csv(out, traj, n, m);
  if (!out)
    throw std::runtime_error("write error on '" + path + "'");
}

TrajectoryRecord read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("trajectory CSV: missing header", 1);
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ','))
      cols.push_back(c);
  }
  std::size_t n = 0, m = 0;
  while (1 + n < cols.size() && cols[1 + n] == "x" + std::to_string(n + 1))
    ++n;
  while (1 + n + m < cols.size() && cols[1 + n + m] == "u" + std::to_string(m + 1))
    ++m;
  const std::vector<std::string> tail{"v", "stage", "step_cost", "acc_cost"};
  if (cols.empty() || cols[0] != "t" || cols.size() != 1 + n + m + tail.size() ||
      !std::equal(tail.begin(), tail.end(), cols.begin() + static_cast<long>(1 + n + m)))
    throw ParseError("trajectory CSV: unexpected header '" + line + "'", 1);

  TrajectoryRecord rec;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ','))
      f.push_back(c);
    if (f.size() != cols.size())
      throw ParseError("trajectory CSV: expected " + std::to_string(cols.size()) + " fields", lineno);
    if (parse_real(f[0], lineno) != static_cast<double>(rec.steps.size()))
      throw ParseError("trajectory CSV: time column out of sequence", lineno);
    TrajectoryStep s;
    s.x = Vec(n);
    s.u = Vec(m);
    for (std::size_t i = 0; i < n; ++i)
      s.x[i] = parse_real(f[1 + i], lineno);
    for (std::size_t i = 0; i < m; ++i)
      s.u[i] = parse_real(f[1 + n + i], lineno);
    s.v = f[1 + n + m] == "1";
    s.stage = static_cast<std::size_t>(parse_real(f[2 + n + m], lineno));
    s.step_cost = parse_real(f[3 + n + m], lineno);
    s.acc_cost = parse_real(f[4 + n + m], lineno);
    if (s.v && !rec.T)
      rec.T = rec.steps.size();
    rec.steps.push_back(s);
  }
  rec.outcome = rec.T ? TrajectoryRecord::Outcome::Completed : TrajectoryRecord::Outcome::MaxSteps;
  return rec;
}

TrajectoryRecord import_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open trajectory file '" + path + "'");
  return read_trajectory_csv(in);
}

void write_svg(std::ostream& out, const TrajectoryRecord& traj, const Scenario& scenario) {
  if (!scenario.continuous())
    throw UsageError("SVG rendering needs a planar (continuous) scenario");
  const auto& c = scenario.config();
  const double x0 = c.domain_lower[0], y0 = c.domain_lower[1];
  const double w = c.domain_upper[0] - x0, h = c.domain_upper[1] - y0;
  const double scale = 800.0 / std::max(w, h);
  auto px = [&](double x) { return fmt((x - x0) * scale); };
  auto py = [&](double y) { return fmt((h - (y - y0)) * scale); };
  auto rect = [&](const Box& b, const char* fill, const char* extra) {
    const double lx = std::max(b.lower[0], x0), ux = std::min(b.upper[0], x0 + w);
    const double ly = std::max(b.lower[1], y0), uy = std::min(b.upper[1], y0 + h);
    out << "<rect x=\"" << px(lx) << "\" y=\"" << py(uy) << "\" width=\"" << fmt((ux - lx) * scale)
        << "\" height=\"" << fmt((uy - ly) * scale) << "\" fill=\"" << fill << "\"" << extra << "/>\n";
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w * scale) << "\" height=\""
      << fmt(h * scale) << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << fmt(w * scale) << "\" height=\"" << fmt(h * scale)
      << "\" fill=\"white\" stroke=\"black\"/>\n";
  for (const auto& b : c.obstacles)
    rect(b, "grey", " fill-opacity=\"0.8\"");
  for (std::size_t i = 0; i < c.targets.size(); ++i)
    for (const auto& b : c.targets[i].boxes)
      rect(b, i == 0 ? "green" : "orange", " fill-opacity=\"0.7\"");
  out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
  for (std::size_t t = 0; t < traj.steps.size(); ++t)
    out << (t ? " " : "") << px(traj.steps[t].x[0]) << ',' << py(traj.steps[t].x[1]);
  out << "\"/>\n</svg>\n";
}

void render_svg(const TrajectoryRecord& traj, const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write SVG file '" + path + "'");
  write_svg(out, traj, scenario);
  if (!out)
    throw std::runtime_error("write error on '" + path + "'");
}

}  // namespace dtsp
