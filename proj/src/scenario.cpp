#include "dtsp/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dtsp/errors.hpp"

namespace dtsp {

namespace {

std::string where(const YAML::Node& n) {
  const auto m = n.Mark();
  return m.is_null() ? std::string() : " (line " + std::to_string(m.line + 1) + ")";
}

/* product or quotient of numbers and "pi", e.g. "3*pi/8" */
double term(const std::string& s, const std::string& key, const YAML::Node& n) {
  double value = 1;
  char op = '*';
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = s.find_first_of("*/", pos);
    const std::string tok = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    double f;
    if (tok == "pi") {
      f = std::numbers::pi;
    } else {
      std::size_t used = 0;
      try {
        f = std::stod(tok, &used);
      } catch (const std::exception&) {
        throw ConfigError("'" + key + "': cannot parse '" + n.Scalar() + "'" + where(n));
      }
      if (used != tok.size())
        throw ConfigError("'" + key + "': cannot parse '" + n.Scalar() + "'" + where(n));
    }
    value = op == '*' ? value * f : value / f;
    if (next == std::string::npos)
      return value;
    op = s[next];
    pos = next + 1;
  }
}

/* a real number or a signed sum of terms such as "-pi/8" or "15*pi/8-0.01" */
double real(const YAML::Node& n, const std::string& key) {
  if (!n || !n.IsScalar())
    throw ConfigError("'" + key + "' must be a number" + where(n));
  std::string s = n.Scalar();
  std::erase(s, ' ');
  if (s.empty())
    throw ConfigError("'" + key + "': empty number" + where(n));
  double sum = 0;
  std::size_t pos = 0;
  while (pos < s.size()) {
    double sign = 1;
    if (s[pos] == '+' || s[pos] == '-')
      sign = s[pos++] == '-' ? -1 : 1;
    std::size_t end = pos;
    /* a sign ends the term unless it belongs to an exponent such as 1e-3 */
    while (end < s.size() && !((s[end] == '+' || s[end] == '-') && end > pos &&
                               !((s[end - 1] == 'e' || s[end - 1] == 'E') && end >= 2 &&
                                 std::isdigit(static_cast<unsigned char>(s[end - 2])))))
      ++end;
    if (end == pos)
      throw ConfigError("'" + key + "': cannot parse '" + n.Scalar() + "'" + where(n));
    sum += sign * term(s.substr(pos, end - pos), key, n);
    pos = end;
  }
  if (!std::isfinite(sum))
    throw ConfigError("'" + key + "' is not finite" + where(n));
  return sum;
}

Vec vec(const YAML::Node& n, const std::string& key) {
  if (!n || !n.IsSequence())
    throw ConfigError("'" + key + "' must be a list of numbers" + where(n));
  if (n.size() > kMaxDim)
    throw ConfigError("'" + key + "' has more than " + std::to_string(kMaxDim) + " entries" + where(n));
  Vec v(n.size());
  for (std::size_t i = 0; i < n.size(); ++i)
    v[i] = real(n[i], key);
  return v;
}

template <class T>
T get(const YAML::Node& n, const std::string& key) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("'" + key + "' has the wrong type" + where(n));
  }
}

const YAML::Node require(const YAML::Node& parent, const std::string& key) {
  const YAML::Node n = parent[key];
  if (!n)
    throw ConfigError("missing key '" + key + "'" + where(parent));
  return n;
}

Box box(const YAML::Node& n, const std::string& key, std::size_t max_dim) {
  if (!n || !n.IsMap())
    throw ConfigError("'" + key + "' must be a map with 'lower' and 'upper'" + where(n));
  Box b{vec(require(n, "lower"), key + ".lower"), vec(require(n, "upper"), key + ".upper")};
  if (b.lower.size() != b.upper.size() || b.lower.size() == 0 || b.lower.size() > max_dim)
    throw ConfigError("'" + key + "': bounds of inconsistent dimension" + where(n));
  for (std::size_t i = 0; i < b.lower.size(); ++i)
    if (!(b.lower[i] <= b.upper[i]))
      throw ConfigError("'" + key + "': lower bound exceeds upper bound" + where(n));
  return b;
}

std::vector<Box> boxes(const YAML::Node& n, const std::string& key, std::size_t max_dim) {
  std::vector<Box> out;
  if (!n)
    return out;
  if (!n.IsSequence())
    throw ConfigError("'" + key + "' must be a list of boxes" + where(n));
  for (std::size_t i = 0; i < n.size(); ++i)
    out.push_back(box(n[i], key + "[" + std::to_string(i) + "]", max_dim));
  return out;
}

double segment_distance(const Segment& s, double px, double py) {
  const double dx = s.bx - s.ax, dy = s.by - s.ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - s.ax) * dx + (py - s.ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (s.ax + t * dx), py - (s.ay + t * dy));
}

}  // namespace

void parse_backend(const std::string& text, TspBackend& backend, std::string& external_solver) {
  if (text == "exact") {
    backend = TspBackend::Exact;
  } else if (text == "heuristic") {
    backend = TspBackend::Heuristic;
  } else if (text.starts_with("external:") && text.size() > 9) {
    backend = TspBackend::External;
    external_solver = text.substr(9);
  } else {
    throw ConfigError("unknown tsp backend '" + text + "' (exact | heuristic | external:<path>)");
  }
}

ScenarioConfig parse_scenario(const std::string& yaml_text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("YAML syntax error: ") + e.what());
  }
  if (!root.IsMap())
    throw ConfigError("scenario must be a YAML map");

  ScenarioConfig c;
  c.name = root["name"] ? get<std::string>(root["name"], "name") : "scenario";
  const std::string dyn = get<std::string>(require(root, "dynamics"), "dynamics");
  if (dyn == "dubins")
    c.dynamics = DynamicsKind::Dubins;
  else if (dyn == "truck")
    c.dynamics = DynamicsKind::Truck;
  else if (dyn == "custom-graph")
    c.dynamics = DynamicsKind::CustomGraph;
  else
    throw ConfigError("unknown dynamics '" + dyn + "' (dubins | truck | custom-graph)");

  if (root["tsp_backend"])
    parse_backend(get<std::string>(root["tsp_backend"], "tsp_backend"), c.backend, c.external_solver);
  if (root["seed"])
    c.seed = get<std::uint64_t>(root["seed"], "seed");

  if (c.dynamics == DynamicsKind::CustomGraph) {
    std::filesystem::path p = get<std::string>(require(root, "graph"), "graph");
    if (p.is_relative())
      p = std::filesystem::path(base_dir) / p;
    c.graph_path = p.string();
    const YAML::Node targets = require(root, "targets");
    if (!targets.IsSequence() || targets.size() < 2)
      throw ConfigError("'targets' must list at least two regions (depot first)" + where(targets));
    for (std::size_t i = 0; i < targets.size(); ++i) {
      TargetRegion t;
      t.name = targets[i]["name"] ? get<std::string>(targets[i]["name"], "name") : "A" + std::to_string(i + 1);
      t.states = get<std::vector<StateIndex>>(require(targets[i], "states"), "states");
      if (t.states.empty())
        throw ConfigError("target '" + t.name + "' lists no states" + where(targets[i]));
      c.targets.push_back(std::move(t));
    }
    if (root["start"])
      c.start = vec(root["start"], "start");
    return c;
  }

  c.tau = real(require(root, "tau"), "tau");
  if (!(c.tau > 0))
    throw ConfigError("'tau' must be positive");
  if (root["substeps"])
    c.substeps = get<int>(root["substeps"], "substeps");
  if (c.substeps < 1)
    throw ConfigError("'substeps' must be at least 1");

  const std::size_t n = c.dynamics == DynamicsKind::Dubins ? 3 : 4;
  const std::size_t m = 2;

  const YAML::Node dom = require(root, "domain");
  c.domain_lower = vec(require(dom, "lower"), "domain.lower");
  c.domain_upper = vec(require(dom, "upper"), "domain.upper");
  if (c.domain_lower.size() != n || c.domain_upper.size() != n)
    throw ConfigError("domain must have " + std::to_string(n) + " components for '" + dyn + "'");
  for (std::size_t i = 0; i < n; ++i)
    if (!(c.domain_lower[i] < c.domain_upper[i]))
      throw ConfigError("domain: lower bound must be below upper bound in component " + std::to_string(i + 1));
  c.periodic.assign(n, false);
  if (dom["periodic"]) {
    c.periodic = get<std::vector<bool>>(dom["periodic"], "domain.periodic");
    if (c.periodic.size() != n)
      throw ConfigError("domain.periodic must have " + std::to_string(n) + " entries");
  }

  const YAML::Node grid = require(root, "grid");
  if (grid["counts"]) {
    c.counts = get<std::vector<std::uint64_t>>(grid["counts"], "grid.counts");
  } else {
    const Vec eta = vec(require(grid, "eta"), "grid.eta");
    if (eta.size() != n)
      throw ConfigError("grid.eta must have " + std::to_string(n) + " entries");
    for (std::size_t i = 0; i < n; ++i) {
      const double k = (c.domain_upper[i] - c.domain_lower[i]) / eta[i];
      if (!(eta[i] > 0) || std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k))
        throw ConfigError("grid.eta must divide the domain evenly (component " + std::to_string(i + 1) + ")");
      c.counts.push_back(static_cast<std::uint64_t>(std::llround(k)));
    }
  }
  if (c.counts.size() != n)
    throw ConfigError("grid.counts must have " + std::to_string(n) + " entries");
  for (auto k : c.counts)
    if (k == 0)
      throw ConfigError("grid.counts must be positive");

  const YAML::Node in = require(root, "inputs");
  c.input_lower = vec(require(in, "lower"), "inputs.lower");
  c.input_upper = vec(require(in, "upper"), "inputs.upper");
  c.input_counts = get<std::vector<std::size_t>>(require(in, "counts"), "inputs.counts");
  if (c.input_lower.size() != m || c.input_upper.size() != m || c.input_counts.size() != m)
    throw ConfigError("inputs must have " + std::to_string(m) + " components");
  for (std::size_t i = 0; i < m; ++i)
    if (!(c.input_lower[i] <= c.input_upper[i]) || c.input_counts[i] == 0)
      throw ConfigError("inputs: bad bounds or counts in component " + std::to_string(i + 1));

  if (root["disturbance"]) {
    c.w_lower = vec(require(root["disturbance"], "lower"), "disturbance.lower");
    c.w_upper = vec(require(root["disturbance"], "upper"), "disturbance.upper");
  } else {
    c.w_lower = c.w_upper = Vec(n);
  }
  if (c.w_lower.size() != n || c.w_upper.size() != n)
    throw ConfigError("disturbance must have " + std::to_string(n) + " components");
  for (std::size_t i = 0; i < n; ++i)
    if (!(c.w_lower[i] <= c.w_upper[i]))
      throw ConfigError("disturbance: lower bound exceeds upper bound in component " + std::to_string(i + 1));

  const YAML::Node targets = require(root, "targets");
  if (!targets.IsSequence() || targets.size() < 2)
    throw ConfigError("'targets' must list at least two regions (depot first)" + where(targets));
  for (std::size_t i = 0; i < targets.size(); ++i) {
    TargetRegion t;
    t.name = targets[i]["name"] ? get<std::string>(targets[i]["name"], "name") : "A" + std::to_string(i + 1);
    t.boxes = boxes(require(targets[i], "boxes"), "targets[" + std::to_string(i) + "].boxes", n);
    if (t.boxes.empty())
      throw ConfigError("target '" + t.name + "' has no boxes" + where(targets[i]));
    c.targets.push_back(std::move(t));
  }
  c.obstacles = boxes(root["obstacles"], "obstacles", n);

  if (const YAML::Node cost = root["cost"]) {
    if (cost["angular_rate_weight"])
      c.cost.angular_rate_weight = real(cost["angular_rate_weight"], "cost.angular_rate_weight");
    if (cost["distance_weight"])
      c.cost.distance_weight = real(cost["distance_weight"], "cost.distance_weight");
    if (c.cost.angular_rate_weight < 0 || c.cost.distance_weight < 0)
      throw ConfigError("cost weights must be nonnegative");
    if (const YAML::Node axes = cost["roadway_axes"]) {
      if (!axes.IsSequence())
        throw ConfigError("cost.roadway_axes must be a list of [ax, ay, bx, by]" + where(axes));
      for (std::size_t i = 0; i < axes.size(); ++i) {
        const Vec s = vec(axes[i], "cost.roadway_axes");
        if (s.size() != 4)
          throw ConfigError("cost.roadway_axes entries need 4 numbers" + where(axes[i]));
        c.cost.roadway_axes.push_back({s[0], s[1], s[2], s[3]});
      }
    }
    c.cost.lanes = boxes(cost["lanes"], "cost.lanes", n);
  }

  if (root["start"]) {
    c.start = vec(root["start"], "start");
    if (c.start.size() != n)
      throw ConfigError("'start' must have " + std::to_string(n) + " components");
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str(), std::filesystem::path(path).parent_path().string());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Vec dubins_rhs(const Vec& x, const Vec& u) {
  return Vec{u[0] * std::cos(x[2]), u[0] * std::sin(x[2]), u[1]};
}

std::vector<double> dubins_growth_bound(const Vec& u) {
  const double v = std::abs(u[0]);
  return {0, 0, v,  //
          0, 0, v,  //
          0, 0, 0};
}

Vec truck_rhs(const Vec& x, const Vec& u) {
  const double t = std::tan(u[1]);
  const double alpha = std::atan(t / 2);
  const double beta = 1.0 / std::cos(alpha);
  return Vec{x[3] * std::cos(alpha + x[2]) * beta, x[3] * std::sin(alpha + x[2]) * beta, x[3] * t, u[0]};
}

std::vector<double> truck_growth_bound(const Vec& u, const IntervalBox& cell, double tau, double w4_lo,
                                       double w4_hi) {
  const double t = std::tan(u[1]);
  const double beta = 1.0 / std::cos(std::atan(t / 2));
  /* x4' = u1 + w4 is state independent, so the velocity range over one period is explicit */
  const double lo = cell.lower(3) + std::min(0.0, (u[0] + w4_lo) * tau);
  const double hi = cell.upper(3) + std::max(0.0, (u[0] + w4_hi) * tau);
  const double vmax = std::max(std::abs(lo), std::abs(hi));
  return {0, 0, vmax * beta, beta,  //
          0, 0, vmax * beta, beta,  //
          0, 0, 0,           std::abs(t),  //
          0, 0, 0,           0};
}

Scenario::Scenario(ScenarioConfig config) : m_config(std::move(config)) {
  const auto& c = m_config;
  if (c.targets.size() < 2)
    throw ConfigError("at least two targets (depot first) are required");
  if (!continuous())
    return;

  const std::size_t n = c.state_dim();
  Vec eta(n);
  std::vector<double> period(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    eta[i] = (c.domain_upper[i] - c.domain_lower[i]) / static_cast<double>(c.counts[i]);
    if (c.periodic[i])
      period[i] = c.domain_upper[i] - c.domain_lower[i];
  }
  m_grid = UniformGrid(c.domain_lower, eta, c.counts, period);
  m_inputs = grid_inputs(c.input_lower, c.input_upper, c.input_counts);

  m_spec.state_dim = n;
  m_spec.input_dim = c.input_dim();
  m_spec.w_lower = c.w_lower;
  m_spec.w_upper = c.w_upper;
  m_spec.tau = c.tau;
  m_spec.substeps = c.substeps;
  if (c.dynamics == DynamicsKind::Dubins) {
    m_spec.rhs = dubins_rhs;
    m_growth.matrix = [](const Vec& u, const IntervalBox&) { return dubins_growth_bound(u); };
  } else {
    m_spec.rhs = truck_rhs;
    const double tau = c.tau, lo = c.w_lower[3], hi = c.w_upper[3];
    m_growth.matrix = [=](const Vec& u, const IntervalBox& cell) {
      return truck_growth_bound(u, cell, tau, lo, hi);
    };
  }
  m_spec.validate();

  for (std::size_t i = 0; i < c.targets.size(); ++i)
    if (m_grid.inner_cells(c.targets[i].boxes).empty())
      throw ConfigError("target '" + c.targets[i].name + "' contains no complete grid cell");
}

double Scenario::axis_distance(double px, double py) const {
  double d = kInfinity;
  for (const auto& s : m_config.cost.roadway_axes)
    d = std::min(d, segment_distance(s, px, py));
  return d;
}

bool Scenario::in_box(const Box& b, const Vec& x) const {
  for (std::size_t i = 0; i < b.lower.size(); ++i) {
    if (i < m_config.periodic.size() && m_config.periodic[i]) {
      const double p = m_config.domain_upper[i] - m_config.domain_lower[i];
      const double width = b.upper[i] - b.lower[i];
      if (width >= p)
        continue;
      double off = std::fmod(x[i] - b.lower[i], p);
      if (off < 0)
        off += p;
      if (off > width)
        return false;
    } else if (x[i] < b.lower[i] || x[i] > b.upper[i]) {
      return false;
    }
  }
  return true;
}

bool Scenario::is_obstacle(const Vec& x) const {
  const auto& c = m_config;
  for (std::size_t i = 0; i < c.state_dim(); ++i)
    if (!c.periodic[i] && (!(x[i] >= c.domain_lower[i]) || !(x[i] <= c.domain_upper[i])))
      return true;
  for (const auto& b : c.obstacles)
    if (in_box(b, x))
      return true;
  if (!c.cost.lanes.empty()) {
    for (const auto& b : c.cost.lanes)
      if (in_box(b, x))
        return false;
    return true;
  }
  return false;
}

bool Scenario::in_target(std::size_t i, const Vec& x) const {
  const auto& t = m_config.targets.at(i);
  if (!continuous()) {
    const auto s = static_cast<StateIndex>(x[0]);
    return std::find(t.states.begin(), t.states.end(), s) != t.states.end();
  }
  for (const auto& b : t.boxes)
    if (in_box(b, x))
      return true;
  return false;
}

Cost Scenario::running_cost(const Vec& x, const Vec& y, const Vec& u) const {
  if (is_obstacle(x))
    return kInfinity;
  const auto& r = m_config.cost;
  Cost g = m_config.tau + r.angular_rate_weight * u[1] * u[1];
  if (!r.roadway_axes.empty())
    g += r.distance_weight * axis_distance(y[0], y[1]);
  return g;
}

AbstractRunningCost Scenario::abstract_cost() const {
  AbstractRunningCost cost;
  cost.obstacle = [this](StateIndex c, const IntervalBox&) {
    for (const auto& b : m_config.obstacles)
      if (m_grid.cell_meets(c, b))
        return true;
    if (!m_config.cost.lanes.empty()) {
      for (const auto& b : m_config.cost.lanes)
        if (m_grid.cell_inside(c, b))
          return false;
      return true;
    }
    return false;
  };
  cost.finite_cost = [this](const IntervalBox&, const Vec& u, const IntervalBox& succ) {
    const auto& r = m_config.cost;
    Cost g = m_config.tau + r.angular_rate_weight * u[1] * u[1];
    if (!r.roadway_axes.empty())
      g += r.distance_weight *
           (axis_distance(succ.center[0], succ.center[1]) + std::hypot(succ.radius[0], succ.radius[1]));
    return g;
  };
  return cost;
}

std::vector<StateSet> Scenario::target_sets(std::size_t num_states) const {
  std::vector<StateSet> out;
  for (const auto& t : m_config.targets) {
    if (continuous()) {
      out.push_back(m_grid.inner_cells(t.boxes));
    } else {
      for (StateIndex s : t.states)
        if (s >= num_states)
          throw ConfigError("target '" + t.name + "' lists state " + std::to_string(s) + " beyond the graph");
      out.push_back(StateSet::from_indices(num_states, t.states));
    }
  }
  return out;
}

FiniteSystem Scenario::build_abstraction(unsigned threads) const {
  if (!continuous())
    return read_graph_file(m_config.graph_path);
  return dtsp::build_abstraction(m_spec, m_growth, m_grid, m_inputs, abstract_cost(), threads);
}

}  // namespace dtsp
