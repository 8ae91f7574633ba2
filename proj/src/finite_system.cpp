#include "dtsp/finite_system.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "dtsp/errors.hpp"

namespace dtsp {

namespace {

void check_cost(Cost c) {
  if (std::isnan(c) || c < 0)
    throw UsageError("FiniteSystem: step costs must be nonnegative (got " + std::to_string(c) + ")");
}

}  // namespace

FiniteSystem::FiniteSystem(std::size_t num_states, std::size_t num_inputs,
                           std::vector<std::uint64_t> offsets, std::vector<StateIndex> successors,
                           std::vector<Cost> pair_cost, std::vector<Cost> edge_cost)
    : m_num_states(num_states),
      m_num_inputs(num_inputs),
      m_offsets(std::move(offsets)),
      m_successors(std::move(successors)),
      m_pair_cost(std::move(pair_cost)),
      m_edge_cost(std::move(edge_cost)) {
  if (num_states == 0 || num_inputs == 0)
    throw UsageError("FiniteSystem: need at least one state and one input");
  if (num_states > std::numeric_limits<StateIndex>::max())
    throw UsageError("FiniteSystem: too many states for 32-bit indices");
  const std::size_t pairs = num_states * num_inputs;
  if (pairs >= std::numeric_limits<std::uint32_t>::max())
    throw UsageError("FiniteSystem: too many (state, input) pairs for 32-bit reverse index");
  if (m_offsets.size() != pairs + 1 || m_offsets.front() != 0 || m_offsets.back() != m_successors.size())
    throw UsageError("FiniteSystem: offset table inconsistent with successor array");
  if (m_edge_cost.empty() && m_pair_cost.size() != pairs)
    throw UsageError("FiniteSystem: pair cost table has wrong size");
  if (!m_edge_cost.empty() && m_edge_cost.size() != m_successors.size())
    throw UsageError("FiniteSystem: edge cost table has wrong size");

  for (std::size_t p = 0; p < pairs; ++p) {
    const auto b = m_offsets[p], e = m_offsets[p + 1];
    if (e <= b)
      throw UsageError("FiniteSystem: (state " + std::to_string(p / num_inputs) + ", input " +
                       std::to_string(p % num_inputs) + ") has no successor");
    for (auto i = b; i < e; ++i) {
      if (m_successors[i] >= num_states)
        throw UsageError("FiniteSystem: successor index out of range");
      if (i > b && m_successors[i] <= m_successors[i - 1])
        throw UsageError("FiniteSystem: successor lists must be sorted and duplicate free");
    }
  }
  for (Cost c : m_pair_cost)
    check_cost(c);
  for (Cost c : m_edge_cost)
    check_cost(c);
  for (Cost c : m_edge_cost.empty() ? m_pair_cost : m_edge_cost)
    if (is_finite(c))
      m_min_finite_cost = std::min(m_min_finite_cost, c);

  /* reverse index by counting sort over the successor array */
  m_pred_offsets.assign(num_states + 1, 0);
  for (StateIndex y : m_successors)
    ++m_pred_offsets[y + 1];
  for (std::size_t y = 0; y < num_states; ++y)
    m_pred_offsets[y + 1] += m_pred_offsets[y];
  m_pred.resize(m_successors.size());
  std::vector<std::uint64_t> fill(m_pred_offsets.begin(), m_pred_offsets.end() - 1);
  for (std::size_t p = 0; p < pairs; ++p)
    for (auto i = m_offsets[p]; i < m_offsets[p + 1]; ++i)
      m_pred[fill[m_successors[i]]++] = static_cast<std::uint32_t>(p);
}

void FiniteSystem::check_indices(StateIndex x, InputIndex u) const {
  if (x >= m_num_states)
    throw UsageError("FiniteSystem: state " + std::to_string(x) + " out of range");
  if (u >= m_num_inputs)
    throw UsageError("FiniteSystem: input " + std::to_string(u) + " out of range");
}

std::span<const StateIndex> FiniteSystem::successors(StateIndex x, InputIndex u) const {
  check_indices(x, u);
  return successors_of_pair(pair(x, u));
}

Cost FiniteSystem::step_cost(StateIndex x, StateIndex y, InputIndex u) const {
  check_indices(x, u);
  const auto p = pair(x, u);
  const auto succ = successors_of_pair(p);
  const auto it = std::lower_bound(succ.begin(), succ.end(), y);
  if (it == succ.end() || *it != y)
    return kInfinity;
  return edge_cost(p, static_cast<std::size_t>(it - succ.begin()));
}

Cost FiniteSystem::worst_case_step_cost(StateIndex x, InputIndex u) const {
  check_indices(x, u);
  const auto p = pair(x, u);
  if (m_edge_cost.empty())
    return m_pair_cost[p];
  Cost worst = 0;
  const std::size_t n = m_offsets[p + 1] - m_offsets[p];
  for (std::size_t i = 0; i < n; ++i)
    worst = std::max(worst, edge_cost(p, i));
  return worst;
}

FiniteSystemBuilder::FiniteSystemBuilder(std::size_t num_states, std::size_t num_inputs)
    : m_num_states(num_states), m_num_inputs(num_inputs) {
  if (num_states == 0 || num_inputs == 0)
    throw UsageError("FiniteSystemBuilder: need at least one state and one input");
}

FiniteSystemBuilder& FiniteSystemBuilder::add(StateIndex x, InputIndex u, StateIndex y, Cost cost) {
  if (x >= m_num_states || y >= m_num_states || u >= m_num_inputs)
    throw UsageError("FiniteSystemBuilder: transition (" + std::to_string(x) + "," + std::to_string(u) +
                     "," + std::to_string(y) + ") out of range");
  check_cost(cost);
  const auto key = std::make_pair(static_cast<PairIndex>(x) * m_num_inputs + u, y);
  auto [it, inserted] = m_edges.emplace(key, cost);
  if (!inserted)
    it->second = std::max(it->second, cost);
  return *this;
}

FiniteSystemBuilder& FiniteSystemBuilder::add_absorbing(StateIndex y, Cost cost) {
  for (InputIndex u = 0; u < m_num_inputs; ++u)
    add(y, u, y, cost);
  return *this;
}

FiniteSystem FiniteSystemBuilder::build() const {
  const std::size_t pairs = m_num_states * m_num_inputs;
  std::vector<std::uint64_t> offsets(pairs + 1, 0);
  std::vector<StateIndex> succ;
  std::vector<Cost> cost;
  succ.reserve(m_edges.size());
  cost.reserve(m_edges.size());
  /* std::map iterates in (pair, successor) order, which is the CSR order */
  for (const auto& [key, c] : m_edges) {
    ++offsets[key.first + 1];
    succ.push_back(key.second);
    cost.push_back(c);
  }
  for (std::size_t p = 0; p < pairs; ++p)
    offsets[p + 1] += offsets[p];
  return FiniteSystem(m_num_states, m_num_inputs, std::move(offsets), std::move(succ), {},
                      std::move(cost));
}

FiniteSystem read_graph(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos)
        line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        return true;
    }
    return false;
  };

  if (!next_line())
    throw ParseError("graph: missing header 'states N inputs M'", lineno);
  std::istringstream header(line);
  std::string kw1, kw2;
  long long n = 0, m = 0;
  if (!(header >> kw1 >> n >> kw2 >> m) || kw1 != "states" || kw2 != "inputs" || n <= 0 || m <= 0)
    throw ParseError("graph: expected header 'states N inputs M'", lineno);

  FiniteSystemBuilder builder(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
  while (next_line()) {
    std::istringstream ls(line);
    long long x, u, y;
    std::string cost_text;
    if (!(ls >> x >> u >> y >> cost_text))
      throw ParseError("graph: expected 'x u y cost'", lineno);
    Cost c;
    if (cost_text == "inf" || cost_text == "INF" || cost_text == "Inf") {
      c = kInfinity;
    } else {
      std::size_t used = 0;
      try {
        c = std::stod(cost_text, &used);
      } catch (const std::exception&) {
        throw ParseError("graph: bad cost '" + cost_text + "'", lineno);
      }
      if (used != cost_text.size())
        throw ParseError("graph: bad cost '" + cost_text + "'", lineno);
    }
    if (x < 0 || u < 0 || y < 0 || x >= n || y >= n || u >= m)
      throw ParseError("graph: index out of range", lineno);
    if (std::isnan(c) || c < 0)
      throw ParseError("graph: negative cost", lineno);
    builder.add(static_cast<StateIndex>(x), static_cast<InputIndex>(u), static_cast<StateIndex>(y), c);
  }
  try {
    return builder.build();
  } catch (const UsageError& e) {
    throw ParseError(std::string("graph: ") + e.what());
  }
}

FiniteSystem read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open graph file '" + path + "'");
  return read_graph(in);
}

void write_graph(std::ostream& out, const FiniteSystem& sys) {
  out << "states " << sys.num_states() << " inputs " << sys.num_inputs() << "\n";
  out.precision(17);
  for (StateIndex x = 0; x < sys.num_states(); ++x)
    for (InputIndex u = 0; u < sys.num_inputs(); ++u) {
      const auto p = sys.pair(x, u);
      const auto succ = sys.successors_of_pair(p);
      for (std::size_t i = 0; i < succ.size(); ++i) {
        const Cost c = sys.edge_cost(p, i);
        out << x << ' ' << u << ' ' << succ[i] << ' ';
        if (is_finite(c))
          out << c;
        else
          out << "inf";
        out << '\n';
      }
    }
}

}  // namespace dtsp
