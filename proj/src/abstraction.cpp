#include "dtsp/abstraction.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include "dtsp/binary_io.hpp"
#include "dtsp/errors.hpp"

namespace dtsp {

InputSample grid_inputs(const Vec& lower, const Vec& upper, const std::vector<std::size_t>& counts) {
  const std::size_t m = lower.size();
  if (upper.size() != m || counts.size() != m || m == 0)
    throw UsageError("grid_inputs: dimension mismatch");
  std::size_t total = 1;
  for (std::size_t i = 0; i < m; ++i) {
    if (counts[i] < 1 || !(lower[i] <= upper[i]))
      throw UsageError("grid_inputs: bad bounds or counts");
    total *= counts[i];
  }
  InputSample s;
  s.values.reserve(total);
  std::vector<std::size_t> k(m, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Vec u(m);
    for (std::size_t i = 0; i < m; ++i)
      u[i] = counts[i] == 1 ? 0.5 * (lower[i] + upper[i])
                            : lower[i] + (upper[i] - lower[i]) * static_cast<double>(k[i]) /
                                             static_cast<double>(counts[i] - 1);
    s.values.push_back(u);
    for (std::size_t i = m; i-- > 0;) {
      if (++k[i] < counts[i])
        break;
      k[i] = 0;
    }
  }
  return s;
}

namespace {

struct Chunk {
  std::vector<std::uint64_t> counts;  // successors per pair
  std::vector<StateIndex> successors;
  std::vector<Cost> costs;
};

void build_range(const VectorFieldSpec& spec, const GrowthBoundModel& model, const UniformGrid& grid,
                 const InputSample& inputs, const AbstractRunningCost& cost, StateIndex first,
                 StateIndex last, Chunk& out) {
  std::vector<StateIndex> cells;
  const std::size_t m = inputs.values.size();
  out.counts.reserve(static_cast<std::size_t>(last - first) * m);
  out.costs.reserve(static_cast<std::size_t>(last - first) * m);
  for (StateIndex c = first; c < last; ++c) {
    const IntervalBox box = grid.cell_box(c);
    const bool blocked = cost.obstacle && cost.obstacle(c, box);
    for (std::size_t k = 0; k < m; ++k) {
      const Vec& u = inputs.values[k];
      const IntervalBox post = overapprox_successor(spec, model, box, u);
      grid.cells_intersecting(post, cells);
      /* a nonempty box always meets some cell or leaves the domain */
      if (cells.empty())
        throw std::logic_error("build_abstraction: empty successor set");
      out.counts.push_back(cells.size());
      out.successors.insert(out.successors.end(), cells.begin(), cells.end());
      Cost g = kInfinity;
      if (!blocked)
        g = cost.finite_cost ? cost.finite_cost(box, u, post) : Cost{0};
      out.costs.push_back(g);
    }
  }
}

}  // namespace

FiniteSystem build_abstraction(const VectorFieldSpec& spec, const GrowthBoundModel& model,
                               const UniformGrid& grid, const InputSample& inputs,
                               const AbstractRunningCost& cost, unsigned threads) {
  spec.validate();
  if (spec.state_dim != grid.dim())
    throw UsageError("build_abstraction: grid and dynamics dimensions differ");
  if (inputs.values.empty())
    throw UsageError("build_abstraction: empty input sample");
  for (const auto& u : inputs.values)
    if (u.size() != spec.input_dim)
      throw UsageError("build_abstraction: input sample value has wrong dimension");

  const auto cells = static_cast<StateIndex>(grid.num_cells());
  const std::size_t m = inputs.values.size();
  if (threads == 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<StateIndex>(1, cells));

  std::vector<Chunk> chunks(threads);
  std::vector<std::exception_ptr> errors(threads);
  auto bounds = [&](unsigned t) {
    return static_cast<StateIndex>(static_cast<std::uint64_t>(cells) * t / threads);
  };
  auto work = [&](unsigned t) {
    try {
      build_range(spec, model, grid, inputs, cost, bounds(t), bounds(t + 1), chunks[t]);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back(work, t);
    for (auto& th : pool)
      th.join();
  }
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);

  const std::size_t pairs = grid.num_states() * m;
  std::vector<std::uint64_t> offsets;
  offsets.reserve(pairs + 1);
  offsets.push_back(0);
  std::vector<StateIndex> succ;
  std::vector<Cost> pair_cost;
  pair_cost.reserve(pairs);
  std::size_t total = m;
  for (const auto& ch : chunks)
    total += ch.successors.size();
  succ.reserve(total);
  for (auto& ch : chunks) {
    for (auto n : ch.counts)
      offsets.push_back(offsets.back() + n);
    succ.insert(succ.end(), ch.successors.begin(), ch.successors.end());
    pair_cost.insert(pair_cost.end(), ch.costs.begin(), ch.costs.end());
    ch = Chunk{};
  }
  for (std::size_t k = 0; k < m; ++k) {
    offsets.push_back(offsets.back() + 1);
    succ.push_back(grid.sink());
    pair_cost.push_back(kInfinity);
  }
  return FiniteSystem(grid.num_states(), m, std::move(offsets), std::move(succ), std::move(pair_cost));
}

void save_abstraction(const std::string& path, const UniformGrid& grid, const InputSample& inputs,
                      const FiniteSystem& system) {
  if (system.has_edge_costs())
    throw UsageError("save_abstraction: only per-pair costs are supported");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write abstraction cache '" + path + "'");
  using namespace bin;
  write_magic(out, "DTSPABS1");
  const std::size_t n = grid.dim();
  write_u64(out, n);
  for (std::size_t i = 0; i < n; ++i)
    write_f64(out, grid.lower()[i]);
  for (std::size_t i = 0; i < n; ++i)
    write_f64(out, grid.eta()[i]);
  for (std::size_t i = 0; i < n; ++i)
    write_u64(out, grid.counts()[i]);
  for (std::size_t i = 0; i < n; ++i)
    write_u64(out, grid.periodic(i) ? 1 : 0);
  for (std::size_t i = 0; i < n; ++i)
    write_f64(out, grid.period(i));
  write_u64(out, inputs.values.size());
  write_u64(out, inputs.values.empty() ? 0 : inputs.values.front().size());
  for (const auto& u : inputs.values)
    for (double v : u)
      write_f64(out, v);
  write_u64(out, system.num_states());
  write_u64(out, system.num_inputs());
  for (auto o : system.offsets())
    write_u64(out, o);
  write_u64(out, system.flat_successors().size());
  for (auto y : system.flat_successors())
    write_u64(out, y);
  for (auto c : system.pair_costs())
    write_f64(out, c);
  if (!out)
    throw std::runtime_error("failed writing abstraction cache '" + path + "'");
}

AbstractionCache load_abstraction(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ParseError("cannot open abstraction cache '" + path + "'");
  using namespace bin;
  expect_magic(in, "DTSPABS1");
  const auto n = read_count(in, kMaxDim, "dimension");
  Vec lower(n), eta(n);
  std::vector<std::uint64_t> counts(n);
  std::vector<double> period(n);
  for (auto& v : lower)
    v = read_f64(in);
  for (auto& v : eta)
    v = read_f64(in);
  for (auto& v : counts)
    v = read_u64(in);
  std::vector<std::uint64_t> flags(n);
  for (auto& v : flags)
    v = read_u64(in);
  for (std::size_t i = 0; i < n; ++i) {
    period[i] = read_f64(in);
    if (!flags[i])
      period[i] = 0;
  }
  AbstractionCache cache;
  try {
    cache.grid = UniformGrid(lower, eta, counts, period);
  } catch (const UsageError& e) {
    throw ParseError(std::string("abstraction cache: ") + e.what());
  }
  const auto m = read_count(in, 1u << 20, "input count");
  const auto mdim = read_count(in, kMaxDim, "input dimension");
  cache.inputs.values.assign(m, Vec(mdim));
  for (auto& u : cache.inputs.values)
    for (auto& v : u)
      v = read_f64(in);
  const auto states = read_u64(in);
  const auto inputs = read_u64(in);
  if (states != cache.grid.num_states() || inputs != m)
    throw ParseError("abstraction cache: system size does not match grid and inputs");
  std::vector<std::uint64_t> offsets(states * inputs + 1);
  for (auto& o : offsets)
    o = read_u64(in);
  const auto nsucc = read_count(in, std::uint64_t{1} << 34, "successor count");
  std::vector<StateIndex> succ(nsucc);
  for (auto& y : succ) {
    const auto v = read_u64(in);
    if (v >= states)
      throw ParseError("abstraction cache: successor out of range");
    y = static_cast<StateIndex>(v);
  }
  std::vector<Cost> cost(states * inputs);
  for (auto& c : cost)
    c = read_f64(in);
  try {
    cache.system = FiniteSystem(states, inputs, std::move(offsets), std::move(succ), std::move(cost));
  } catch (const UsageError& e) {
    throw ParseError(std::string("abstraction cache: ") + e.what());
  }
  return cache;
}

}  // namespace dtsp
