/*
 * grid.hpp
 *
 * Uniform hyper-rectangular grid over the state domain; the quantizer.
 */
#ifndef DTSP_GRID_HPP_
#define DTSP_GRID_HPP_

#include <cstdint>
#include <vector>

#include "dtsp/sampled_dynamics.hpp"
#include "dtsp/state_set.hpp"
#include "dtsp/vec.hpp"

namespace dtsp {

/* closed axis-aligned box [lower, upper]; periodic grid dimensions are matched modulo the period */
struct Box {
  Vec lower;
  Vec upper;
};

/**
 * @class UniformGrid
 *
 * @brief cells lower + [idx*eta, (idx+1)*eta) per dimension, plus one sink cell
 *
 * Cells are numbered row-major over the dimensions in declaration order (the
 * last dimension varies fastest). The sink has index num_cells() and stands
 * for everything outside the domain. A periodic dimension covers exactly one
 * period counts[i]*eta[i] and coordinates are wrapped into it.
 **/
class UniformGrid {
public:
  UniformGrid() = default;
  /* period[i] > 0 marks dimension i periodic; counts*eta must equal it within 1e-9 */
  UniformGrid(Vec lower, Vec eta, std::vector<std::uint64_t> counts, std::vector<double> period = {});

  std::size_t dim() const noexcept { return m_lower.size(); }
  std::size_t num_cells() const noexcept { return m_num_cells; }
  /* = num_cells() + 1 (sink included) */
  std::size_t num_states() const noexcept { return m_num_cells + 1; }
  StateIndex sink() const noexcept { return static_cast<StateIndex>(m_num_cells); }

  const Vec& lower() const noexcept { return m_lower; }
  const Vec& eta() const noexcept { return m_eta; }
  const std::vector<std::uint64_t>& counts() const noexcept { return m_counts; }
  bool periodic(std::size_t i) const noexcept { return m_period[i] > 0; }
  double period(std::size_t i) const noexcept { return m_period[i]; }
  double upper(std::size_t i) const noexcept { return m_lower[i] + static_cast<double>(m_counts[i]) * m_eta[i]; }

  /* cell whose half-open box contains p, or sink */
  StateIndex quantize(const Vec& p) const;
  /* closed box of a non-sink cell; UsageError for the sink */
  IntervalBox cell_box(StateIndex c) const;

  std::vector<std::uint64_t> multi_index(StateIndex c) const;
  StateIndex flat_index(const std::vector<std::uint64_t>& idx) const;

  /* sorted cells whose half-open boxes meet the closed box b; sink appended if b leaves the domain */
  void cells_intersecting(const IntervalBox& b, std::vector<StateIndex>& out) const;

  /* membership tests of a cell against a closed region box (dimensions beyond region are ignored) */
  bool cell_inside(StateIndex c, const Box& region) const;
  bool cell_meets(StateIndex c, const Box& region) const;

  /* inner approximation: cells contained in at least one of the boxes */
  StateSet inner_cells(const std::vector<Box>& region) const;
  /* outer approximation: cells meeting at least one of the boxes */
  StateSet outer_cells(const std::vector<Box>& region) const;

  /* FNV-1a over the grid metadata; used to bind result files to their grid */
  std::uint64_t metadata_hash() const;

  friend bool operator==(const UniformGrid& a, const UniformGrid& b) {
    return a.m_lower == b.m_lower && a.m_eta == b.m_eta && a.m_counts == b.m_counts && a.m_period == b.m_period;
  }

private:
  double wrap(std::size_t i, double v) const noexcept;

  Vec m_lower;
  Vec m_eta;
  std::vector<std::uint64_t> m_counts;
  std::vector<double> m_period;
  std::vector<std::uint64_t> m_stride;
  std::size_t m_num_cells = 0;
};

}  // namespace dtsp

#endif  // DTSP_GRID_HPP_
