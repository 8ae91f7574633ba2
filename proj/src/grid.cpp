#include "dtsp/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "dtsp/errors.hpp"

namespace dtsp {

namespace {

constexpr double kTol = 1e-9;

}  // namespace

UniformGrid::UniformGrid(Vec lower, Vec eta, std::vector<std::uint64_t> counts, std::vector<double> period)
    : m_lower(lower), m_eta(eta), m_counts(std::move(counts)), m_period(std::move(period)) {
  const std::size_t n = m_lower.size();
  if (n == 0 || m_eta.size() != n || m_counts.size() != n)
    throw UsageError("UniformGrid: lower, eta and counts must have the same nonzero dimension");
  if (m_period.empty())
    m_period.assign(n, 0.0);
  if (m_period.size() != n)
    throw UsageError("UniformGrid: period vector has wrong dimension");
  m_num_cells = 1;
  m_stride.assign(n, 1);
  for (std::size_t i = n; i-- > 0;) {
    if (!(m_eta[i] > 0))
      throw UsageError("UniformGrid: eta must be positive");
    if (m_counts[i] < 1)
      throw UsageError("UniformGrid: counts must be at least 1");
    if (m_period[i] > 0 &&
        std::abs(static_cast<double>(m_counts[i]) * m_eta[i] - m_period[i]) > 1e-9 * std::max(1.0, m_period[i]))
      throw UsageError("UniformGrid: periodic dimension " + std::to_string(i) +
                       " is not covered exactly by counts*eta");
    m_stride[i] = m_num_cells;
    m_num_cells *= m_counts[i];
    if (m_num_cells >= std::numeric_limits<StateIndex>::max())
      throw UsageError("UniformGrid: too many cells for 32-bit indices");
  }
}

double UniformGrid::wrap(std::size_t i, double v) const noexcept {
  const double P = m_period[i];
  double r = std::fmod(v - m_lower[i], P);
  if (r < 0)
    r += P;
  if (r >= P)
    r = 0;
  return m_lower[i] + r;
}

StateIndex UniformGrid::quantize(const Vec& p) const {
  if (p.size() != dim())
    throw UsageError("UniformGrid::quantize: dimension mismatch");
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < dim(); ++i) {
    double v = p[i];
    if (!std::isfinite(v))
      return sink();
    if (periodic(i))
      v = wrap(i, v);
    const double k = std::floor((v - m_lower[i]) / m_eta[i]);
    std::int64_t idx;
    if (periodic(i)) {
      idx = std::clamp<std::int64_t>(static_cast<std::int64_t>(k), 0, static_cast<std::int64_t>(m_counts[i]) - 1);
    } else {
      if (k < 0 || k >= static_cast<double>(m_counts[i]))
        return sink();
      idx = static_cast<std::int64_t>(k);
    }
    c += static_cast<std::uint64_t>(idx) * m_stride[i];
  }
  return static_cast<StateIndex>(c);
}

std::vector<std::uint64_t> UniformGrid::multi_index(StateIndex c) const {
  if (c >= m_num_cells)
    throw UsageError("UniformGrid: cell index " + std::to_string(c) + " is the sink or out of range");
  std::vector<std::uint64_t> idx(dim());
  for (std::size_t i = 0; i < dim(); ++i)
    idx[i] = (c / m_stride[i]) % m_counts[i];
  return idx;
}

StateIndex UniformGrid::flat_index(const std::vector<std::uint64_t>& idx) const {
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (idx[i] >= m_counts[i])
      throw UsageError("UniformGrid: multi-index out of range");
    c += idx[i] * m_stride[i];
  }
  return static_cast<StateIndex>(c);
}

IntervalBox UniformGrid::cell_box(StateIndex c) const {
  if (c == sink())
    throw UsageError("UniformGrid::cell_box: the sink cell has no box");
  const auto idx = multi_index(c);
  IntervalBox b{Vec(dim()), Vec(dim())};
  for (std::size_t i = 0; i < dim(); ++i) {
    b.center[i] = m_lower[i] + (static_cast<double>(idx[i]) + 0.5) * m_eta[i];
    b.radius[i] = 0.5 * m_eta[i];
  }
  return b;
}

void UniformGrid::cells_intersecting(const IntervalBox& b, std::vector<StateIndex>& out) const {
  out.clear();
  bool escapes = false;
  std::vector<std::uint64_t> first(dim()), len(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    const double lo = b.lower(i), hi = b.upper(i);
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      out.push_back(sink());
      return;
    }
    const auto count = static_cast<std::int64_t>(m_counts[i]);
    if (periodic(i)) {
      if (hi - lo >= m_period[i]) {
        first[i] = 0;
        len[i] = m_counts[i];
        continue;
      }
      const auto a = static_cast<std::int64_t>(std::floor((lo - m_lower[i]) / m_eta[i]));
      const auto z = static_cast<std::int64_t>(std::floor((hi - m_lower[i]) / m_eta[i]));
      len[i] = static_cast<std::uint64_t>(std::min<std::int64_t>(z - a + 1, count));
      first[i] = static_cast<std::uint64_t>(((a % count) + count) % count);
    } else {
      if (lo < m_lower[i] || hi >= upper(i))
        escapes = true;
      const double kl = std::floor((lo - m_lower[i]) / m_eta[i]);
      const double kh = std::floor((hi - m_lower[i]) / m_eta[i]);
      const auto a = static_cast<std::int64_t>(std::max(kl, 0.0));
      const auto z = static_cast<std::int64_t>(std::min(kh, static_cast<double>(count - 1)));
      if (a > z) {
        out.push_back(sink());
        return;
      }
      first[i] = static_cast<std::uint64_t>(a);
      len[i] = static_cast<std::uint64_t>(z - a + 1);
    }
  }

  std::vector<std::uint64_t> k(dim(), 0);
  while (true) {
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < dim(); ++i)
      c += ((first[i] + k[i]) % m_counts[i]) * m_stride[i];
    out.push_back(static_cast<StateIndex>(c));
    std::size_t i = dim();
    while (i-- > 0) {
      if (++k[i] < len[i])
        break;
      k[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1))
      break;
  }
  std::sort(out.begin(), out.end());
  if (escapes)
    out.push_back(sink());
}

bool UniformGrid::cell_inside(StateIndex c, const Box& region) const {
  const auto idx = multi_index(c);
  for (std::size_t i = 0; i < std::min(dim(), region.lower.size()); ++i) {
    const double a = m_lower[i] + static_cast<double>(idx[i]) * m_eta[i];
    const double b = a + m_eta[i];
    const double lo = region.lower[i], hi = region.upper[i];
    if (periodic(i)) {
      const double P = m_period[i];
      if (hi - lo >= P - kTol)
        continue;
      const double k = std::floor((a - lo + kTol) / P);
      if (b - k * P > hi + kTol)
        return false;
    } else if (a < lo - kTol || b > hi + kTol) {
      return false;
    }
  }
  return true;
}

bool UniformGrid::cell_meets(StateIndex c, const Box& region) const {
  const auto idx = multi_index(c);
  for (std::size_t i = 0; i < std::min(dim(), region.lower.size()); ++i) {
    const double a = m_lower[i] + static_cast<double>(idx[i]) * m_eta[i];
    const double b = a + m_eta[i];
    const double lo = region.lower[i], hi = region.upper[i];
    if (periodic(i)) {
      const double P = m_period[i];
      if (hi - lo >= P)
        continue;
      const double k0 = std::ceil((lo - b) / P);
      bool hit = false;
      for (double k = k0 - 1; k <= k0 + 1 && !hit; k += 1)
        hit = a + k * P <= hi && b + k * P > lo;
      if (!hit)
        return false;
    } else if (!(a <= hi && b > lo)) {
      return false;
    }
  }
  return true;
}

StateSet UniformGrid::inner_cells(const std::vector<Box>& region) const {
  StateSet s(num_states());
  for (StateIndex c = 0; c < m_num_cells; ++c)
    for (const auto& b : region)
      if (cell_inside(c, b)) {
        s.insert(c);
        break;
      }
  return s;
}

StateSet UniformGrid::outer_cells(const std::vector<Box>& region) const {
  StateSet s(num_states());
  for (StateIndex c = 0; c < m_num_cells; ++c)
    for (const auto& b : region)
      if (cell_meets(c, b)) {
        s.insert(c);
        break;
      }
  return s;
}

std::uint64_t UniformGrid::metadata_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    mix(std::bit_cast<std::uint64_t>(m_lower[i]));
    mix(std::bit_cast<std::uint64_t>(m_eta[i]));
    mix(m_counts[i]);
    mix(std::bit_cast<std::uint64_t>(m_period[i]));
  }
  return h;
}

}  // namespace dtsp
