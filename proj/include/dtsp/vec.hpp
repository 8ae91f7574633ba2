/*
 * vec.hpp
 *
 * Small fixed-capacity real vector used for states, inputs and radii.
 */
#ifndef DTSP_VEC_HPP_
#define DTSP_VEC_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtsp {

/** @brief maximal state or input dimension supported by Vec */
inline constexpr std::size_t kMaxDim = 8;

/**
 * @class Vec
 *
 * @brief value-semantic vector with inline storage (no heap allocation)
 *
 * The abstraction kernel evaluates the vector field millions of times, so the
 * state and input carriers avoid dynamic allocation.
 **/
class Vec {
public:
  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : m_size(n) {
    if (n > kMaxDim)
      throw std::invalid_argument("Vec: dimension " + std::to_string(n) + " exceeds kMaxDim");
    std::fill_n(m_data.begin(), n, fill);
  }
  Vec(std::initializer_list<double> values) : Vec(values.size()) {
    std::copy(values.begin(), values.end(), m_data.begin());
  }
  explicit Vec(std::span<const double> values) : Vec(values.size()) {
    std::copy(values.begin(), values.end(), m_data.begin());
  }

  std::size_t size() const noexcept { return m_size; }
  double& operator[](std::size_t i) noexcept { return m_data[i]; }
  double operator[](std::size_t i) const noexcept { return m_data[i]; }

  double* begin() noexcept { return m_data.data(); }
  double* end() noexcept { return m_data.data() + m_size; }
  const double* begin() const noexcept { return m_data.data(); }
  const double* end() const noexcept { return m_data.data() + m_size; }

  std::span<const double> span() const noexcept { return {m_data.data(), m_size}; }
  std::vector<double> to_vector() const { return {begin(), end()}; }

  friend bool operator==(const Vec& a, const Vec& b) noexcept {
    return a.m_size == b.m_size && std::equal(a.begin(), a.end(), b.begin());
  }

private:
  std::array<double, kMaxDim> m_data{};
  std::size_t m_size = 0;
};

/* x + h*dx, componentwise */
inline Vec axpy(const Vec& x, double h, const Vec& dx) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    r[i] = x[i] + h * dx[i];
  return r;
}

std::string to_string(const Vec& v);

}  // namespace dtsp

#endif  // DTSP_VEC_HPP_
