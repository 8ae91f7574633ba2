/*
 * state_set.hpp
 */
#ifndef DTSP_STATE_SET_HPP_
#define DTSP_STATE_SET_HPP_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dtsp {

using StateIndex = std::uint32_t;

/**
 * @class StateSet
 *
 * @brief subset of {0, ..., universe-1} stored as a packed bitset
 **/
class StateSet {
public:
  StateSet() = default;
  explicit StateSet(std::size_t universe, bool full = false);

  static StateSet from_indices(std::size_t universe, const std::vector<StateIndex>& indices);

  std::size_t universe() const noexcept { return m_universe; }
  bool contains(StateIndex x) const noexcept {
    return x < m_universe && ((m_words[x >> 6] >> (x & 63)) & 1u);
  }
  void insert(StateIndex x);
  void erase(StateIndex x);

  std::size_t count() const noexcept;
  bool empty() const noexcept;

  /* in-place set algebra; both operands must share the universe */
  StateSet& operator-=(const StateSet& other);
  StateSet& operator|=(const StateSet& other);
  StateSet& operator&=(const StateSet& other);
  bool intersects(const StateSet& other) const;
  bool is_subset_of(const StateSet& other) const;

  std::vector<StateIndex> to_indices() const;

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < m_words.size(); ++w) {
      std::uint64_t bits = m_words[w];
      while (bits) {
        const int b = std::countr_zero(bits);
        f(static_cast<StateIndex>(w * 64 + static_cast<std::size_t>(b)));
        bits &= bits - 1;
      }
    }
  }

  const std::vector<std::uint64_t>& words() const noexcept { return m_words; }
  static StateSet from_words(std::size_t universe, std::vector<std::uint64_t> words);

  friend bool operator==(const StateSet& a, const StateSet& b) = default;

private:
  void check_compatible(const StateSet& other) const;

  std::size_t m_universe = 0;
  std::vector<std::uint64_t> m_words;
};

inline StateSet operator-(StateSet a, const StateSet& b) { return a -= b; }
inline StateSet operator|(StateSet a, const StateSet& b) { return a |= b; }
inline StateSet operator&(StateSet a, const StateSet& b) { return a &= b; }

}  // namespace dtsp

#endif  // DTSP_STATE_SET_HPP_
