#include "dtsp/state_set.hpp"

#include <string>

#include "dtsp/errors.hpp"

namespace dtsp {

StateSet::StateSet(std::size_t universe, bool full)
    : m_universe(universe), m_words((universe + 63) / 64, full ? ~std::uint64_t{0} : 0) {
  if (full && (universe & 63))
    m_words.back() = (std::uint64_t{1} << (universe & 63)) - 1;
}

StateSet StateSet::from_indices(std::size_t universe, const std::vector<StateIndex>& indices) {
  StateSet s(universe);
  for (StateIndex x : indices)
    s.insert(x);
  return s;
}

StateSet StateSet::from_words(std::size_t universe, std::vector<std::uint64_t> words) {
  if (words.size() != (universe + 63) / 64)
    throw ParseError("StateSet: word count does not match universe");
  if ((universe & 63) && (words.back() >> (universe & 63)))
    throw ParseError("StateSet: bits set beyond universe");
  StateSet s;
  s.m_universe = universe;
  s.m_words = std::move(words);
  return s;
}

void StateSet::insert(StateIndex x) {
  if (x >= m_universe)
    throw UsageError("StateSet::insert: index " + std::to_string(x) + " out of range");
  m_words[x >> 6] |= std::uint64_t{1} << (x & 63);
}

void StateSet::erase(StateIndex x) {
  if (x >= m_universe)
    throw UsageError("StateSet::erase: index " + std::to_string(x) + " out of range");
  m_words[x >> 6] &= ~(std::uint64_t{1} << (x & 63));
}

std::size_t StateSet::count() const noexcept {
  std::size_t c = 0;
  for (auto w : m_words)
    c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

bool StateSet::empty() const noexcept {
  for (auto w : m_words)
    if (w)
      return false;
  return true;
}

void StateSet::check_compatible(const StateSet& other) const {
  if (other.m_universe != m_universe)
    throw UsageError("StateSet: universes differ");
}

StateSet& StateSet::operator-=(const StateSet& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < m_words.size(); ++i)
    m_words[i] &= ~other.m_words[i];
  return *this;
}

StateSet& StateSet::operator|=(const StateSet& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < m_words.size(); ++i)
    m_words[i] |= other.m_words[i];
  return *this;
}

StateSet& StateSet::operator&=(const StateSet& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < m_words.size(); ++i)
    m_words[i] &= other.m_words[i];
  return *this;
}

bool StateSet::intersects(const StateSet& other) const {
  check_compatible(other);
  for (std::size_t i = 0; i < m_words.size(); ++i)
    if (m_words[i] & other.m_words[i])
      return true;
  return false;
}

bool StateSet::is_subset_of(const StateSet& other) const {
  check_compatible(other);
  for (std::size_t i = 0; i < m_words.size(); ++i)
    if (m_words[i] & ~other.m_words[i])
      return false;
  return true;
}

std::vector<StateIndex> StateSet::to_indices() const {
  std::vector<StateIndex> out;
  out.reserve(count());
  for_each([&](StateIndex x) { out.push_back(x); });
  return out;
}

}  // namespace dtsp
