/*
 * errors.hpp
 */
#ifndef DTSP_ERRORS_HPP_
#define DTSP_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dtsp {

/* caller violated a precondition (bad index, negative radius, ...) */
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/* non-finite numbers produced while integrating */
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/* malformed text or binary input; line is 0 when not applicable */
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        m_line(line) {}
  std::size_t line() const noexcept { return m_line; }

private:
  std::size_t m_line;
};

/* problem size beyond what an exact algorithm accepts */
class CapacityError : public std::length_error {
public:
  using std::length_error::length_error;
};

}  // namespace dtsp

#endif  // DTSP_ERRORS_HPP_
