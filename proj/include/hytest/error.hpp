#ifndef HYTEST_ERROR_HPP_
#define HYTEST_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hytest {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position()` is the 0-based byte offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// A document or expression failed name resolution, typing or schema checks.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Runtime failure while evaluating an expression (division by zero, NaN, ...).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state, exhausted step budget or an evaluation failure during a run.
class SimulationError : public Error {
 public:
  using Error::Error;
};

/// Observed behaviour fits no test condition: the hybrid model is incomplete.
class ModelDefectError : public Error {
 public:
  ModelDefectError(const std::string& what, std::size_t sample_index)
      : Error(what), sample_index_(sample_index) {}
  std::size_t sample_index() const noexcept { return sample_index_; }

 private:
  std::size_t sample_index_;
};

/// Projected input grid exceeds the configured cardinality cap.
class GridTooLargeError : public Error {
 public:
  using Error::Error;
};

}  // namespace hytest

#endif  // HYTEST_ERROR_HPP_
