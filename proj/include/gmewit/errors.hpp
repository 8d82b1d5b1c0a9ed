#pragma once

#include <stdexcept>
#include <string>

namespace gmewit {

// Input failed validation (bad range, inconsistent dimensions, malformed config).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A configured size limit would be exceeded (basis dimension, pattern
// enumeration, bipartition enumeration).
class DimensionGuardError : public std::runtime_error {
 public:
  explicit DimensionGuardError(const std::string& what) : std::runtime_error(what) {}
};

// A quantity that must be a probability (or otherwise internally consistent)
// fell outside its tolerance band.  Indicates a bug, not bad user input.
class ConsistencyError : public std::logic_error {
 public:
  explicit ConsistencyError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace gmewit
