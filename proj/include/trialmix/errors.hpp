#pragma once

#include <stdexcept>
#include <string>

namespace trialmix {

// Precondition violated: index out of range, unknown segment, bad frequency.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input carries no information for the requested statistic (zero variance,
// zero power).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent dataset / decomposition files.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A request exceeds what the available data can supply, e.g. more unique
// recombination tuples than exist.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite intermediate during an iterative computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trialmix
