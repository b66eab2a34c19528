#pragma once

#include <stdexcept>
#include <string>

namespace nclight {

/// A numerical routine failed to converge or left its validity range.
class numeric_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// No admissible configuration can satisfy the request (e.g. a source that
/// never violates the criterion cannot be planned to any significance).
class infeasible_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The configuration is valid but outside what the implemented theory
/// covers (e.g. classical verdicts for asymmetric splitting networks).
class unsupported_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace nclight
