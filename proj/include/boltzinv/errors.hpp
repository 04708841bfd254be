#pragma once

#include <stdexcept>
#include <string>

namespace boltzinv {

/// Malformed or unusable input: bad grids, missing files, divergent integrands.
/// Maps to CLI exit code 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A mathematical precondition of an operation does not hold (activity outside
/// its window, perturbation too large, L1 mass not below one).
class PreconditionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The computation left its region of validity: certification failed,
/// the truncated expansion produced a negative RDF, and similar.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace boltzinv
