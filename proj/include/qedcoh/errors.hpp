#pragma once

#include <stdexcept>
#include <string>

namespace qedcoh {

/// Root of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A parameter violates the invariant of its domain type.
class ValidationError : public Error
{
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error
{
public:
  using Error::Error;
};

/// Principal-value request with a pole sitting on an interval end.
class PoleOnBoundary : public Error
{
public:
  using Error::Error;
};

/// Two poles numerically coincide.
class PolesTooClose : public Error
{
public:
  using Error::Error;
};

/// Input at a removable singularity of a closed form (use the limit).
class DegenerateInput : public Error
{
public:
  using Error::Error;
};

/// Quadrature exhausted its budget; carries the best estimate.
class NonConvergence : public Error
{
public:
  NonConvergence(const std::string& what, double best, double error)
    : Error(what), best_estimate(best), error_estimate(error)
  {}

  double best_estimate;
  double error_estimate;
};

} // namespace qedcoh
