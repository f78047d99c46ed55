#pragma once

#include <stdexcept>
#include <string>

namespace pdca {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a cost model or pricing rule.
class DomainError : public Error
{
public:
  using Error::Error;
};

/// Root bracketing, inversion or integration failed.
class NumericalError : public Error
{
public:
  using Error::Error;
};

/// Requested precision exceeds what the representation supports.
class OverflowError : public Error
{
public:
  using Error::Error;
};

/// Problem size beyond a configured cap.
class TooLarge : public Error
{
public:
  using Error::Error;
};

/// The rule/cost pairing is not covered by any known guarantee.
class UnsupportedRule : public Error
{
public:
  using Error::Error;
};

/// More than k units of an item were allocated under a supply-k cost.
class SupplyViolation : public Error
{
public:
  using Error::Error;
};

/// A trace disagrees with its own replay.
class InconsistentTrace : public Error
{
public:
  using Error::Error;
};

class IoError : public Error
{
public:
  using Error::Error;
};

/// Malformed JSON input (missing or ill-typed fields).
class ParseError : public Error
{
public:
  using Error::Error;
};

}  // namespace pdca
