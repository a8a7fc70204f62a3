#pragma once

#include <stdexcept>
#include <string>

namespace shrinklab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An interval computation could not decide a branch at working precision.
class PrecisionError : public Error {
 public:
  using Error::Error;
};

/// A continued fraction terminated before the requested depth.
class RationalInputError : public Error {
 public:
  RationalInputError(const std::string& what, std::string partial)
      : Error(what), partial_(std::move(partial)) {}
  /// The expansion computed so far, e.g. "[0;2,3]".
  const std::string& partial() const { return partial_; }

 private:
  std::string partial_;
};

/// A search or grid would exceed its configured budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A named inequality of a verification chain failed.
class VerificationFailure : public Error {
 public:
  VerificationFailure(std::string inequality, const std::string& detail)
      : Error("verification failed [" + inequality + "]: " + detail), inequality_(std::move(inequality)) {}
  const std::string& inequality() const { return inequality_; }

 private:
  std::string inequality_;
};

class CertificateInvalid : public Error {
 public:
  using Error::Error;
};

class HypothesisViolated : public Error {
 public:
  using Error::Error;
};

class ResolutionInsufficient : public Error {
 public:
  using Error::Error;
};

class NonMonotoneSchedule : public Error {
 public:
  using Error::Error;
};

class EpsilonZero : public Error {
 public:
  using Error::Error;
};

class StepUnderflow : public Error {
 public:
  using Error::Error;
};

class CrossingFailure : public Error {
 public:
  using Error::Error;
};

class RegimeInfeasible : public Error {
 public:
  using Error::Error;
};

class ConfigInvalid : public Error {
 public:
  using Error::Error;
};

}  // namespace shrinklab
