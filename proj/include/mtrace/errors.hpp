#pragma once

#include <stdexcept>
#include <string>

namespace mtrace {

/// Root of every error raised by the library.  Numerical failures and
/// contract violations are distinguished so the CLI can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments outside an operation's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to deliver its accuracy contract.
class NumericalError : public Error {
 public:
  using Error::Error;
};

#define MTRACE_DEFINE_ERROR(Name, Base)       \
  class Name : public Base {                  \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Base(std::string(#Name ": ") + what) {} \
  }

// specfun
MTRACE_DEFINE_ERROR(NonPositiveArgument, DomainError);
MTRACE_DEFINE_ERROR(Overflow, NumericalError);
MTRACE_DEFINE_ERROR(ModulusOutOfRange, DomainError);
MTRACE_DEFINE_ERROR(PhiOutOfRange, DomainError);
MTRACE_DEFINE_ERROR(AccuracyLoss, NumericalError);

// jets
MTRACE_DEFINE_ERROR(BasePointMismatch, DomainError);
MTRACE_DEFINE_ERROR(DivisionBySingularJet, DomainError);
MTRACE_DEFINE_ERROR(SingularComposition, DomainError);
MTRACE_DEFINE_ERROR(ZeroOrder, DomainError);

// riccati
MTRACE_DEFINE_ERROR(OrderTooHigh, DomainError);
MTRACE_DEFINE_ERROR(EvaluationAtSingularPoint, DomainError);
MTRACE_DEFINE_ERROR(ParityViolation, NumericalError);

// quadrature / ode
MTRACE_DEFINE_ERROR(QuadratureFailure, NumericalError);
MTRACE_DEFINE_ERROR(SeedPointTooSmall, DomainError);
MTRACE_DEFINE_ERROR(StepSizeUnderflow, NumericalError);
MTRACE_DEFINE_ERROR(OffGrid, DomainError);

// spectrum
MTRACE_DEFINE_ERROR(ReferenceAtEigenvalue, DomainError);
MTRACE_DEFINE_ERROR(BracketNotFound, NumericalError);
MTRACE_DEFINE_ERROR(InsufficientEigenvalues, DomainError);

// traceid
MTRACE_DEFINE_ERROR(IllConditionedFit, NumericalError);

#undef MTRACE_DEFINE_ERROR

}  // namespace mtrace
