#pragma once

#include <stdexcept>
#include <string>

namespace whe {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define WHE_DECLARE_ERROR(Name)                                   \
  class Name : public Error {                                     \
   public:                                                        \
    using Error::Error;                                           \
    const char* kind() const noexcept override { return #Name; }  \
  };

WHE_DECLARE_ERROR(ConfigError)
WHE_DECLARE_ERROR(InvalidBundle)
WHE_DECLARE_ERROR(UnsupportedCoupling)
WHE_DECLARE_ERROR(NonPositiveMetric)
WHE_DECLARE_ERROR(NonPositiveWeight)
WHE_DECLARE_ERROR(InversionMismatch)
WHE_DECLARE_ERROR(BackendMismatch)
WHE_DECLARE_ERROR(DegenerateDenominator)
WHE_DECLARE_ERROR(NegativeTwist)
WHE_DECLARE_ERROR(FitDiverged)
WHE_DECLARE_ERROR(Inconclusive)
WHE_DECLARE_ERROR(NotSolvable)
WHE_DECLARE_ERROR(NewtonDiverged)
WHE_DECLARE_ERROR(PreconditionWeight)
WHE_DECLARE_ERROR(WrongFamily)
WHE_DECLARE_ERROR(DeformationStuck)
WHE_DECLARE_ERROR(EmptySeries)

#undef WHE_DECLARE_ERROR

}  // namespace whe
