#pragma once

#include <stdexcept>
#include <string>

namespace releq {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define RELEQ_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                     \
  public:                                                         \
    explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
  }

RELEQ_DEFINE_ERROR(InvalidModel);
RELEQ_DEFINE_ERROR(FdStepDegenerate);
RELEQ_DEFINE_ERROR(IntegrationBlowup);
RELEQ_DEFINE_ERROR(NotARelativeEquilibrium);
RELEQ_DEFINE_ERROR(RankAmbiguous);
RELEQ_DEFINE_ERROR(OutOfChart);
RELEQ_DEFINE_ERROR(ChartExceeded);
RELEQ_DEFINE_ERROR(NewtonDiverged);
RELEQ_DEFINE_ERROR(SpectralGapViolated);
RELEQ_DEFINE_ERROR(DegenerateKernel);
RELEQ_DEFINE_ERROR(InvalidStructureConstants);
RELEQ_DEFINE_ERROR(SymmetryViolation);
RELEQ_DEFINE_ERROR(StepFailed);
RELEQ_DEFINE_ERROR(NoBranchFound);
RELEQ_DEFINE_ERROR(ConfigInvalid);
RELEQ_DEFINE_ERROR(AnalysisFailed);

#undef RELEQ_DEFINE_ERROR

} // namespace releq
