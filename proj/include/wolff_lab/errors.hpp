#ifndef WOLFF_LAB_ERRORS_HPP
#define WOLFF_LAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wolff_lab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a result is numerically borderline rather than wrong
/// (the CLI maps these to exit code 2).
class Inconclusive : public Error {
 public:
  using Error::Error;
};

#define WOLFF_LAB_DEFINE_ERROR(Name, Base)                        \
  class Name : public Base {                                      \
   public:                                                        \
    explicit Name(const std::string& what) : Base(#Name ": " + what) {} \
  };

// geometry
WOLFF_LAB_DEFINE_ERROR(ClearanceViolation, Error)
WOLFF_LAB_DEFINE_ERROR(SlopeViolation, Error)
WOLFF_LAB_DEFINE_ERROR(CollisionError, Error)
WOLFF_LAB_DEFINE_ERROR(EmptyPatch, Error)
WOLFF_LAB_DEFINE_ERROR(EmptySet, Error)
WOLFF_LAB_DEFINE_ERROR(NoCorkscrew, Error)
// mesh
WOLFF_LAB_DEFINE_ERROR(DegenerateInput, Error)
// plaplace
WOLFF_LAB_DEFINE_ERROR(BallOutsideDomain, Error)
// measure
WOLFF_LAB_DEFINE_ERROR(NotZeroBoundary, Error)
// dimension
WOLFF_LAB_DEFINE_ERROR(ZeroMass, Error)
// wolff
WOLFF_LAB_DEFINE_ERROR(SpecViolation, Error)
WOLFF_LAB_DEFINE_ERROR(PoorFit, Error)
WOLFF_LAB_DEFINE_ERROR(AmbiguousSign, Inconclusive)
// enlarge
WOLFF_LAB_DEFINE_ERROR(EmptyCandidate, Inconclusive)
WOLFF_LAB_DEFINE_ERROR(BallSwallowsK, Error)
// io and cli
WOLFF_LAB_DEFINE_ERROR(FormatError, Error)
WOLFF_LAB_DEFINE_ERROR(ConfigError, Error)

#undef WOLFF_LAB_DEFINE_ERROR

class NonConvergence : public Error {
 public:
  NonConvergence(int iterations, double residual)
      : Error("NonConvergence: " + std::to_string(iterations) +
              " iterations, residual " + std::to_string(residual)),
        iterations_(iterations),
        residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

}  // namespace wolff_lab

#endif  // WOLFF_LAB_ERRORS_HPP
