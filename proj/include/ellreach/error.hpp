#ifndef ELLREACH_ERROR_HPP
#define ELLREACH_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ellreach {

enum class Errc {
    NotSymmetric,
    NoConvergence,
    NotPsd,
    DimensionMismatch,
    NotUnitNorm,
    EmptyFamily,
    OutOfRange,
    NonPositive,
    NotOrthogonal,
    NonPositiveKappa,
    ShapeDegenerate,
    StepTooLarge,
    DimensionUnsupported,
    DegeneratePolygon,
    CflViolation,
    TimeNotStored,
    ParseError,
    ValidationError,
    IoError,
};

const char* errc_name(Errc c);

/// Single exception type for the whole library; `code()` identifies the
/// failure class so callers (and the CLI exit-code mapping) can dispatch.
class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

} // namespace ellreach

#endif
