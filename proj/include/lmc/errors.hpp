#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmc {

/// Base of every error raised by the library. `kind()` is a stable tag used
/// in reports and for mapping to CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& detail)
        : Error("SyntaxError", "syntax error at position " + std::to_string(position) + ": " + detail),
          position_(position), expected_(std::move(expected)) {}
    [[nodiscard]] std::size_t position() const noexcept { return position_; }
    [[nodiscard]] const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::vector<std::string> expected_;
};

#define LMC_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what) : Error(#Name, what) {}      \
    };

LMC_DEFINE_ERROR(UnknownIdentifier)
LMC_DEFINE_ERROR(EvalDomain)
LMC_DEFINE_ERROR(DimensionMismatch)
LMC_DEFINE_ERROR(IndexOutOfRange)
LMC_DEFINE_ERROR(DegenerateDiffusion)
LMC_DEFINE_ERROR(QuadratureFailure)
LMC_DEFINE_ERROR(PreconditionViolated)
LMC_DEFINE_ERROR(ValidationError)
LMC_DEFINE_ERROR(UnboundedOnCompact)
LMC_DEFINE_ERROR(JumpBoundViolation)
LMC_DEFINE_ERROR(ConfigError)

#undef LMC_DEFINE_ERROR

}  // namespace lmc
