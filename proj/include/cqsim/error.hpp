#pragma once

#include <stdexcept>
#include <string>

namespace cqsim {

enum class ErrorKind {
    Config,
    Parse,
    Io,
    DimensionMismatch,
    PreconditionViolation,
    SingularPencil,
    SingularPort,
    SingularSymbol,
    IllConditionedEigenbasis,
    ImaginaryResidue,
    WeightMismatch,
    NewtonDiverged,
    RankDeficient,
    DegenerateParameters,
    Overflow,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so that the C API and
/// the CLI can map it to a status / exit code without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// True for failures of the numerics (as opposed to bad input/config).
    bool numerical() const noexcept;

private:
    ErrorKind kind_;
};

}  // namespace cqsim
