#include "cqsim/error.hpp"

namespace cqsim {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
    case ErrorKind::SingularPencil: return "SingularPencil";
    case ErrorKind::SingularPort: return "SingularPort";
    case ErrorKind::SingularSymbol: return "SingularSymbol";
    case ErrorKind::IllConditionedEigenbasis: return "IllConditionedEigenbasis";
    case ErrorKind::ImaginaryResidue: return "ImaginaryResidue";
    case ErrorKind::WeightMismatch: return "WeightMismatch";
    case ErrorKind::NewtonDiverged: return "NewtonDiverged";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DegenerateParameters: return "DegenerateParameters";
    case ErrorKind::Overflow: return "Overflow";
    }
    return "UnknownError";
}

bool Error::numerical() const noexcept {
    switch (kind_) {
    case ErrorKind::Config:
    case ErrorKind::Parse:
    case ErrorKind::Io:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::PreconditionViolation:
    case ErrorKind::WeightMismatch:
        return false;
    default:
        return true;
    }
}

}  // namespace cqsim
