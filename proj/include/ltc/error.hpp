#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ltc {

enum class ErrorKind {
    InvalidArgument,
    Config,
    NonConvergence,
    BracketNotFound,
    PairNotOrdered,
    TargetNotBracketed,
    NoConvergenceAcrossL,
    EmptyLevelSet,
    Io,
    Verification
};

inline std::string_view to_string(ErrorKind k)
{
    switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::BracketNotFound: return "BracketNotFound";
    case ErrorKind::PairNotOrdered: return "PairNotOrdered";
    case ErrorKind::TargetNotBracketed: return "TargetNotBracketed";
    case ErrorKind::NoConvergenceAcrossL: return "NoConvergenceAcrossL";
    case ErrorKind::EmptyLevelSet: return "EmptyLevelSet";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Verification: return "VerificationFailure";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace ltc
