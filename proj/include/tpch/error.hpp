#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tpch {

/// Failure categories raised by the library. Every thrown tpch::Error carries one.
enum class Errc {
    DimensionMismatch,
    ConjugateSymmetryViolation,
    SvdNonConvergence,
    AnchorCountExceedsSamples,
    NonPositiveBandwidth,
    InconsistentSampleCounts,
    SingularSystem,
    NonFinite,
    ShapeMismatch,
    LengthMismatch,
    Empty,
    InvalidK,
    InvalidArgs,
    InvalidRatio,
    MissingView,
    RaggedRows,
    LabelLengthMismatch,
    ParseError,
    IoError,
};

constexpr std::string_view errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ConjugateSymmetryViolation: return "ConjugateSymmetryViolation";
    case Errc::SvdNonConvergence: return "SvdNonConvergence";
    case Errc::AnchorCountExceedsSamples: return "AnchorCountExceedsSamples";
    case Errc::NonPositiveBandwidth: return "NonPositiveBandwidth";
    case Errc::InconsistentSampleCounts: return "InconsistentSampleCounts";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::NonFinite: return "NonFinite";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Empty: return "Empty";
    case Errc::InvalidK: return "InvalidK";
    case Errc::InvalidArgs: return "InvalidArgs";
    case Errc::InvalidRatio: return "InvalidRatio";
    case Errc::MissingView: return "MissingView";
    case Errc::RaggedRows: return "RaggedRows";
    case Errc::LabelLengthMismatch: return "LabelLengthMismatch";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string &what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string &what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string &what) {
    if (!cond)
        fail(code, what);
}

} // namespace tpch
