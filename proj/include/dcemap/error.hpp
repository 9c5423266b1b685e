#pragma once

#include <stdexcept>
#include <string>

namespace dcemap {

enum class ErrorCode {
    InvalidArgument,
    GradientUndefined,
    TruncationTooCoarse,
    ConstantCurve,
    InsufficientSamples,
    EmptyRoi,
    ShapeMismatch,
    ScheduleOverlap,
    InsufficientFrames,
    OverlappingRegions,
    TimingMismatch,
    BadVolumeFile,
    IoFailure,
};

/// Canonical message prefix for each error code.
const char* error_message(ErrorCode code) noexcept;

/// Data-level failure raised by every module. The what() string starts with
/// the canonical message for the code, optionally followed by ": detail".
class Error : public std::runtime_error {
public:
    explicit Error(ErrorCode code, const std::string& detail = {});

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace dcemap
