#include "dcemap/error.hpp"

namespace dcemap {

namespace {

const char* kMessages[] = {
    "invalid argument",
    "gradient undefined at boundary",
    "truncation too coarse",
    "constant curve has no arrival time",
    "insufficient samples",
    "empty ROI",
    "shape mismatch",
    "schedule overlap",
    "insufficient frames",
    "overlapping regions",
    "timing mismatch",
    "bad volume file",
    "io failure",
};

}  // namespace

const char* error_message(ErrorCode code) noexcept {
    return kMessages[static_cast<int>(code)];
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(detail.empty() ? std::string(error_message(code))
                                        : std::string(error_message(code)) + ": " + detail),
      code_(code) {}

}  // namespace dcemap
