#pragma once

#include <stdexcept>
#include <string>

namespace biofuse {

enum class ErrorCode {
    SpectrumTooShort,
    ZeroTIC,
    BatchTooSmall,
    GridMismatch,
    EmptyTrainingSet,
    NoPeaksFound,
    SingleClass,
    DidNotConverge,
    DimensionMismatch,
    SampleMismatch,
    KTooLarge,
    TooFewSamples,
    LengthMismatch,
    PlanMismatch,
    TooFewRepeats,
    ConfigInvalid,
    InvalidInput,
    Io,
    Parse,
};

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorCategory { Usage, Data, Numeric };

const char* to_string(ErrorCode code) noexcept;
ErrorCategory category_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace biofuse
