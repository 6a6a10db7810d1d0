#include "biofuse/error.hpp"

namespace biofuse {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::SpectrumTooShort: return "SpectrumTooShort";
    case ErrorCode::ZeroTIC: return "ZeroTIC";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::NoPeaksFound: return "NoPeaksFound";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DidNotConverge: return "DidNotConverge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SampleMismatch: return "SampleMismatch";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::PlanMismatch: return "PlanMismatch";
    case ErrorCode::TooFewRepeats: return "TooFewRepeats";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::Io: return "IO";
    case ErrorCode::Parse: return "Parse";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::DidNotConverge:
        return ErrorCategory::Numeric;
    default:
        return ErrorCategory::Data;
    }
}

} // namespace biofuse
