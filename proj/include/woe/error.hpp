#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace woe {

enum class ErrorCode {
    MalformedCsv,
    DuplicateLabel,
    EmptyLabel,
    SelfError,
    UnknownGroundTruth,
    UnknownRepository,
    UnknownSession,
    MissingPlannedTrials,
    InvalidConfig,
    SessionNotRunning,
    OutOfRange,
    NoGroundTruthSelected,
    KindNotScheduled,
    ScheduleExhausted,
    ZeroWeights,
    IndexOutOfRange,
    InvalidRecord,
    StorageFailure,
    HeaderMismatch,
    MalformedFrame,
    UnknownType,
    InsufficientData,
    DegenerateX,
    InvalidPayload,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedCsv: return "MalformedCsv";
        case ErrorCode::DuplicateLabel: return "DuplicateLabel";
        case ErrorCode::EmptyLabel: return "EmptyLabel";
        case ErrorCode::SelfError: return "SelfError";
        case ErrorCode::UnknownGroundTruth: return "UnknownGroundTruth";
        case ErrorCode::UnknownRepository: return "UnknownRepository";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::MissingPlannedTrials: return "MissingPlannedTrials";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::SessionNotRunning: return "SessionNotRunning";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::NoGroundTruthSelected: return "NoGroundTruthSelected";
        case ErrorCode::KindNotScheduled: return "KindNotScheduled";
        case ErrorCode::ScheduleExhausted: return "ScheduleExhausted";
        case ErrorCode::ZeroWeights: return "ZeroWeights";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::InvalidRecord: return "InvalidRecord";
        case ErrorCode::StorageFailure: return "StorageFailure";
        case ErrorCode::HeaderMismatch: return "HeaderMismatch";
        case ErrorCode::MalformedFrame: return "MalformedFrame";
        case ErrorCode::UnknownType: return "UnknownType";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::DegenerateX: return "DegenerateX";
        case ErrorCode::InvalidPayload: return "InvalidPayload";
    }
    return "Unknown";
}

// Every failure raised by the library carries one of the codes above so
// that callers (the HTTP layer, the CLI) can map it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace woe
