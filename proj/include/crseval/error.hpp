#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crseval {

enum class ErrorCode {
    InvalidArgument,
    ParseError,
    EmptyDialog,
    UnknownSpeaker,
    UnbalancedQuotes,
    CutNotSeeker,
    OutOfRange,
    DanglingReference,
    InvariantViolation,
    PoolTooSmall,
    WrongState,
    UnknownSituation,
    MissingRating,
    RatingOutOfRange,
    MissingAnswer,
    InvalidOption,
    MissingAttentionRating,
    StorageUnavailable,
    StorageCorrupt,
    DuplicateSession,
    HitCodeCollision,
    UnknownStudy,
    UnknownRecord,
    VersionMismatch,
    SchemaViolation,
    DegenerateData,
    UnbalancedGroups,
    IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code so the
// API layer can map it onto an HTTP status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace crseval
