#pragma once

#include <stdexcept>

namespace boxkey {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Environment state machine.
struct OutOfRangeError : Error { using Error::Error; };
struct RepeatedTargetError : Error { using Error::Error; };

// Instance generation.
struct CountTooLargeError : Error { using Error::Error; };
struct GeneratorExhaustedError : Error { using Error::Error; };
struct EmptyPoolError : Error { using Error::Error; };
struct InvalidSettingsError : Error { using Error::Error; };

// Scoring and probing.
struct MismatchedQueryError : Error { using Error::Error; };
struct BadKError : Error { using Error::Error; };

// Model interaction.
struct NoPreviousAnswerError : Error { using Error::Error; };
struct AuthError : Error { using Error::Error; };

// Persistence.
struct SchemaVersionError : Error { using Error::Error; };

}  // namespace boxkey
