#include "premsel/error.hpp"

namespace premsel {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::OrphanAxiom: return "OrphanAxiom";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnbalancedQuote: return "UnbalancedQuote";
    case ErrorCode::UnexpectedCharacter: return "UnexpectedCharacter";
    case ErrorCode::UnknownFunctor: return "UnknownFunctor";
    case ErrorCode::NoContext: return "NoContext";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ZeroSignature: return "ZeroSignature";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NetworkFailure: return "NetworkFailure";
    case ErrorCode::HashMismatch: return "HashMismatch";
    case ErrorCode::UpstreamMissing: return "UpstreamMissing";
    case ErrorCode::NothingToReport: return "NothingToReport";
    case ErrorCode::WorkDirLocked: return "WorkDirLocked";
  }
  return "Unknown";
}

}  // namespace premsel
