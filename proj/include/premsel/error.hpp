#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace premsel {

enum class ErrorCode {
  // ingest
  MalformedLine,
  OrphanAxiom,
  EmptyInput,
  UnbalancedQuote,
  UnexpectedCharacter,
  // signatures
  UnknownFunctor,
  NoContext,
  // neural network
  ShapeMismatch,
  StaleCache,
  IoFailure,
  BadMagic,
  VersionMismatch,
  ChecksumMismatch,
  // embedding
  IndexOutOfRange,
  ZeroSignature,
  // pairs
  MissingEmbedding,
  DegenerateSplit,
  TooFewRows,
  // classifier
  InvalidSpec,
  // pipeline
  ConfigError,
  NetworkFailure,
  HashMismatch,
  UpstreamMissing,
  NothingToReport,
  WorkDirLocked,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the typed codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// what() without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace premsel
