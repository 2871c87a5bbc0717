#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tkg {

enum class ErrorCode {
  InvalidArgument,
  EmptyContent,
  MissingActor,
  DuplicateId,
  AlreadyIngested,
  SelfLoop,
  DanglingReference,
  UnknownNode,
  UnknownEdge,
  UnknownEpisode,
  UnknownCommunity,
  UnknownSeed,
  DimensionMismatch,
  InvariantViolation,
  Io,
  VersionMismatch,
  CorruptStore,
  ExtractorFailure,
  AdapterUnavailable,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// what() without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace tkg
