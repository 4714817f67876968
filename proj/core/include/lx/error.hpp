#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lx {

enum class ErrorCode {
  UnknownPerception,
  WrongKind,
  OutOfRange,
  MismatchedDefinition,
  DegenerateClass,
  Unparseable,
  Timeout,
  HttpError,
  RetriesExhausted,
  ZeroProbability,
  ShapeMismatch,
  EmptyDataset,
  LengthMismatch,
  EmptyInput,
  NonPositiveControl,
  RankDeficient,
  Underdetermined,
  SingularSigma,
  NegativeVariance,
  TooManyFailures,
  NotUtf8,
  MissingColumn,
  SizeExceeded,
  EmptyFile,
  InvalidConfig,
  InvalidTransition,
  NotFound,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure raised by lx carries a code so callers
/// (CLI, HTTP service, batch runners) can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// HTTP failure with the response status attached.
class HttpStatusError : public Error {
 public:
  HttpStatusError(int status, const std::string& what)
      : Error(ErrorCode::HttpError, "status " + std::to_string(status) + ": " + what),
        status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace lx
