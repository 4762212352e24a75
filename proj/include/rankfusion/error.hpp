#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rankfusion {

enum class ErrorKind {
  // core
  DuplicateId,
  NotAPermutation,
  InvalidArgument,
  // comparator
  MissingIclExample,
  NonFiniteLogit,
  OutOfRange,
  MissingLogits,
  UnparseableChoice,
  // llm client
  Timeout,
  RateLimited,
  MalformedResponse,
  AuthFailure,
  HttpError,
  MissingChoiceToken,
  CacheCorruption,
  // aggregation / evaluation
  InconsistentUniverse,
  MismatchedCounts,
  UnknownQuery,
  // analysis
  IncompletePairSet,
  DuplicatePair,
  MissingRawResults,
  // io
  ParseError,
  IoError,
  // sorting / fusion
  OracleFailure,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::NotAPermutation: return "NotAPermutation";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MissingIclExample: return "MissingIclExample";
    case ErrorKind::NonFiniteLogit: return "NonFiniteLogit";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::MissingLogits: return "MissingLogits";
    case ErrorKind::UnparseableChoice: return "UnparseableChoice";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::AuthFailure: return "AuthFailure";
    case ErrorKind::HttpError: return "HttpError";
    case ErrorKind::MissingChoiceToken: return "MissingChoiceToken";
    case ErrorKind::CacheCorruption: return "CacheCorruption";
    case ErrorKind::InconsistentUniverse: return "InconsistentUniverse";
    case ErrorKind::MismatchedCounts: return "MismatchedCounts";
    case ErrorKind::UnknownQuery: return "UnknownQuery";
    case ErrorKind::IncompletePairSet: return "IncompletePairSet";
    case ErrorKind::DuplicatePair: return "DuplicatePair";
    case ErrorKind::MissingRawResults: return "MissingRawResults";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::OracleFailure: return "OracleFailure";
  }
  return "Unknown";
}

/// Every failure raised by the toolkit carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failures remember where they happened (1-based line, 0 when unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& message)
      : Error(ErrorKind::ParseError, source + ":" + std::to_string(line) + ": " + message),
        source_(source),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

}  // namespace rankfusion
