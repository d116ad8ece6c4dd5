#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace biasaudit {

// Coarse categories used at the C boundary; each concrete exception maps to one.
enum class ErrorCode {
  Unknown = 1,
  InvalidArgument,
  Io,
  Parse,
  Validation,
  EmptyInput,
  Degenerate,
  ZeroDivergence,
  ClassTooSmall,
  Endpoint,
  Auth,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(std::string message)
      : Error(ErrorCode::InvalidArgument, std::move(message)) {}
};

class IoFailure : public Error {
 public:
  explicit IoFailure(std::string message) : Error(ErrorCode::Io, std::move(message)) {}
};

// Raw text is kept so a failed response can be logged or retried verbatim.
class UnparseableResponse : public Error {
 public:
  UnparseableResponse(std::string message, std::string raw)
      : Error(ErrorCode::Parse, std::move(message)), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class EmptyObject : public Error {
 public:
  explicit EmptyObject(std::string message) : Error(ErrorCode::Parse, std::move(message)) {}
};

class SchemaMismatch : public Error {
 public:
  explicit SchemaMismatch(std::string message)
      : Error(ErrorCode::Validation, std::move(message)) {}
};

class ValidationFailure : public Error {
 public:
  explicit ValidationFailure(std::string message)
      : Error(ErrorCode::Validation, std::move(message)) {}
};

class EmptyCorpus : public Error {
 public:
  explicit EmptyCorpus(std::string message)
      : Error(ErrorCode::EmptyInput, std::move(message)) {}
};

class EmptyDistribution : public Error {
 public:
  explicit EmptyDistribution(std::string message)
      : Error(ErrorCode::EmptyInput, std::move(message)) {}
};

class NonPositiveDenominator : public Error {
 public:
  explicit NonPositiveDenominator(std::string message)
      : Error(ErrorCode::Degenerate, std::move(message)) {}
};

class DegenerateLabels : public Error {
 public:
  explicit DegenerateLabels(std::string message)
      : Error(ErrorCode::Degenerate, std::move(message)) {}
};

class ZeroDivergence : public Error {
 public:
  explicit ZeroDivergence(std::string message)
      : Error(ErrorCode::ZeroDivergence, std::move(message)) {}
};

class ClassTooSmall : public Error {
 public:
  explicit ClassTooSmall(std::string message)
      : Error(ErrorCode::ClassTooSmall, std::move(message)) {}
};

class UnknownPlaceholder : public Error {
 public:
  explicit UnknownPlaceholder(std::string message)
      : Error(ErrorCode::InvalidArgument, std::move(message)) {}
};

class EndpointUnreachable : public Error {
 public:
  explicit EndpointUnreachable(std::string message)
      : Error(ErrorCode::Endpoint, std::move(message)) {}
};

class AuthMissing : public Error {
 public:
  explicit AuthMissing(std::string message) : Error(ErrorCode::Auth, std::move(message)) {}
};

}  // namespace biasaudit
