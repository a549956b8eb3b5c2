#pragma once

#include <stdexcept>
#include <string>

namespace relbench {

/// Base class for every error raised by the library. The concrete type names
/// the failure class; what() carries a human-readable diagnostic.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class ConstraintError : public Error { using Error::Error; };
class IntegrityError : public Error { using Error::Error; };
class CompositionError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class PreconditionError : public Error { using Error::Error; };
class QuestionTypeError : public Error { using Error::Error; };
class CoverageError : public Error { using Error::Error; };
class GroupingError : public Error { using Error::Error; };
class TransportError : public Error { using Error::Error; };
class ProtocolError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

/// Raised by the pipeline; the stage name is kept separately so the CLI can
/// print a stage-named diagnostic.
class StageError : public Error {
public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

}  // namespace relbench
