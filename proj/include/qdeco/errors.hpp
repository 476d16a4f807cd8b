#pragma once

#include <stdexcept>
#include <string>

namespace qdeco {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : Error { using Error::Error; };
struct NonHermitianInput : Error { using Error::Error; };
struct NotHermitian : Error { using Error::Error; };
struct TraceNotOne : Error { using Error::Error; };
struct NotPSD : Error { using Error::Error; };
struct InvalidParam : Error { using Error::Error; };
struct UnsupportedSchedule : Error { using Error::Error; };
struct NegativeDuration : Error { using Error::Error; };
struct UndefinedParam : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct QuadratureNotConverged : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };
struct SubstepUnderflow : Error { using Error::Error; };
struct UnknownPreset : Error { using Error::Error; };

// Parse failure in the sequence DSL; carries source position.
class SyntaxError : public Error {
public:
  SyntaxError(const std::string& msg, int line, int column)
      : Error("line " + std::to_string(line) + ", col " +
              std::to_string(column) + ": " + msg),
        line(line), column(column) {}
  int line;
  int column;
};

// Invalid experiment configuration; carries the offending field name.
class ConfigError : public Error {
public:
  ConfigError(const std::string& field, const std::string& msg)
      : Error("config field '" + field + "': " + msg), field(field) {}
  std::string field;
};

}
