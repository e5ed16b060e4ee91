#pragma once

#include <stdexcept>
#include <string>

namespace adco {

// Error taxonomy shared across all modules. Everything derives from Error
// so the CLI boundary can map exception kind -> exit code in one place.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Usage / configuration problems (CLI exit code 2).
struct ConfigError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct ScheduleError : Error { using Error::Error; };

// Numeric problems at runtime (CLI exit code 3).
struct NumericError : Error { using Error::Error; };
struct DegenerateVector : Error { using Error::Error; };
struct InvalidTemperature : Error { using Error::Error; };
struct NormalizationError : Error { using Error::Error; };
struct ProbabilityError : Error { using Error::Error; };
struct OracleEvaluationError : Error { using Error::Error; };
struct StaleTapeError : Error { using Error::Error; };

struct IoError : Error { using Error::Error; };

}  // namespace adco
