#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pnf {

/// Base class for every error raised by the library. The `kind()` tag is a
/// stable, machine-readable name (e.g. "CycleDetected") that the CLI and the
/// tests match on.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define PNF_DEFINE_ERROR(Name)                                          \
  class Name : public ::pnf::Error {                                    \
   public:                                                              \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

// graph_core
PNF_DEFINE_ERROR(CycleDetected)
PNF_DEFINE_ERROR(MissingDuration)
PNF_DEFINE_ERROR(PathBudgetExceeded)
PNF_DEFINE_ERROR(MissingFeature)
PNF_DEFINE_ERROR(InvalidGraph)

// rbm
PNF_DEFINE_ERROR(NonPositiveEfficiency)
PNF_DEFINE_ERROR(EmptyResourceSet)
PNF_DEFINE_ERROR(NonPositiveMean)
PNF_DEFINE_ERROR(DurationAboveNormal)
PNF_DEFINE_ERROR(Infeasible)
PNF_DEFINE_ERROR(MissingCrashParams)
PNF_DEFINE_ERROR(InvalidDistribution)

// synthgen / ingest
PNF_DEFINE_ERROR(InvalidConfig)
PNF_DEFINE_ERROR(RateOutOfRange)
PNF_DEFINE_ERROR(SchemaViolation)
PNF_DEFINE_ERROR(VersionMismatch)
PNF_DEFINE_ERROR(UnsupportedFormat)
PNF_DEFINE_ERROR(MissingColumn)
PNF_DEFINE_ERROR(EmptyTrainingSet)

// tensor / gnn / loss / train
PNF_DEFINE_ERROR(ShapeMismatch)
PNF_DEFINE_ERROR(NonScalarOutput)
PNF_DEFINE_ERROR(FeatureDimMismatch)
PNF_DEFINE_ERROR(TimestampRegression)
PNF_DEFINE_ERROR(UnknownActivity)
PNF_DEFINE_ERROR(MaskAllEmpty)
PNF_DEFINE_ERROR(NonFiniteGradient)
PNF_DEFINE_ERROR(DivergedLoss)
PNF_DEFINE_ERROR(NoLabels)

// bayes / active / metrics / baselines
PNF_DEFINE_ERROR(VarianceUnderflow)
PNF_DEFINE_ERROR(SingularInnovation)
PNF_DEFINE_ERROR(BudgetExhausted)
PNF_DEFINE_ERROR(LengthMismatch)
PNF_DEFINE_ERROR(TooFewSamples)
PNF_DEFINE_ERROR(SingularSystem)

#undef PNF_DEFINE_ERROR

/// Parse failure carrying the 1-based line number where it was detected.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& expected)
      : Error("ParseError", "line " + std::to_string(line) + ": expected " + expected),
        line_(line),
        expected_(expected) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t line_;
  std::string expected_;
};

}  // namespace pnf
