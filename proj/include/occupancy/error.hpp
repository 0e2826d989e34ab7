#pragma once

#include <stdexcept>
#include <string>

namespace occupancy {

enum class ErrorCode {
  DimensionMismatch,
  InvalidData,
  NoDetectedSites,
  RankDeficientDesign,
  NotSymmetric,
  NotPositiveDefinite,
  NonFiniteEvaluation,
  EmptyInput,
  InsufficientReplicates,
  LengthMismatch,
  InvalidConfig,
  InvalidModel,
  MissingColumn,
  NonBinaryDetection,
  RaggedSurveyGroup,
  EmptyFile,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace occupancy
