#pragma once

#include <stdexcept>
#include <string>

namespace chainmatch {

enum class Errc {
  // trip validation
  RoundTripRejected,
  NonCausalSlots,
  SlotOutOfHorizon,
  InvalidField,
  // ingestion
  MissingColumn,
  UnparsableRow,
  EmptyFile,
  TimestampOutsideWindow,
  InvalidDimensions,
  DuplicateUserId,
  IoError,
  SchemaVersionMismatch,
  // enumeration
  DepthOutOfRange,
  ChainLengthOutOfDepth,
  PoolOverflow,
  // pricing
  NonPositiveSigma,
  AlphaOutOfOpenInterval,
  ThresholdAboveBase,
  CostFactorOutOfRange,
  MissingPrice,
  // matching
  PoolTooLargeForOracle,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace chainmatch
