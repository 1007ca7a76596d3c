#include "chainmatch/errors.hpp"

namespace chainmatch {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::RoundTripRejected: return "RoundTripRejected";
    case Errc::NonCausalSlots: return "NonCausalSlots";
    case Errc::SlotOutOfHorizon: return "SlotOutOfHorizon";
    case Errc::InvalidField: return "InvalidField";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::UnparsableRow: return "UnparsableRow";
    case Errc::EmptyFile: return "EmptyFile";
    case Errc::TimestampOutsideWindow: return "TimestampOutsideWindow";
    case Errc::InvalidDimensions: return "InvalidDimensions";
    case Errc::DuplicateUserId: return "DuplicateUserId";
    case Errc::IoError: return "IoError";
    case Errc::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case Errc::DepthOutOfRange: return "DepthOutOfRange";
    case Errc::ChainLengthOutOfDepth: return "ChainLengthOutOfDepth";
    case Errc::PoolOverflow: return "PoolOverflow";
    case Errc::NonPositiveSigma: return "NonPositiveSigma";
    case Errc::AlphaOutOfOpenInterval: return "AlphaOutOfOpenInterval";
    case Errc::ThresholdAboveBase: return "ThresholdAboveBase";
    case Errc::CostFactorOutOfRange: return "CostFactorOutOfRange";
    case Errc::MissingPrice: return "MissingPrice";
    case Errc::PoolTooLargeForOracle: return "PoolTooLargeForOracle";
  }
  return "UnknownError";
}

}  // namespace chainmatch
