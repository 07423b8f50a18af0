#include "woc/errors.hpp"

namespace woc {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnknownRound: return "UnknownRound";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::NonPositiveInput: return "NonPositiveInput";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::NoRounds: return "NoRounds";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NoDecisiveEntries: return "NoDecisiveEntries";
    case ErrorCode::MissingFlag: return "MissingFlag";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace woc
