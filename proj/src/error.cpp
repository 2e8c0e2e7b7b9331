#include "edgeids/error.hpp"

namespace edgeids {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidRecord: return "InvalidRecord";
    case Errc::ParseError: return "ParseError";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::EmptyDistribution: return "EmptyDistribution";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::UntrainedModel: return "UntrainedModel";
    case Errc::EmptyExemplars: return "EmptyExemplars";
    case Errc::EmptyList: return "EmptyList";
    case Errc::FormatError: return "FormatError";
    case Errc::IoError: return "IoError";
    case Errc::SamplerUnavailable: return "SamplerUnavailable";
    case Errc::ValueOutOfRange: return "ValueOutOfRange";
    case Errc::NoContextForBenign: return "NoContextForBenign";
    case Errc::BudgetImpossible: return "BudgetImpossible";
    case Errc::RateLimited: return "RateLimited";
    case Errc::IntegrityMismatch: return "IntegrityMismatch";
    case Errc::Timeout: return "Timeout";
    case Errc::TransportError: return "TransportError";
    case Errc::MalformedResponse: return "MalformedResponse";
    case Errc::NegativeDuration: return "NegativeDuration";
    case Errc::InsufficientHistory: return "InsufficientHistory";
    case Errc::DegenerateGroups: return "DegenerateGroups";
    case Errc::UnsupportedGroupCount: return "UnsupportedGroupCount";
    case Errc::SinkUnavailable: return "SinkUnavailable";
    case Errc::MissingLabelColumn: return "MissingLabelColumn";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyTrial: return "EmptyTrial";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace edgeids
