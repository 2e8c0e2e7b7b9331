#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgeids {

enum class Errc {
  InvalidArgument,
  InvalidRecord,
  ParseError,
  InsufficientData,
  EmptyDistribution,
  DegenerateData,
  UntrainedModel,
  EmptyExemplars,
  EmptyList,
  FormatError,
  IoError,
  SamplerUnavailable,
  ValueOutOfRange,
  NoContextForBenign,
  BudgetImpossible,
  RateLimited,
  IntegrityMismatch,
  Timeout,
  TransportError,
  MalformedResponse,
  NegativeDuration,
  InsufficientHistory,
  DegenerateGroups,
  UnsupportedGroupCount,
  SinkUnavailable,
  MissingLabelColumn,
  UnknownLabel,
  LengthMismatch,
  EmptyTrial,
};

std::string_view to_string(Errc code) noexcept;

// Every failure surfaced by the library carries one of the codes above so that
// callers (the pipeline in particular) can map it onto a degraded outcome.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace edgeids
