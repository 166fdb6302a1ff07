#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace streampcq {

enum class ErrorCode {
  EmptyInput,
  TruncatedUnit,
  BitstreamExhausted,
  MissingField,
  ZeroPointCount,
  UnrepresentableField,
  InvalidSchema,
  UnsupportedPly,
  MalformedHeader,
  NoEligibleBlocks,
  NonPositivePqs,
  DegenerateDesign,
  ZeroVarianceSubject,
  DegenerateRange,
  ZeroVariance,
  InvalidInput,
  Io,
};

constexpr std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::EmptyInput: return "EmptyInput";
  case ErrorCode::TruncatedUnit: return "TruncatedUnit";
  case ErrorCode::BitstreamExhausted: return "BitstreamExhausted";
  case ErrorCode::MissingField: return "MissingField";
  case ErrorCode::ZeroPointCount: return "ZeroPointCount";
  case ErrorCode::UnrepresentableField: return "UnrepresentableField";
  case ErrorCode::InvalidSchema: return "InvalidSchema";
  case ErrorCode::UnsupportedPly: return "UnsupportedPly";
  case ErrorCode::MalformedHeader: return "MalformedHeader";
  case ErrorCode::NoEligibleBlocks: return "NoEligibleBlocks";
  case ErrorCode::NonPositivePqs: return "NonPositivePqs";
  case ErrorCode::DegenerateDesign: return "DegenerateDesign";
  case ErrorCode::ZeroVarianceSubject: return "ZeroVarianceSubject";
  case ErrorCode::DegenerateRange: return "DegenerateRange";
  case ErrorCode::ZeroVariance: return "ZeroVariance";
  case ErrorCode::InvalidInput: return "InvalidInput";
  case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library. `what()` reads "<ErrorName>: detail"
/// and `subject()` carries the field, subject id or file the error refers to.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string subject, const std::string& detail = {})
    : std::runtime_error(format(code, subject, detail))
    , code_(code)
    , subject_(std::move(subject))
  {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

private:
  static std::string
  format(ErrorCode code, const std::string& subject, const std::string& detail)
  {
    std::string msg(error_name(code));
    if (!subject.empty())
      msg += "(" + subject + ")";
    if (!detail.empty())
      msg += ": " + detail;
    return msg;
  }

  ErrorCode code_;
  std::string subject_;
};

}  // namespace streampcq
