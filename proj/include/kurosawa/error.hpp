#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace kurosawa {

// Every failure class the library can report. The names double as the
// machine-readable error codes on the wire (CLI --format json, HTTP bodies).
enum class ErrorCode {
  // core / script_parser
  EmptyInput,
  NoElements,
  HeaderlessScene,
  UnsupportedElement,
  InvalidElementText,
  UnbalancedTags,
  StrayText,
  EmptyScene,
  EmptyElement,
  DialogueWithoutCue,
  // plot_annotation
  InvalidBoundaries,
  MissingTag,
  DuplicateTag,
  OutOfOrderTags,
  EmptyAct,
  ShortAct,
  LengthOutOfRange,
  EmptyStoryline,
  GenresRequired,
  GenresForbidden,
  UnknownGenre,
  // eval_metrics
  LengthMismatch,
  EmptyCorpus,
  EmptySequence,
  EmptyList,
  PositiveLogProb,
  NoEligibleDocs,
  EmptyRatings,
  OutOfRangeScore,
  InvalidArgument,
  // dataset_builder
  DuplicateId,
  TargetParseFailure,
  LengthViolation,
  MissingLongStoryline,
  MissingGenres,
  ManifestParseError,
  FileNotFound,
  // generation
  EmptyPrompt,
  InvalidConfig,
  ContextOverflow,
  BackendUnavailable,
  BackendRejected,
  Timeout,
  MaxTokensTruncated,
  // workbench_service
  StorageFull,
  CorruptRecord,
  IoError,
  NotFound,
  BadRequest,
  Unauthorized,
};

inline constexpr std::array<std::pair<ErrorCode, std::string_view>, 50> kErrorNames{{
    {ErrorCode::EmptyInput, "EmptyInput"},
    {ErrorCode::NoElements, "NoElements"},
    {ErrorCode::HeaderlessScene, "HeaderlessScene"},
    {ErrorCode::UnsupportedElement, "UnsupportedElement"},
    {ErrorCode::InvalidElementText, "InvalidElementText"},
    {ErrorCode::UnbalancedTags, "UnbalancedTags"},
    {ErrorCode::StrayText, "StrayText"},
    {ErrorCode::EmptyScene, "EmptyScene"},
    {ErrorCode::EmptyElement, "EmptyElement"},
    {ErrorCode::DialogueWithoutCue, "DialogueWithoutCue"},
    {ErrorCode::InvalidBoundaries, "InvalidBoundaries"},
    {ErrorCode::MissingTag, "MissingTag"},
    {ErrorCode::DuplicateTag, "DuplicateTag"},
    {ErrorCode::OutOfOrderTags, "OutOfOrderTags"},
    {ErrorCode::EmptyAct, "EmptyAct"},
    {ErrorCode::ShortAct, "ShortAct"},
    {ErrorCode::LengthOutOfRange, "LengthOutOfRange"},
    {ErrorCode::EmptyStoryline, "EmptyStoryline"},
    {ErrorCode::GenresRequired, "GenresRequired"},
    {ErrorCode::GenresForbidden, "GenresForbidden"},
    {ErrorCode::UnknownGenre, "UnknownGenre"},
    {ErrorCode::LengthMismatch, "LengthMismatch"},
    {ErrorCode::EmptyCorpus, "EmptyCorpus"},
    {ErrorCode::EmptySequence, "EmptySequence"},
    {ErrorCode::EmptyList, "EmptyList"},
    {ErrorCode::PositiveLogProb, "PositiveLogProb"},
    {ErrorCode::NoEligibleDocs, "NoEligibleDocs"},
    {ErrorCode::EmptyRatings, "EmptyRatings"},
    {ErrorCode::OutOfRangeScore, "OutOfRangeScore"},
    {ErrorCode::InvalidArgument, "InvalidArgument"},
    {ErrorCode::DuplicateId, "DuplicateId"},
    {ErrorCode::TargetParseFailure, "TargetParseFailure"},
    {ErrorCode::LengthViolation, "LengthViolation"},
    {ErrorCode::MissingLongStoryline, "MissingLongStoryline"},
    {ErrorCode::MissingGenres, "MissingGenres"},
    {ErrorCode::ManifestParseError, "ManifestParseError"},
    {ErrorCode::FileNotFound, "FileNotFound"},
    {ErrorCode::EmptyPrompt, "EmptyPrompt"},
    {ErrorCode::InvalidConfig, "InvalidConfig"},
    {ErrorCode::ContextOverflow, "ContextOverflow"},
    {ErrorCode::BackendUnavailable, "BackendUnavailable"},
    {ErrorCode::BackendRejected, "BackendRejected"},
    {ErrorCode::Timeout, "Timeout"},
    {ErrorCode::MaxTokensTruncated, "MaxTokensTruncated"},
    {ErrorCode::StorageFull, "StorageFull"},
    {ErrorCode::CorruptRecord, "CorruptRecord"},
    {ErrorCode::IoError, "IoError"},
    {ErrorCode::NotFound, "NotFound"},
    {ErrorCode::BadRequest, "BadRequest"},
    {ErrorCode::Unauthorized, "Unauthorized"},
}};

inline std::string_view to_string(ErrorCode code) {
  for (const auto& [c, name] : kErrorNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

inline std::optional<ErrorCode> error_code_from_string(std::string_view name) {
  for (const auto& [c, n] : kErrorNames) {
    if (n == name) return c;
  }
  return std::nullopt;
}

/// Exception carrying a machine-readable code plus structured detail
/// (offending tag, offsets, counts) for the CLI and HTTP layers.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

enum class Severity { Error, Warning };

struct Issue {
  Severity severity = Severity::Error;
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string message;
  nlohmann::json detail = nlohmann::json::object();

  static Issue from(const Error& e, Severity sev = Severity::Error) {
    return Issue{sev, e.code(), e.what(), e.detail()};
  }
};

// Non-throwing outcome of a validation pass.
struct ValidationReport {
  std::vector<Issue> errors;
  std::vector<Issue> warnings;

  bool ok() const noexcept { return errors.empty(); }
  bool clean() const noexcept { return errors.empty() && warnings.empty(); }

  void error(ErrorCode code, std::string message, nlohmann::json detail = nlohmann::json::object()) {
    errors.push_back(Issue{Severity::Error, code, std::move(message), std::move(detail)});
  }
  void warn(ErrorCode code, std::string message, nlohmann::json detail = nlohmann::json::object()) {
    warnings.push_back(Issue{Severity::Warning, code, std::move(message), std::move(detail)});
  }
  void merge(const ValidationReport& other) {
    errors.insert(errors.end(), other.errors.begin(), other.errors.end());
    warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
  }
  bool has(ErrorCode code) const {
    for (const auto& i : errors)
      if (i.code == code) return true;
    for (const auto& i : warnings)
      if (i.code == code) return true;
    return false;
  }
};

}  // namespace kurosawa
