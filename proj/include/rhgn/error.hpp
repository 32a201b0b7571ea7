#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rhgn {

enum class Errc {
  LengthMismatch,
  EvenLength,
  NonFinite,
  EmptyCorpus,
  LabelMismatch,
  Untrained,
  IoFailure,
  VersionMismatch,
  CorruptBundle,
  DimensionMismatch,
  NothingToShare,
  EmptyCollection,
  DomainError,
  UnknownId,
  GenerationFailure,
  EmptyConfusion,
  EmptySample,
  MisalignedRuns,
  UnknownTruth,
  ParseError,
  InvalidArgument,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EvenLength: return "EvenLength";
    case Errc::NonFinite: return "NonFinite";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::LabelMismatch: return "LabelMismatch";
    case Errc::Untrained: return "Untrained";
    case Errc::IoFailure: return "IoFailure";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::CorruptBundle: return "CorruptBundle";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NothingToShare: return "NothingToShare";
    case Errc::EmptyCollection: return "EmptyCollection";
    case Errc::DomainError: return "DomainError";
    case Errc::UnknownId: return "UnknownId";
    case Errc::GenerationFailure: return "GenerationFailure";
    case Errc::EmptyConfusion: return "EmptyConfusion";
    case Errc::EmptySample: return "EmptySample";
    case Errc::MisalignedRuns: return "MisalignedRuns";
    case Errc::UnknownTruth: return "UnknownTruth";
    case Errc::ParseError: return "ParseError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// All library failures surface as this exception; code() identifies the kind.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rhgn
