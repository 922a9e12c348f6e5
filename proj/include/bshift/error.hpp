#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bshift {

enum class ErrorCode {
  InvalidVector,
  TargetUnreachable,
  TargetBelowMinimum,
  DegeneratePartition,
  SupportTooSmall,
  AtomMassTooLarge,
  BadVector,
  KTooSmall,
  NotDisjoint,
  MassMismatch,
  EntropyMismatch,
  TrivialSpace,
  SpecMismatch,
  BallTooLarge,
  NoDesignatedSubgroup,
  LengthMismatch,
  SymbolNotInSupport,
  DegenerateWitness,
  TooFewResolved,
  InvalidConfig,
  LabelCollision,
  NotInV,
  IoError,
};

constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidVector: return "InvalidVector";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::TargetBelowMinimum: return "TargetBelowMinimum";
    case ErrorCode::DegeneratePartition: return "DegeneratePartition";
    case ErrorCode::SupportTooSmall: return "SupportTooSmall";
    case ErrorCode::AtomMassTooLarge: return "AtomMassTooLarge";
    case ErrorCode::BadVector: return "BadVector";
    case ErrorCode::KTooSmall: return "KTooSmall";
    case ErrorCode::NotDisjoint: return "NotDisjoint";
    case ErrorCode::MassMismatch: return "MassMismatch";
    case ErrorCode::EntropyMismatch: return "EntropyMismatch";
    case ErrorCode::TrivialSpace: return "TrivialSpace";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::BallTooLarge: return "BallTooLarge";
    case ErrorCode::NoDesignatedSubgroup: return "NoDesignatedSubgroup";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SymbolNotInSupport: return "SymbolNotInSupport";
    case ErrorCode::DegenerateWitness: return "DegenerateWitness";
    case ErrorCode::TooFewResolved: return "TooFewResolved";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::LabelCollision: return "LabelCollision";
    case ErrorCode::NotInV: return "NotInV";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bshift
