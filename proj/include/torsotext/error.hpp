#pragma once

#include <stdexcept>
#include <string>

namespace torsotext {

enum class Err {
  NoFrames,
  InconsistentSequence,
  DecodeError,
  RangeError,
  FormatError,
  TruncatedError,
  ShapeError,
  EmptyInput,
  InsufficientFrames,
  DomainError,
  NumericalError,
  DetectorError,
  NoTorsoSpace,
  InvalidArgument,
  IoError,
  SceneSpecError,
};

inline const char* to_string(Err e) {
  switch (e) {
    case Err::NoFrames: return "NoFrames";
    case Err::InconsistentSequence: return "InconsistentSequence";
    case Err::DecodeError: return "DecodeError";
    case Err::RangeError: return "RangeError";
    case Err::FormatError: return "FormatError";
    case Err::TruncatedError: return "TruncatedError";
    case Err::ShapeError: return "ShapeError";
    case Err::EmptyInput: return "EmptyInput";
    case Err::InsufficientFrames: return "InsufficientFrames";
    case Err::DomainError: return "DomainError";
    case Err::NumericalError: return "NumericalError";
    case Err::DetectorError: return "DetectorError";
    case Err::NoTorsoSpace: return "NoTorsoSpace";
    case Err::InvalidArgument: return "InvalidArgument";
    case Err::IoError: return "IoError";
    case Err::SceneSpecError: return "SceneSpecError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Err code() const noexcept { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void raise(Err code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace torsotext
