#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chc {

enum class ErrorCode {
  FileNotFound,
  MalformedImage,
  UnsupportedBitDepth,
  IoError,
  InvalidConfig,
  ShapeMismatch,
  NonFiniteGradient,
  FormatVersionMismatch,
  CorruptWeights,
  IndexOutOfRange,
  EmptyCorpus,
  DivergedTraining,
  InvalidSpec,
  EmptyRegion,
  InvalidParams,
  ImageTooSmall,
  EmptyAlphabet,
  SymbolOutOfAlphabet,
  MalformedBitstream,
  NoFeasibleCandidate,
  ModelMismatch,
  ChecksumMismatch,
  DimensionMismatch,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace chc
