#include "chc/error.hpp"

namespace chc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MalformedImage: return "MalformedImage";
    case ErrorCode::UnsupportedBitDepth: return "UnsupportedBitDepth";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::CorruptWeights: return "CorruptWeights";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DivergedTraining: return "DivergedTraining";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::EmptyAlphabet: return "EmptyAlphabet";
    case ErrorCode::SymbolOutOfAlphabet: return "SymbolOutOfAlphabet";
    case ErrorCode::MalformedBitstream: return "MalformedBitstream";
    case ErrorCode::NoFeasibleCandidate: return "NoFeasibleCandidate";
    case ErrorCode::ModelMismatch: return "ModelMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
  }
  return "Unknown";
}

}  // namespace chc
