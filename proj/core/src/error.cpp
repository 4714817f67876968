#include "lx/error.hpp"

namespace lx {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownPerception: return "UnknownPerception";
    case ErrorCode::WrongKind: return "WrongKind";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MismatchedDefinition: return "MismatchedDefinition";
    case ErrorCode::DegenerateClass: return "DegenerateClass";
    case ErrorCode::Unparseable: return "Unparseable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::RetriesExhausted: return "RetriesExhausted";
    case ErrorCode::ZeroProbability: return "ZeroProbability";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveControl: return "NonPositiveControl";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Underdetermined: return "Underdetermined";
    case ErrorCode::SingularSigma: return "SingularSigma";
    case ErrorCode::NegativeVariance: return "NegativeVariance";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
    case ErrorCode::NotUtf8: return "NotUtf8";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::SizeExceeded: return "SizeExceeded";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidTransition: return "InvalidTransition";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace lx
