#include "hydra/error.hpp"

namespace hydra {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownRoot: return "UnknownRoot";
    case ErrorCode::MalformedRunNumber: return "MalformedRunNumber";
    case ErrorCode::UnknownImage: return "UnknownImage";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::UnknownPlotType: return "UnknownPlotType";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PermissionDenied: return "PermissionDenied";
    case ErrorCode::PlotTypeMismatch: return "PlotTypeMismatch";
    case ErrorCode::NotAdmin: return "NotAdmin";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::CorruptImage: return "CorruptImage";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::NoLabeledData: return "NoLabeledData";
    case ErrorCode::NoValidationData: return "NoValidationData";
    case ErrorCode::ClassMismatch: return "ClassMismatch";
    case ErrorCode::RootUnreachable: return "RootUnreachable";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::StoreFailure: return "StoreFailure";
  }
  return "Unknown";
}

}  // namespace hydra
