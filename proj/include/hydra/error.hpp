#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hydra {

enum class ErrorCode {
  UnknownRoot,
  MalformedRunNumber,
  UnknownImage,
  UnknownClass,
  UnknownPlotType,
  InvalidArgument,
  PermissionDenied,
  PlotTypeMismatch,
  NotAdmin,
  EmptyClass,
  ClassTooSmall,
  CorruptImage,
  DimensionMismatch,
  NonFiniteLoss,
  BackendUnavailable,
  UnknownModel,
  NoLabeledData,
  NoValidationData,
  ClassMismatch,
  RootUnreachable,
  IoFailure,
  ConfigInvalid,
  StoreFailure,
};

// Stable name used in CLI diagnostics and API error bodies.
std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace hydra
