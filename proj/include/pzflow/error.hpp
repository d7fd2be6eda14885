#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pzflow {

enum class ErrorCode {
  ChannelDegenerate,
  RegionOverlap,
  ResolutionTooCoarse,
  SchemaError,
  PeriodicityError,
  TagError,
  ElementInversion,
  MissingMaterial,
  QuadratureError,
  EmptyFluidRegion,
  SingularSystem,
  SolverFailure,
  InfSupFailure,
  IncompleteCorrectors,
  NonPeriodicVelocity,
  ExtensionFailure,
  SingularElasticity,
  MissingPreviousState,
  NewtonDivergence,
  LinearSolveFailure,
  OracleBudgetExceeded,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ChannelDegenerate: return "ChannelDegenerate";
    case ErrorCode::RegionOverlap: return "RegionOverlap";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::PeriodicityError: return "PeriodicityError";
    case ErrorCode::TagError: return "TagError";
    case ErrorCode::ElementInversion: return "ElementInversion";
    case ErrorCode::MissingMaterial: return "MissingMaterial";
    case ErrorCode::QuadratureError: return "QuadratureError";
    case ErrorCode::EmptyFluidRegion: return "EmptyFluidRegion";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::InfSupFailure: return "InfSupFailure";
    case ErrorCode::IncompleteCorrectors: return "IncompleteCorrectors";
    case ErrorCode::NonPeriodicVelocity: return "NonPeriodicVelocity";
    case ErrorCode::ExtensionFailure: return "ExtensionFailure";
    case ErrorCode::SingularElasticity: return "SingularElasticity";
    case ErrorCode::MissingPreviousState: return "MissingPreviousState";
    case ErrorCode::NewtonDivergence: return "NewtonDivergence";
    case ErrorCode::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorCode::OracleBudgetExceeded: return "OracleBudgetExceeded";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Exception carrying a stable machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return to_string(code_); }

 private:
  ErrorCode code_;
};

}  // namespace pzflow
