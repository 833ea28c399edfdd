#include "errors.hpp"

#include <cstdio>

namespace hyperbend {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NullityJump: return "NullityJump";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::SingularPoint: return "SingularPoint";
    case ErrorCode::SingularResolvent: return "SingularResolvent";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::KernelJump: return "KernelJump";
    case ErrorCode::DegenerateSamples: return "DegenerateSamples";
    case ErrorCode::SingularS: return "SingularS";
    case ErrorCode::FrameDegenerate: return "FrameDegenerate";
    case ErrorCode::CompatibilityFailure: return "CompatibilityFailure";
    case ErrorCode::PathDependence: return "PathDependence";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::NoGap: return "NoGap";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::PipelineError: return "PipelineError";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& module, const std::string& message,
                    const std::vector<double>& point) {
  std::string out = std::string(error_code_name(code)) + " [" + module + "]: " + message;
  if (!point.empty()) {
    out += " at (";
    char buf[32];
    for (size_t i = 0; i < point.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", point[i]);
      if (i) out += ", ";
      out += buf;
    }
    out += ")";
  }
  return out;
}

}  // namespace

Error::Error(ErrorCode code, std::string module, std::string message, std::vector<double> point)
    : std::runtime_error(compose(code, module, message, point)),
      code_(code),
      module_(std::move(module)),
      detail_(std::move(message)),
      point_(std::move(point)) {}

void fail(ErrorCode code, const std::string& module, const std::string& message,
          std::vector<double> point) {
  throw Error(code, module, message, std::move(point));
}

}  // namespace hyperbend
