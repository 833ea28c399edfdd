#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hyperbend {

enum class ErrorCode {
  OutOfDomain = 1,
  RankDeficient,
  NullityJump,
  StepFailure,
  SingularPoint,
  SingularResolvent,
  BlowUp,
  KernelJump,
  DegenerateSamples,
  SingularS,
  FrameDegenerate,
  CompatibilityFailure,
  PathDependence,
  IllConditioned,
  NoGap,
  ParseError,
  ValidationError,
  PipelineError,
  UnknownScenario,
  InvalidArgument,
};

const char* error_code_name(ErrorCode code);

// Module errors carry the module name and the parameter point where they arose.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, std::string message,
        std::vector<double> point = {});

  ErrorCode code() const { return code_; }
  const std::string& module() const { return module_; }
  const std::string& detail() const { return detail_; }
  const std::vector<double>& point() const { return point_; }

 private:
  ErrorCode code_;
  std::string module_;
  std::string detail_;
  std::vector<double> point_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& module, const std::string& message,
                       std::vector<double> point = {});

}  // namespace hyperbend
