#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace invar {

enum class ErrorCode {
  InvalidArgument,
  Io,
  SolverFailure,
  Conditioning,
  CyclicOcclusion,
  Infeasible,
  DegenerateConfiguration,
  FlatPatch,
  UndefinedOrientation,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// command-line front end can map it onto a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when an iterative solver detects an objective increase.  The trace
// up to and including the offending value is attached for diagnosis.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, std::vector<double> trace)
      : Error(ErrorCode::SolverFailure, what), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

// Cyclic occlusion constraints; `cycle` lists region ids along the cycle.
class CyclicOcclusion : public Error {
 public:
  explicit CyclicOcclusion(std::vector<int> cycle);

  const std::vector<int>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<int> cycle_;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

}  // namespace invar
