#include "invar/error.hpp"

namespace invar {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Io: return "io";
    case ErrorCode::SolverFailure: return "solver-failure";
    case ErrorCode::Conditioning: return "conditioning";
    case ErrorCode::CyclicOcclusion: return "cyclic-occlusion";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::DegenerateConfiguration: return "degenerate-configuration";
    case ErrorCode::FlatPatch: return "flat-patch";
    case ErrorCode::UndefinedOrientation: return "undefined-orientation";
  }
  return "unknown";
}

namespace {

std::string describe_cycle(const std::vector<int>& cycle) {
  std::string s = "cyclic occlusion constraints:";
  for (int r : cycle) s += " " + std::to_string(r);
  if (!cycle.empty()) s += " " + std::to_string(cycle.front());
  return s;
}

}  // namespace

CyclicOcclusion::CyclicOcclusion(std::vector<int> cycle)
    : Error(ErrorCode::CyclicOcclusion, describe_cycle(cycle)), cycle_(std::move(cycle)) {}

}  // namespace invar
