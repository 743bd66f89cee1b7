#include "detwave/errors.hpp"

namespace detwave {

const char* kind_name(ErrorKind k)
{
  switch (k) {
  case ErrorKind::Validation: return "ValidationError";
  case ErrorKind::Domain: return "DomainError";
  case ErrorKind::IgnitionPlacement: return "IgnitionPlacementError";
  case ErrorKind::NotAWave: return "NotAWave";
  case ErrorKind::NotRestPoint: return "NotRestPoint";
  case ErrorKind::UnsupportedData: return "UnsupportedData";
  case ErrorKind::CFLViolation: return "CFLViolation";
  case ErrorKind::DegenerateProfile: return "DegenerateProfile";
  case ErrorKind::Sonic: return "SonicError";
  case ErrorKind::Branch: return "BranchError";
  case ErrorKind::NoBranch: return "NoBranch";
  case ErrorKind::Solve: return "SolveError";
  case ErrorKind::Bracket: return "BracketError";
  case ErrorKind::NoConnection: return "NoConnection";
  case ErrorKind::Integration: return "IntegrationError";
  case ErrorKind::NonConvergence: return "NonConvergence";
  case ErrorKind::Plateau: return "PlateauError";
  case ErrorKind::NoPlateau: return "NoPlateau";
  case ErrorKind::InconsistentIndex: return "InconsistentIndex";
  case ErrorKind::ContourTooClose: return "ContourTooClose";
  case ErrorKind::NonIntegerWinding: return "NonIntegerWinding";
  case ErrorKind::NoSolution: return "NoSolution";
  case ErrorKind::NonFiniteState: return "NonFiniteState";
  case ErrorKind::UnknownSubcommand: return "UnknownSubcommand";
  }
  return "Error";
}

int exit_code(ErrorKind k)
{
  switch (k) {
  case ErrorKind::Validation:
  case ErrorKind::Domain:
  case ErrorKind::IgnitionPlacement:
  case ErrorKind::NotAWave:
  case ErrorKind::NotRestPoint:
  case ErrorKind::UnsupportedData:
  case ErrorKind::CFLViolation:
  case ErrorKind::DegenerateProfile:
  case ErrorKind::Sonic:
  case ErrorKind::Branch:
    return 2;
  case ErrorKind::UnknownSubcommand:
    return 64;
  default:
    return 3;
  }
}

}
