#pragma once
#include <stdexcept>
#include <string>

namespace detwave {

enum class ErrorKind {
  Validation,
  Domain,
  IgnitionPlacement,
  NotAWave,
  NotRestPoint,
  UnsupportedData,
  CFLViolation,
  DegenerateProfile,
  Sonic,
  Branch,
  NoBranch,
  Solve,
  Bracket,
  NoConnection,
  Integration,
  NonConvergence,
  Plateau,
  NoPlateau,
  InconsistentIndex,
  ContourTooClose,
  NonIntegerWinding,
  NoSolution,
  NonFiniteState,
  UnknownSubcommand
};

const char* kind_name(ErrorKind k);
int exit_code(ErrorKind k);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }
private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

}
