#pragma once

#include <stdexcept>
#include <string>

namespace bcrf {

enum class ErrorKind {
  kInvalidArgument,
  kFormat,      // malformed input file / text tensor
  kInfeasible,  // no complete finite-weight or allowed path
  kConfig,      // invalid combination (e.g. mean field with forbidden arcs)
  kGuard,       // desk-scale enumeration guard exceeded
  kNumeric,     // non-finite intermediate or solver non-convergence
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace bcrf
