#pragma once

#include <stdexcept>
#include <string>

namespace pushnet {

// Each kind maps to a distinct process exit code in the CLI.
enum class ErrorKind {
  InvalidArgument = 2,
  NonFinite = 3,
  Geometry = 4,
  Io = 5,
  Format = 6,
  Divergence = 7,
  Config = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace pushnet
