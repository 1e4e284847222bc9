#pragma once

#include <stdexcept>
#include <string>

namespace mvitcc {

enum class ErrorKind {
  kNormalization,
  kDimension,
  kDomain,
  kIndex,
  kParse,
  kFormat,
  kLength,
  kConsistency,
  kInfeasible,
  kSize,
  kInvariant,
  kIo,
};

const char* to_string(ErrorKind kind);

// All library failures are reported through this exception; `kind` lets
// front ends map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mvitcc
