#pragma once

#include <stdexcept>
#include <string>

namespace atb {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed trees, unknown nodes, invalid paths.
struct StructuralError : Error {
  using Error::Error;
};

// Bad parameters or malformed config documents.
struct ConfigError : Error {
  using Error::Error;
};

// A caller broke an operation's precondition (e.g. mean of an unhit cell).
struct ContractViolation : Error {
  using Error::Error;
};

// Run-aborting engine conditions (cannot-split on a leaf axis, trace mismatch).
struct EngineError : Error {
  using Error::Error;
};

// Requested operation not supported for this configuration.
struct UnsupportedError : Error {
  using Error::Error;
};

}  // namespace atb
