#pragma once

#include <stdexcept>
#include <string>

namespace tailfit {

enum class ErrorKind {
  Spec,            // invalid GPU / layer / model description
  Parse,           // malformed CSV or JSON text
  Schema,          // structurally valid input that breaks a table invariant
  Value,           // out-of-range numeric value
  Reconciliation,  // provided throughput disagrees with flops / latency
  Lookup,          // width not present in a profile table
  Config,          // missing table or coverage for an optimization run
  Size,            // brute-force search space over the cap
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tailfit
