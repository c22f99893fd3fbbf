#include "tailfit/error.hpp"

namespace tailfit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Spec: return "spec error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Value: return "value error";
    case ErrorKind::Reconciliation: return "reconciliation error";
    case ErrorKind::Lookup: return "lookup error";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Size: return "size error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

}  // namespace tailfit
