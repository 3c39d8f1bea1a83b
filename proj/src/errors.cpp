#include "fblopt/errors.hpp"

namespace fblopt {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::region: return "region";
    case ErrorKind::usage: return "usage";
    case ErrorKind::validation: return "validation";
    case ErrorKind::model: return "model";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::resource: return "resource";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::infeasible: return 3;
    case ErrorKind::numeric: return 4;
    case ErrorKind::io: return 5;
    default: return 2;
  }
}

}  // namespace fblopt
