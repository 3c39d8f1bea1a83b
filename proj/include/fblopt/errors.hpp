#pragma once

#include <stdexcept>
#include <string>

namespace fblopt {

enum class ErrorKind { domain, region, usage, validation, model, infeasible, numeric, resource, io };

const char* to_string(ErrorKind kind) noexcept;

// CLI exit code for an error kind: 2 validation, 3 infeasibility, 4 numeric, 5 I/O.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

// Raised where the sign arguments behind the convexity results do not apply.
struct RegionError : Error {
  explicit RegionError(const std::string& what) : Error(ErrorKind::region, what) {}
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

struct ModelError : Error {
  explicit ModelError(const std::string& what) : Error(ErrorKind::model, what) {}
};

class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double residual)
      : Error(ErrorKind::infeasible, what), residual_(residual) {}
  // Smallest achievable max_j g_j found by phase I (> 0 means no strictly feasible point).
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

struct ResourceError : Error {
  explicit ResourceError(const std::string& what) : Error(ErrorKind::resource, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace fblopt
