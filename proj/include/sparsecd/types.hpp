#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace sparsecd {

using cplx = std::complex<double>;
using Index = Eigen::Index;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

enum class ErrorKind {
  invalid_input,
  config,
  numeric,
  capacity,
  unsupported,
  search_failure,
  insufficient_data,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::config: return "configuration error";
    case ErrorKind::numeric: return "numeric failure";
    case ErrorKind::capacity: return "capacity exceeded";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::search_failure: return "search failure";
    case ErrorKind::insufficient_data: return "insufficient data";
  }
  return "error";
}

/// Every failure raised by the library carries a kind so the CLI can map it
/// onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class SearchFailure : public Error {
 public:
  SearchFailure(const std::string& what, double best_residual)
      : Error(ErrorKind::search_failure, what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Process exit codes: 0 success, 2 config, 3 numeric, 4 capacity/unsupported.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input:
    case ErrorKind::config:
      return 2;
    case ErrorKind::numeric:
    case ErrorKind::search_failure:
    case ErrorKind::insufficient_data:
      return 3;
    case ErrorKind::capacity:
    case ErrorKind::unsupported:
      return 4;
  }
  return 1;
}

namespace detail {

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace detail
}  // namespace sparsecd
