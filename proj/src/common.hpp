#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace apsm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Error categories. The C API maps these one-to-one onto status codes.
enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  non_finite,
  budget_exceeded,
  solver_failure,
  io_error,
  parse_error,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    fail(ErrorCode::dimension_mismatch,
         std::string(what) + ": expected " + std::to_string(b) + ", got " + std::to_string(a));
  }
}

}  // namespace apsm
