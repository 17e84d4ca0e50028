#pragma once

#include <stdexcept>
#include <string>

namespace exsplinet {

enum class ErrorKind {
  invalid_hyperparameter,
  out_of_domain,
  index_out_of_range,
  degree_too_low,
  shape_mismatch,
  degenerate_weights,
  config_mismatch,
  invalid_coefficients,
  empty_dataset,
  io_error,
  parse_error,
  schema_mismatch,
  constant_feature,
  unknown_name,
  bad_magic,
  truncated_file,
  count_mismatch,
  rejection_stall,
  version_mismatch,
  invalid_argument,
  numerical_failure,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace exsplinet
