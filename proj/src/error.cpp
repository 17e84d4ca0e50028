#include "exsplinet/error.hpp"

namespace exsplinet {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_hyperparameter: return "invalid-hyperparameter";
    case ErrorKind::out_of_domain: return "out-of-domain";
    case ErrorKind::index_out_of_range: return "index-out-of-range";
    case ErrorKind::degree_too_low: return "degree-too-low";
    case ErrorKind::shape_mismatch: return "shape-mismatch";
    case ErrorKind::degenerate_weights: return "degenerate-weights";
    case ErrorKind::config_mismatch: return "config-mismatch";
    case ErrorKind::invalid_coefficients: return "invalid-coefficients";
    case ErrorKind::empty_dataset: return "empty-dataset";
    case ErrorKind::io_error: return "io-error";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::schema_mismatch: return "schema-mismatch";
    case ErrorKind::constant_feature: return "constant-feature";
    case ErrorKind::unknown_name: return "unknown-name";
    case ErrorKind::bad_magic: return "bad-magic";
    case ErrorKind::truncated_file: return "truncated-file";
    case ErrorKind::count_mismatch: return "count-mismatch";
    case ErrorKind::rejection_stall: return "rejection-stall";
    case ErrorKind::version_mismatch: return "version-mismatch";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::numerical_failure: return "numerical-failure";
  }
  return "unknown-error";
}

}  // namespace exsplinet
