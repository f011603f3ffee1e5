#pragma once

#include <stdexcept>
#include <string>

namespace fexgraph {

enum class Errc {
  out_of_order_timestamp,
  malformed_payload,
  storage_failure,
  parse_error,
  validation_error,
  type_mismatch,
  unsorted_input,
  instance_too_large,
  equivalence_failure,
  invalid_argument,
};

const char* errc_name(Errc code);

// Every error thrown by the library carries a code so callers can branch
// without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void throw_error(Errc code, const std::string& message);

}  // namespace fexgraph
