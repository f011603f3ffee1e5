#include "fexgraph/errors.hpp"

namespace fexgraph {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::out_of_order_timestamp: return "OutOfOrderTimestamp";
    case Errc::malformed_payload: return "MalformedPayload";
    case Errc::storage_failure: return "StorageFailure";
    case Errc::parse_error: return "ParseError";
    case Errc::validation_error: return "ValidationError";
    case Errc::type_mismatch: return "TypeMismatch";
    case Errc::unsorted_input: return "UnsortedInput";
    case Errc::instance_too_large: return "InstanceTooLarge";
    case Errc::equivalence_failure: return "EquivalenceFailure";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "UnknownError";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

void throw_error(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace fexgraph
