#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>

#include "json.hpp"

namespace fexgraph {

using Json = nlohmann::json;

// Decoded behavior-specific attributes: a flat JSON object whose values are
// numbers, strings, booleans, or homogeneous arrays of numbers/strings.
using AttributeMap = Json;

// Fixed per-record bookkeeping overhead charged on top of the encoded
// attribute bytes when accounting cache memory.
inline constexpr std::size_t kRecordOverheadBytes = 32;

bool is_valid_attribute_value(const Json& value);

// Throws MalformedPayload if the object violates the flat-map contract.
void validate_attribute_map(const Json& attrs);

// Parse payload bytes into an attribute map. Throws MalformedPayload on
// syntax errors or contract violations.
AttributeMap decode_payload(std::string_view bytes);

// Inverse of decode_payload. Key order in the output is deterministic
// (lexicographic), so encode(decode(x)) is stable.
std::string encode_payload(const AttributeMap& attrs);

// Restrict an attribute map to the given key set. Keys absent from the map
// are simply not present in the result.
AttributeMap prune_attributes(const AttributeMap& attrs, const std::set<std::string>& keep);

// Bytes charged for one cached record: encoded pruned map + fixed overhead.
std::size_t record_size_bytes(const AttributeMap& pruned);

}  // namespace fexgraph
