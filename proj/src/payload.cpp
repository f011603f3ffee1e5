#include "fexgraph/payload.hpp"

#include "fexgraph/errors.hpp"

namespace fexgraph {

bool is_valid_attribute_value(const Json& value) {
  if (value.is_number() || value.is_string() || value.is_boolean()) return true;
  if (!value.is_array()) return false;
  bool any_number = false;
  bool any_string = false;
  for (const auto& item : value) {
    if (item.is_number()) {
      any_number = true;
    } else if (item.is_string()) {
      any_string = true;
    } else {
      return false;
    }
  }
  // Arrays must be homogeneous; empty arrays are allowed.
  return !(any_number && any_string);
}

void validate_attribute_map(const Json& attrs) {
  if (!attrs.is_object()) {
    throw_error(Errc::malformed_payload, "payload is not a JSON object");
  }
  for (const auto& [key, value] : attrs.items()) {
    if (!is_valid_attribute_value(value)) {
      throw_error(Errc::malformed_payload, "attribute '" + key + "' has an unsupported value type");
    }
  }
}

AttributeMap decode_payload(std::string_view bytes) {
  Json parsed = Json::parse(bytes, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) {
    throw_error(Errc::malformed_payload, "payload is not valid JSON");
  }
  validate_attribute_map(parsed);
  return parsed;
}

std::string encode_payload(const AttributeMap& attrs) {
  validate_attribute_map(attrs);
  return attrs.dump();
}

AttributeMap prune_attributes(const AttributeMap& attrs, const std::set<std::string>& keep) {
  AttributeMap out = Json::object();
  for (const auto& key : keep) {
    auto it = attrs.find(key);
    if (it != attrs.end()) out[key] = *it;
  }
  return out;
}

std::size_t record_size_bytes(const AttributeMap& pruned) {
  return pruned.dump().size() + kRecordOverheadBytes;
}

}  // namespace fexgraph
