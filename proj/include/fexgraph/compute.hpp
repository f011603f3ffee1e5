#pragma once

#include <string>
#include <vector>

#include "fexgraph/feature_spec.hpp"

namespace fexgraph {

// Final value of one feature. Missing arises only for avg/min/max over an
// empty window; count/sum/distinct_count of empty are 0 and concat of empty
// is the empty list.
struct FeatureValue {
  enum class Kind { missing, number, text, list };

  Kind kind = Kind::missing;
  Json value;  // null | number | string | array, matching kind

  static FeatureValue missing() { return {Kind::missing, nullptr}; }
  static FeatureValue number(double v) { return {Kind::number, v}; }
  static FeatureValue text(std::string v) { return {Kind::text, std::move(v)}; }
  static FeatureValue list(Json array) { return {Kind::list, std::move(array)}; }

  bool operator==(const FeatureValue&) const = default;

  Json to_json() const { return value; }
  static FeatureValue from_json(const Json& j);
};

// Aggregate chronologically ordered values into the feature value. Numeric
// functions over non-numeric values throw TypeMismatch.
FeatureValue compute(const CompFunc& func, const std::vector<Json>& values);

// Equality with the documented float tolerance: sum/avg compare at relative
// tolerance, everything else exactly.
bool values_equivalent(const FeatureValue& a, const FeatureValue& b, CompFuncKind kind,
                       double rel_tol = 1e-9);

}  // namespace fexgraph
