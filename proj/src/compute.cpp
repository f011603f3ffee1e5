#include "fexgraph/compute.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fexgraph/errors.hpp"

namespace fexgraph {

FeatureValue FeatureValue::from_json(const Json& j) {
  if (j.is_null()) return missing();
  if (j.is_number()) return number(j.get<double>());
  if (j.is_string()) return text(j.get<std::string>());
  if (j.is_array()) return list(j);
  throw_error(Errc::parse_error, "not a feature value");
}

namespace {

double require_number(const Json& v, CompFuncKind kind) {
  if (!v.is_number()) {
    throw_error(Errc::type_mismatch, std::string(comp_func_name(kind)) +
                                         " over non-numeric value " + v.dump());
  }
  return v.get<double>();
}

}  // namespace

FeatureValue compute(const CompFunc& func, const std::vector<Json>& values) {
  switch (func.kind) {
    case CompFuncKind::count:
      return FeatureValue::number(static_cast<double>(values.size()));

    case CompFuncKind::sum: {
      double acc = 0.0;
      for (const auto& v : values) acc += require_number(v, func.kind);
      return FeatureValue::number(acc);
    }

    case CompFuncKind::avg: {
      if (values.empty()) return FeatureValue::missing();
      double acc = 0.0;
      for (const auto& v : values) acc += require_number(v, func.kind);
      return FeatureValue::number(acc / static_cast<double>(values.size()));
    }

    case CompFuncKind::min:
    case CompFuncKind::max: {
      if (values.empty()) return FeatureValue::missing();
      double best = require_number(values.front(), func.kind);
      for (std::size_t i = 1; i < values.size(); ++i) {
        double v = require_number(values[i], func.kind);
        best = func.kind == CompFuncKind::min ? std::min(best, v) : std::max(best, v);
      }
      return FeatureValue::number(best);
    }

    case CompFuncKind::distinct_count: {
      std::set<Json> distinct(values.begin(), values.end());
      return FeatureValue::number(static_cast<double>(distinct.size()));
    }

    case CompFuncKind::concat: {
      std::size_t start = 0;
      if (func.concat_limit && values.size() > *func.concat_limit) {
        start = values.size() - *func.concat_limit;  // keep the last N
      }
      Json out = Json::array();
      for (std::size_t i = start; i < values.size(); ++i) out.push_back(values[i]);
      return FeatureValue::list(std::move(out));
    }
  }
  throw_error(Errc::invalid_argument, "unknown comp_func");
}

bool values_equivalent(const FeatureValue& a, const FeatureValue& b, CompFuncKind kind,
                       double rel_tol) {
  if (a.kind != b.kind) return false;
  if (a.kind != FeatureValue::Kind::number) return a.value == b.value;
  if (kind != CompFuncKind::sum && kind != CompFuncKind::avg) return a.value == b.value;
  double x = a.value.get<double>();
  double y = b.value.get<double>();
  if (x == y) return true;
  double scale = std::max(std::abs(x), std::abs(y));
  return std::abs(x - y) <= rel_tol * scale;
}

}  // namespace fexgraph
