#include "fexgraph/feature_spec.hpp"

#include <algorithm>

#include "fexgraph/errors.hpp"

namespace fexgraph {

const char* comp_func_name(CompFuncKind kind) {
  switch (kind) {
    case CompFuncKind::count: return "count";
    case CompFuncKind::sum: return "sum";
    case CompFuncKind::avg: return "avg";
    case CompFuncKind::min: return "min";
    case CompFuncKind::max: return "max";
    case CompFuncKind::distinct_count: return "distinct_count";
    case CompFuncKind::concat: return "concat";
  }
  return "?";
}

std::optional<CompFuncKind> comp_func_from_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "count") return CompFuncKind::count;
  if (lower == "sum") return CompFuncKind::sum;
  if (lower == "avg") return CompFuncKind::avg;
  if (lower == "min") return CompFuncKind::min;
  if (lower == "max") return CompFuncKind::max;
  if (lower == "distinct_count") return CompFuncKind::distinct_count;
  if (lower == "concat") return CompFuncKind::concat;
  return std::nullopt;
}

bool comp_func_requires_numeric(CompFuncKind kind) {
  switch (kind) {
    case CompFuncKind::sum:
    case CompFuncKind::avg:
    case CompFuncKind::min:
    case CompFuncKind::max:
      return true;
    default:
      return false;
  }
}

namespace {

[[noreturn]] void validation_error(const std::string& feature_id, const std::string& reason) {
  throw_error(Errc::validation_error, "feature '" + feature_id + "': " + reason);
}

void validate_feature(const FeatureSpec& f) {
  if (f.feature_id.empty()) validation_error("<unnamed>", "empty feature_id");
  if (f.event_names.empty()) validation_error(f.feature_id, "event_names must be non-empty");
  for (const auto& e : f.event_names) {
    if (e.empty()) validation_error(f.feature_id, "empty event name");
  }
  if (f.time_range_s <= 0) validation_error(f.feature_id, "time_range_s must be positive");
  if (f.attr_names.empty()) validation_error(f.feature_id, "attr_names must be non-empty");
  for (const auto& a : f.attr_names) {
    if (a.empty()) validation_error(f.feature_id, "empty attribute name");
  }
  if (f.comp_func.kind != CompFuncKind::concat) {
    if (f.attr_names.size() != 1) {
      validation_error(f.feature_id, std::string(comp_func_name(f.comp_func.kind)) +
                                         " consumes exactly one attribute");
    }
    if (f.comp_func.concat_limit.has_value()) {
      validation_error(f.feature_id, "concat_limit is only valid for concat");
    }
  } else if (f.comp_func.concat_limit.has_value() && *f.comp_func.concat_limit == 0) {
    validation_error(f.feature_id, "concat_limit must be positive");
  }
  std::set<std::string> attr_set(f.attr_names.begin(), f.attr_names.end());
  if (attr_set.size() != f.attr_names.size()) {
    validation_error(f.feature_id, "duplicate attribute names");
  }
}

}  // namespace

void validate_model_spec(const ModelSpec& spec) {
  if (spec.model_id.empty()) throw_error(Errc::validation_error, "empty model_id");
  if (spec.inference_stub_ms < 0) throw_error(Errc::validation_error, "negative inference_stub_ms");
  std::set<std::string> ids;
  for (const auto& f : spec.features) {
    validate_feature(f);
    if (!ids.insert(f.feature_id).second) {
      validation_error(f.feature_id, "duplicate feature_id");
    }
  }
}

ModelSpec model_spec_from_json(const Json& doc) {
  ModelSpec spec;
  try {
    spec.model_id = doc.at("model_id").get<std::string>();
    spec.cache_budget_bytes = doc.value("cache_budget_bytes", std::uint64_t{0});
    spec.inference_stub_ms = doc.value("inference_stub_ms", 0.0);
    for (const auto& fj : doc.at("features")) {
      FeatureSpec f;
      f.feature_id = fj.at("id").get<std::string>();
      f.event_names = fj.at("events").get<std::vector<std::string>>();
      f.time_range_s = fj.at("range_s").get<std::int64_t>();
      f.attr_names = fj.at("attrs").get<std::vector<std::string>>();
      auto func_name = fj.at("func").get<std::string>();
      auto kind = comp_func_from_name(func_name);
      if (!kind) validation_error(f.feature_id, "unknown comp_func '" + func_name + "'");
      f.comp_func.kind = *kind;
      if (fj.contains("concat_limit")) {
        f.comp_func.concat_limit = fj.at("concat_limit").get<std::uint32_t>();
      }
      spec.features.push_back(std::move(f));
    }
  } catch (const Json::exception& e) {
    throw_error(Errc::parse_error, e.what());
  }
  validate_model_spec(spec);
  return spec;
}

ModelSpec parse_model_spec(const std::string& document) {
  Json doc = Json::parse(document, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw_error(Errc::parse_error, "model spec is not valid JSON");
  return model_spec_from_json(doc);
}

Json model_spec_to_json(const ModelSpec& spec) {
  Json features = Json::array();
  for (const auto& f : spec.features) {
    Json fj{{"id", f.feature_id},
            {"events", f.event_names},
            {"range_s", f.time_range_s},
            {"attrs", f.attr_names},
            {"func", comp_func_name(f.comp_func.kind)}};
    if (f.comp_func.concat_limit) fj["concat_limit"] = *f.comp_func.concat_limit;
    features.push_back(std::move(fj));
  }
  return Json{{"model_id", spec.model_id},
              {"cache_budget_bytes", spec.cache_budget_bytes},
              {"inference_stub_ms", spec.inference_stub_ms},
              {"features", std::move(features)}};
}

std::string serialize_model_spec(const ModelSpec& spec) {
  return model_spec_to_json(spec).dump(2) + "\n";
}

ModelSpec normalize(ModelSpec spec) {
  for (auto& f : spec.features) {
    std::sort(f.event_names.begin(), f.event_names.end());
    f.event_names.erase(std::unique(f.event_names.begin(), f.event_names.end()),
                        f.event_names.end());
  }
  std::sort(spec.features.begin(), spec.features.end(),
            [](const FeatureSpec& a, const FeatureSpec& b) { return a.feature_id < b.feature_id; });
  return spec;
}

std::vector<std::string> referenced_event_names(const ModelSpec& spec) {
  std::set<std::string> names;
  for (const auto& f : spec.features) names.insert(f.event_names.begin(), f.event_names.end());
  return {names.begin(), names.end()};
}

std::map<std::string, std::int64_t> max_range_by_event(const ModelSpec& spec) {
  std::map<std::string, std::int64_t> out;
  for (const auto& f : spec.features) {
    for (const auto& e : f.event_names) {
      auto [it, inserted] = out.emplace(e, f.time_range_s);
      if (!inserted) it->second = std::max(it->second, f.time_range_s);
    }
  }
  return out;
}

std::map<std::string, std::set<std::string>> union_attrs_by_event(const ModelSpec& spec) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& f : spec.features) {
    for (const auto& e : f.event_names) {
      out[e].insert(f.attr_names.begin(), f.attr_names.end());
    }
  }
  return out;
}

}  // namespace fexgraph
