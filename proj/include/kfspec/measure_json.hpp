#pragma once

// JSON schema for MeasureSpec:
//   {"type":"ifs","maps":[{"a":<real>,"b":<real>},...],"weights":[<real>,...]}
//   {"type":"lebesgue"}
//   {"type":"density","grid_n":<int>,"values":[<real>,...]}

#include <cstdint>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "kfspec/measure.hpp"

namespace kfspec {

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw InvalidArgument(where + ": unknown key '" + key + "'");
  }
}

inline double json_real(const nlohmann::json& j, const std::string& what) {
  if (!j.is_number()) throw InvalidArgument(what + " must be a number");
  return j.get<double>();
}

}  // namespace detail

inline MeasureSpec measure_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("measure: expected a JSON object");
  if (!j.contains("type") || !j["type"].is_string())
    throw InvalidArgument("measure: missing string field 'type'");
  const auto type = j["type"].get<std::string>();
  if (type == "lebesgue") {
    detail::reject_unknown_keys(j, {"type"}, "measure");
    return MeasureSpec::lebesgue();
  }
  if (type == "density") {
    detail::reject_unknown_keys(j, {"type", "grid_n", "values"}, "measure");
    if (!j.contains("values") || !j["values"].is_array())
      throw InvalidArgument("density: missing array 'values'");
    std::vector<double> values;
    for (const auto& v : j["values"]) values.push_back(detail::json_real(v, "density value"));
    if (j.contains("grid_n")) {
      if (!j["grid_n"].is_number_integer() || j["grid_n"].get<std::int64_t>() < 1)
        throw InvalidArgument("density: grid_n must be a positive integer");
      if (j["grid_n"].get<std::size_t>() != values.size())
        throw InvalidArgument("density: grid_n does not match values length");
    }
    return MeasureSpec::density(std::move(values));
  }
  if (type == "ifs") {
    detail::reject_unknown_keys(j, {"type", "maps", "weights"}, "measure");
    if (!j.contains("maps") || !j["maps"].is_array())
      throw InvalidArgument("ifs: missing array 'maps'");
    if (!j.contains("weights") || !j["weights"].is_array())
      throw InvalidArgument("ifs: missing array 'weights'");
    std::vector<AffineMap> maps;
    for (const auto& m : j["maps"]) {
      if (!m.is_object() || !m.contains("a") || !m.contains("b"))
        throw InvalidArgument("ifs: each map needs fields 'a' and 'b'");
      detail::reject_unknown_keys(m, {"a", "b"}, "ifs map");
      maps.push_back({detail::json_real(m["a"], "map a"), detail::json_real(m["b"], "map b")});
    }
    std::vector<double> weights;
    for (const auto& w : j["weights"]) weights.push_back(detail::json_real(w, "ifs weight"));
    return MeasureSpec::ifs(std::move(maps), std::move(weights));
  }
  throw InvalidArgument("measure: unknown type '" + type + "'");
}

inline nlohmann::json measure_to_json(const MeasureSpec& spec) {
  nlohmann::json j;
  switch (spec.kind()) {
    case MeasureKind::lebesgue:
      j["type"] = "lebesgue";
      break;
    case MeasureKind::density: {
      const auto& d = *spec.as_density();
      j["type"] = "density";
      j["grid_n"] = d.values.size();
      j["values"] = d.values;
      break;
    }
    case MeasureKind::ifs: {
      const auto& ifs = *spec.as_ifs();
      j["type"] = "ifs";
      j["maps"] = nlohmann::json::array();
      for (const auto& m : ifs.maps) j["maps"].push_back({{"a", m.a}, {"b", m.b}});
      j["weights"] = ifs.weights;
      break;
    }
  }
  return j;
}

/// FNV-1a over the compact JSON dump; identifies a measure in output metadata.
inline std::uint64_t measure_hash(const MeasureSpec& spec) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : measure_to_json(spec).dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace kfspec
