#pragma once

// Measure-set configuration files (JSON):
//
//   {
//     "n": 3,
//     "measures": [
//       {"name": "mu1", "components": [{"family": "uniform", "params": [-3.14, 3.14]}, ...]},
//       ...
//     ],
//     "prior": [0.5, 0.5]
//   }
//
// Families: "uniform" [lo, hi], "normal" [mean, sd], "discrete" [atoms...].
// A component list of length 1 is broadcast to all n inputs. Unknown fields
// are rejected at every level.

#include <fstream>
#include <string>

#include "json.hpp"

#include "rgsa/error.hpp"
#include "rgsa/measures.hpp"
#include "rgsa/testbed.hpp"

namespace rgsa {

namespace detail {

inline UnivariateMeasure parse_component(const nlohmann::json& j) {
  reject_unknown(j, {"family", "params"}, "component");
  if (!j.contains("family") || !j["family"].is_string()) throw ConfigError("component: missing 'family'");
  if (!j.contains("params") || !j["params"].is_array()) throw ConfigError("component: missing 'params'");
  const auto family = j["family"].get<std::string>();
  const auto p = j["params"].get<std::vector<double>>();
  if (family == "uniform") {
    if (p.size() != 2) throw ConfigError("uniform component needs params [lo, hi]");
    return UnivariateMeasure::uniform(p[0], p[1]);
  }
  if (family == "normal") {
    if (p.size() != 2) throw ConfigError("normal component needs params [mean, sd]");
    return UnivariateMeasure::normal(p[0], p[1]);
  }
  if (family == "discrete") return UnivariateMeasure::discrete(p);
  throw ConfigError("component: unknown family '" + family + "'");
}

inline nlohmann::json component_to_json(const UnivariateMeasure& m) {
  return std::visit(
      [](const auto& p) -> nlohmann::json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Uniform>) return {{"family", "uniform"}, {"params", {p.lo, p.hi}}};
        else if constexpr (std::is_same_v<T, Normal>) return {{"family", "normal"}, {"params", {p.mean, p.sd}}};
        else return {{"family", "discrete"}, {"params", p.atoms}};
      },
      m.params());
}

}  // namespace detail

inline MeasureSet parse_measure_set(const nlohmann::json& j) {
  try {
    detail::reject_unknown(j, {"n", "measures", "prior"}, "measure set");
    if (!j.contains("n") || !j.contains("measures")) throw ConfigError("measure set: 'n' and 'measures' are required");
    const auto n = j["n"].get<std::size_t>();
    if (n == 0) throw ConfigError("measure set: n must be positive");
    if (!j["measures"].is_array() || j["measures"].empty()) {
      throw ConfigError("measure set: 'measures' must be a non-empty array");
    }
    std::vector<ProductMeasure> measures;
    std::vector<std::string> names;
    for (const auto& mj : j["measures"]) {
      detail::reject_unknown(mj, {"name", "components"}, "measure");
      if (!mj.contains("components") || !mj["components"].is_array()) {
        throw ConfigError("measure: missing 'components'");
      }
      std::vector<UnivariateMeasure> comps;
      for (const auto& cj : mj["components"]) comps.push_back(detail::parse_component(cj));
      if (comps.size() == 1 && n > 1) comps.assign(n, comps.front());
      if (comps.size() != n) {
        throw ConfigError("measure: expected " + std::to_string(n) + " components, got " +
                          std::to_string(comps.size()));
      }
      measures.emplace_back(std::move(comps));
      names.push_back(mj.contains("name") ? mj["name"].get<std::string>()
                                          : "mu" + std::to_string(measures.size()));
    }
    std::optional<std::vector<double>> prior;
    if (j.contains("prior") && !j["prior"].is_null()) prior = j["prior"].get<std::vector<double>>();
    return MeasureSet(std::move(measures), std::move(names), std::move(prior));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("measure set: ") + e.what());
  }
}

inline MeasureSet load_measure_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open measure-set file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed measure-set file '" + path + "': " + e.what());
  }
  return parse_measure_set(j);
}

inline nlohmann::json measure_set_to_json(const MeasureSet& set) {
  nlohmann::json out{{"n", set.dim()}, {"measures", nlohmann::json::array()}};
  for (std::size_t m = 0; m < set.size(); ++m) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : set[m].components()) comps.push_back(detail::component_to_json(c));
    out["measures"].push_back({{"name", set.name(m)}, {"components", comps}});
  }
  if (set.has_prior()) out["prior"] = set.prior();
  return out;
}

}  // namespace rgsa
