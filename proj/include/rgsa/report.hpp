#pragma once

// Batch analysis: loads a model (built-in or sample file) and a measure set,
// runs the requested sections and assembles one JSON report. Plot data (CSV)
// is derived from the report alone.
//
// Every computed number is written as {"value", "mode", "tolerance"}, plus
// "se" for sampling estimates. Modes: "quadrature" (tensor rules), "MC"
// (quasi or plain Monte Carlo), "reweighted" (importance weights).

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "rgsa/anova.hpp"
#include "rgsa/diagnostics.hpp"
#include "rgsa/error.hpp"
#include "rgsa/estimators.hpp"
#include "rgsa/measure_config.hpp"
#include "rgsa/measures.hpp"
#include "rgsa/mixture_anova.hpp"
#include "rgsa/model.hpp"
#include "rgsa/sample_io.hpp"
#include "rgsa/testbed.hpp"

namespace rgsa {

inline constexpr std::string_view report_schema = "rgsa-report/1";
inline constexpr std::string_view tool_version = "0.1.0";

enum class Estimator { quad, bruteforce, pickfreeze, givendata, reweight };

inline Estimator parse_estimator(std::string_view s) {
  if (s == "quad") return Estimator::quad;
  if (s == "bruteforce") return Estimator::bruteforce;
  if (s == "pickfreeze") return Estimator::pickfreeze;
  if (s == "givendata") return Estimator::givendata;
  if (s == "reweight") return Estimator::reweight;
  throw ConfigError("unknown estimator '" + std::string(s) + "'");
}

inline std::string_view estimator_name(Estimator e) {
  switch (e) {
    case Estimator::quad: return "quad";
    case Estimator::bruteforce: return "bruteforce";
    case Estimator::pickfreeze: return "pickfreeze";
    case Estimator::givendata: return "givendata";
    case Estimator::reweight: return "reweight";
  }
  return "quad";
}

inline const std::vector<std::string>& known_sections() {
  static const std::vector<std::string> all{"per_measure", "mixture", "dimension", "robust", "trend", "cores"};
  return all;
}

struct AnalysisConfig {
  std::string model;          // "ishigami", "multilinear:<file>", a model .json, or a sample file
  std::string measures_file;
  bool with_prior = false;    // adds the mixture section to the defaults
  std::optional<std::vector<double>> prior;  // replaces the file's prior
  std::vector<std::string> sections;         // empty selects the defaults
  Estimator estimator = Estimator::quad;
  std::size_t n = 4096;       // runs per measure (outer loop for bruteforce)
  std::size_t n_inner = 128;  // bruteforce inner loop
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string base_measure;   // origin of a reweighted or given-data sample
  std::size_t curve_points = 65;
  QuadratureOptions quadrature{};
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline double finite(double v, std::string_view what) {
  if (!std::isfinite(v)) throw NumericError("non-finite " + std::string(what));
  return v;
}

inline ojson tagged(double v, std::string_view mode, double tol, std::string_view what = "value") {
  return ojson{{"value", finite(v, what)}, {"mode", mode}, {"tolerance", finite(tol, what)}};
}

inline ojson tagged_se(double v, double se, std::string_view mode, std::string_view what = "estimate") {
  auto j = tagged(v, mode, 2.0 * se, what);
  j["se"] = finite(se, what);
  return j;
}

inline std::string input_label(std::size_t i) { return "x" + std::to_string(i + 1); }

inline std::string public_mode(const std::string& vd_mode) { return vd_mode == "quadrature" ? "quadrature" : "MC"; }

struct ModelSource {
  std::optional<BuiltinModel> builtin;
  std::optional<EvaluatedSample> sample;
};

inline ModelSource load_model_source(const std::string& spec) {
  if (spec.empty()) throw ConfigError("a model or sample file is required");
  if (spec == "ishigami" || spec.starts_with("multilinear:")) return {make_builtin_model(spec), std::nullopt};
  if (spec.ends_with(".json")) return {make_builtin_model("multilinear:" + spec), std::nullopt};
  if (spec.find_first_of("./\\") == std::string::npos && !std::filesystem::exists(spec)) {
    throw ConfigError("unknown model '" + spec + "'");
  }
  return {std::nullopt, read_sample(spec)};
}

// One measure's results, from quadrature or from an estimator.
struct MeasureResult {
  std::optional<VarianceDecomposition> vd;
  std::optional<EstimateReport> est;
  std::string mode;
};

/// The documented relative tolerance, floored at the curve's own numerical
/// accuracy so that an identically zero effect is not judged on roundoff.
inline MonotonicityVerdict curve_verdict(const EffectCurve& curve, double accuracy) {
  const auto [lo, hi] = std::minmax_element(curve.values.begin(), curve.values.end());
  const double scale = std::max({1.0, std::abs(*lo), std::abs(*hi)});
  return monotonicity_check(curve, std::max(1e-6 * (*hi - *lo), accuracy * scale));
}

inline std::uint64_t measure_seed(std::uint64_t seed, std::size_t m) { return stream_seed(seed, tag_hash("measure"), m); }

}  // namespace detail

/// Runs the configured analysis. Throws ConfigError, PriorRequiredError,
/// DataError or NumericError; the report never contains NaN or infinity.
inline nlohmann::ordered_json run_analysis(const AnalysisConfig& cfg) {
  using detail::ojson;
  using detail::tagged;
  using detail::tagged_se;

  // ---- configuration ------------------------------------------------------
  auto set = load_measure_set(cfg.measures_file);
  if (cfg.prior) set = set.with_prior(*cfg.prior);
  std::vector<std::string> sections = cfg.sections;
  if (sections.empty()) {
    sections = {"per_measure", "dimension", "robust", "trend", "cores"};
    if (cfg.with_prior) sections.insert(sections.begin() + 1, "mixture");
  }
  for (const auto& s : sections) {
    if (std::find(known_sections().begin(), known_sections().end(), s) == known_sections().end()) {
      throw ConfigError("unknown section '" + s + "'");
    }
  }
  const auto wants = [&](std::string_view s) { return std::find(sections.begin(), sections.end(), s) != sections.end(); };
  if ((wants("mixture") || cfg.with_prior) && !set.has_prior()) {
    throw PriorRequiredError("the mixture analysis needs a prior over the measure set (config 'prior' or --prior-weights)");
  }
  const auto source = detail::load_model_source(cfg.model);
  const std::size_t n = set.dim();
  const std::size_t q = set.size();
  if (source.builtin && source.builtin->model.dim() != n) {
    throw ConfigError("model has " + std::to_string(source.builtin->model.dim()) + " inputs but the measures have " +
                      std::to_string(n));
  }
  if (source.sample && source.sample->dim() != n) {
    throw DataError("sample file has " + std::to_string(source.sample->dim()) + " inputs but the measures have " +
                    std::to_string(n));
  }
  if (source.sample && cfg.estimator != Estimator::givendata && cfg.estimator != Estimator::reweight) {
    throw ConfigError("a sample file supports only the givendata and reweight estimators");
  }
  if (cfg.curve_points < 2) throw ConfigError("curve_points must be at least 2");

  std::vector<std::string> warnings;
  const bool have_model = source.builtin.has_value();

  // Base measure of a reused sample: explicit, else the sample's tag, else the first.
  std::size_t base = 0;
  if (cfg.estimator == Estimator::givendata || cfg.estimator == Estimator::reweight) {
    std::string name = cfg.base_measure;
    if (name.empty() && source.sample) name = source.sample->measure_tag;
    if (!name.empty()) {
      const auto idx = set.index_of(name);
      if (!idx) throw ConfigError("base measure '" + name + "' is not in the measure set");
      base = *idx;
    } else if (source.sample) {
      warnings.push_back("sample file carries no measure tag; assuming it was drawn under " + set.name(0));
    }
  }

  // ---- per-measure analyses ----------------------------------------------
  std::vector<std::optional<detail::MeasureResult>> results(q);
  switch (cfg.estimator) {
    case Estimator::quad: {
      const auto& model = source.builtin->model;
      // Independent per measure; the merge below is ordered by measure index.
      parallel_for(q, cfg.workers, [&](std::size_t m) {
        auto vd = variance_decomposition(model, set[m], 0, cfg.quadrature, set.name(m));
        results[m] = detail::MeasureResult{std::move(vd), std::nullopt, ""};
        results[m]->mode = detail::public_mode(results[m]->vd->mode);
      });
      for (std::size_t m = 0; m < q; ++m) {
        if (zero_variance(*results[m]->vd)) throw ZeroVarianceError("model output has zero variance under " + set.name(m));
      }
      break;
    }
    case Estimator::bruteforce:
    case Estimator::pickfreeze: {
      const auto& model = source.builtin->model;
      for (std::size_t m = 0; m < q; ++m) {
        const auto seed = detail::measure_seed(cfg.seed, m);
        auto est = cfg.estimator == Estimator::bruteforce
                       ? brute_force_indices(model, set[m], cfg.n, cfg.n_inner, seed, cfg.workers)
                       : pick_freeze_indices(model, set[m], cfg.n, seed, cfg.workers);
        results[m] = detail::MeasureResult{std::nullopt, std::move(est), "MC"};
      }
      break;
    }
    case Estimator::givendata: {
      if (source.sample) {
        results[base] = detail::MeasureResult{std::nullopt,
                                              given_data_indices(unit_weights(*source.sample), 0, 200, cfg.seed), "MC"};
        if (q > 1) warnings.push_back("given-data estimates from one sample cover only " + set.name(base));
      } else {
        for (std::size_t m = 0; m < q; ++m) {
          const auto seed = detail::measure_seed(cfg.seed, m);
          auto s = evaluate(source.builtin->model, set[m], cfg.n, seed, cfg.workers, set.name(m));
          results[m] = detail::MeasureResult{std::nullopt, given_data_indices(unit_weights(std::move(s)), 0, 200, seed),
                                             "MC"};
        }
      }
      break;
    }
    case Estimator::reweight: {
      const auto s = source.sample ? *source.sample
                                   : evaluate(source.builtin->model, set[base], cfg.n, cfg.seed, cfg.workers,
                                              set.name(base));
      for (std::size_t m = 0; m < q; ++m) {
        const auto seed = detail::measure_seed(cfg.seed, m);
        if (m == base) {
          results[m] = detail::MeasureResult{std::nullopt, given_data_indices(unit_weights(s), 0, 200, seed), "MC"};
          continue;
        }
        if (!absolutely_continuous(set[m], set[base])) {
          warnings.push_back(set.name(m) + " puts mass outside the support of " + set.name(base) +
                             "; reweighted estimates cover only the common support");
        }
        const auto ws = reweight(s, set[base], set[m], default_ess_floor, set.name(m));
        results[m] = detail::MeasureResult{std::nullopt, given_data_indices(ws, 0, 200, seed), "reweighted"};
      }
      break;
    }
  }
  for (std::size_t m = 0; m < q; ++m) {
    if (results[m] && results[m]->est) {
      for (const auto& w : results[m]->est->warnings) warnings.push_back(set.name(m) + ": " + w);
    }
  }
  const bool all_measures = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.has_value(); });

  // First-order and total indices per measure (raw), with standard errors
  // for estimates.
  struct IndexRow {
    std::vector<double> first, total, first_se, total_se;
    bool has_total = false, has_se = false;
    double mean = 0.0, variance = 0.0, mean_tol = 0.0, variance_tol = 0.0, index_tol = 0.0;
  };
  std::vector<std::optional<IndexRow>> rows(q);
  for (std::size_t m = 0; m < q; ++m) {
    if (!results[m]) continue;
    IndexRow row;
    if (const auto& vd = results[m]->vd) {
      for (const auto& s : first_and_total_indices(*vd)) {
        row.first.push_back(s.first);
        row.total.push_back(s.total);
      }
      row.has_total = true;
      row.mean = vd->mean;
      row.variance = vd->total;
      row.mean_tol = vd->tolerance;
      row.variance_tol = vd->tolerance;
      row.index_tol = vd->tolerance / vd->total;
    } else {
      const auto& est = *results[m]->est;
      row.has_se = true;
      row.has_total = std::all_of(est.indices.begin(), est.indices.end(), [](const auto& e) { return e.total.has_value(); });
      for (const auto& e : est.indices) {
        row.first.push_back(e.first);
        row.first_se.push_back(e.first_se);
        if (row.has_total) {
          row.total.push_back(*e.total);
          row.total_se.push_back(e.total_se.value_or(0.0));
        }
      }
      row.mean = est.mean;
      row.variance = est.variance;
      const double size = est.effective_size.value_or(static_cast<double>(est.evaluations));
      row.mean_tol = 2.0 * std::sqrt(est.variance / size);
      row.variance_tol = 2.0 * est.variance * std::sqrt(2.0 / std::max(1.0, size - 1.0));
    }
    rows[m] = std::move(row);
  }

  // Per-measure dimension distributions (quadrature) or D_S = sum ST_i.
  std::vector<std::optional<DimensionDistribution>> dims(q);
  std::vector<std::optional<double>> superposition(q);
  for (std::size_t m = 0; m < q; ++m) {
    if (!rows[m]) continue;
    if (results[m]->vd && results[m]->vd->complete()) {
      dims[m] = dimension_distribution(*results[m]->vd);
      superposition[m] = dims[m]->superposition;
    } else if (rows[m]->has_total) {
      double s = 0.0;
      for (double t : rows[m]->total) s += t;
      superposition[m] = s;
    }
  }

  // ---- report assembly ----------------------------------------------------
  ojson report;
  report["schema"] = report_schema;
  {
    ojson prov;
    prov["tool"] = "rgsa";
    prov["version"] = tool_version;
    prov["model"] = cfg.model;
    prov["source"] = have_model ? "builtin" : "sample";
    prov["measures_file"] = cfg.measures_file;
    prov["estimator"] = estimator_name(cfg.estimator);
    if (cfg.estimator != Estimator::quad) {
      prov["n"] = source.sample ? source.sample->size() : cfg.n;
      prov["seed"] = cfg.seed;
      if (source.sample) prov["sample_seed"] = source.sample->seed;
    }
    if (cfg.estimator == Estimator::bruteforce) prov["n_inner"] = cfg.n_inner;
    if (cfg.estimator == Estimator::givendata || cfg.estimator == Estimator::reweight) prov["base_measure"] = set.name(base);
    prov["quadrature"] = {{"points", cfg.quadrature.points},
                          {"max_tensor_dims", cfg.quadrature.max_tensor_dims},
                          {"qmc_points", cfg.quadrature.qmc_points},
                          {"qmc_seed", cfg.quadrature.qmc_seed}};
    prov["sections"] = sections;
    prov["measures"] = set.names();
    if (set.has_prior()) prov["prior"] = set.prior();
    report["provenance"] = std::move(prov);
  }

  if (wants("per_measure")) {
    ojson arr = ojson::array();
    for (std::size_t m = 0; m < q; ++m) {
      if (!rows[m]) continue;
      const auto& row = *rows[m];
      const auto& mode = results[m]->mode;
      ojson e;
      e["name"] = set.name(m);
      e["mode"] = mode;
      e["mean"] = tagged(row.mean, mode, row.mean_tol, "mean");
      e["variance"] = tagged(row.variance, mode, row.variance_tol, "variance");
      if (const auto& vd = results[m]->vd) {
        ojson terms = ojson::array();
        for (const auto& [z, v] : vd->terms) {
          terms.push_back({{"subset", z.label()}, {"value", tagged(v, mode, vd->tolerance, "V_z")}});
        }
        e["terms"] = std::move(terms);
        if (!vd->complete()) e["residual"] = tagged(vd->residual(), mode, vd->tolerance, "residual");
      } else {
        e["evaluations"] = results[m]->est->evaluations;
        if (results[m]->est->effective_size) {
          e["effective_size"] = tagged(*results[m]->est->effective_size, mode, 0.0, "effective size");
        }
      }
      ojson idx = ojson::array();
      for (std::size_t i = 0; i < n; ++i) {
        ojson r{{"input", detail::input_label(i)}};
        r["first"] = row.has_se ? tagged_se(row.first[i], row.first_se[i], mode, "S_i")
                                : tagged(row.first[i], mode, row.index_tol, "S_i");
        if (row.has_total) {
          r["total"] = row.has_se ? tagged_se(row.total[i], row.total_se[i], mode, "ST_i")
                                  : tagged(row.total[i], mode, row.index_tol, "ST_i");
        }
        idx.push_back(std::move(r));
      }
      e["indices"] = std::move(idx);
      const double dim_tol = row.has_se ? 0.0 : static_cast<double>(n) * row.index_tol;
      if (superposition[m]) {
        double tol = dim_tol;
        if (row.has_se) {
          for (double se : row.total_se) tol += 2.0 * se;
        }
        e["superposition_dimension"] = tagged(*superposition[m], mode, tol, "D_S");
      }
      if (dims[m]) e["truncation_dimension"] = tagged(dims[m]->truncation, mode, dim_tol, "D_T");
      arr.push_back(std::move(e));
    }
    report["per_measure"] = std::move(arr);
  }

  if (wants("mixture")) {
    ojson mix;
    const auto& prior = set.prior();
    mix["prior"] = prior;
    if (!all_measures) {
      warnings.push_back("mixture: needs results under every measure; section left empty");
    } else if (cfg.estimator == Estimator::quad) {
      std::vector<VarianceDecomposition> vds;
      for (const auto& r : results) vds.push_back(*r->vd);
      const auto rep = mixture_variance_decomposition(set, vds);
      std::string mode = "quadrature";
      double tol = 0.0;
      for (const auto& vd : vds) {
        if (vd.mode != "quadrature") mode = "MC";
        tol = std::max(tol, vd.tolerance);
      }
      mix["mode"] = mode;
      mix["mean"] = tagged(rep.mean, mode, tol, "mixture mean");
      mix["variance"] = tagged(rep.total, mode, tol, "mixture variance");
      mix["structural"] = tagged(rep.structural, mode, tol, "structural term");
      mix["variability"] = tagged(rep.variability, mode, tol, "variability term");
      mix["structural_share"] = tagged(rep.share(), mode, tol / rep.total, "structural share");
      ojson terms = ojson::array();
      for (const auto& [z, b] : rep.structural_terms) {
        terms.push_back({{"subset", z.label()}, {"value", tagged(b, mode, tol, "B_z")}});
      }
      mix["terms"] = std::move(terms);
      if (std::all_of(vds.begin(), vds.end(), [](const auto& vd) { return vd.complete(); })) {
        const auto d = mixture_dimension_distribution(set, vds);
        const double dt = static_cast<double>(n) * tol / rep.total;
        mix["superposition_dimension"] = tagged(d.superposition, mode, dt, "mixture D_S");
        mix["truncation_dimension"] = tagged(d.truncation, mode, dt, "mixture D_T");
      }
      const MixtureAnova<Model> anova(source.builtin->model, set, cfg.quadrature);
      ojson defects = ojson::array();
      for (std::size_t i = 0; i < n; ++i) {
        const auto z = SubsetIndex::singleton(i);
        defects.push_back({{"subset", z.label()},
                           {"value", tagged(anova.orthogonality_defect(z), mode, tol, "orthogonality defect")}});
      }
      mix["defects"] = std::move(defects);
    } else {
      // Estimated split: B_i = sum_m p_m S_i^m V^m for singletons only.
      const std::string mode = cfg.estimator == Estimator::reweight ? "reweighted" : "MC";
      double mean = 0.0, structural = 0.0, variability = 0.0, mean_tol = 0.0, var_tol = 0.0;
      for (std::size_t m = 0; m < q; ++m) {
        mean += prior[m] * rows[m]->mean;
        structural += prior[m] * rows[m]->variance;
        mean_tol += prior[m] * rows[m]->mean_tol;
        var_tol += prior[m] * rows[m]->variance_tol;
      }
      for (std::size_t m = 0; m < q; ++m) variability += prior[m] * (rows[m]->mean - mean) * (rows[m]->mean - mean);
      const double total = structural + variability;
      mix["mode"] = mode;
      mix["mean"] = tagged(mean, mode, mean_tol, "mixture mean");
      mix["variance"] = tagged(total, mode, var_tol, "mixture variance");
      mix["structural"] = tagged(structural, mode, var_tol, "structural term");
      mix["variability"] = tagged(variability, mode, var_tol, "variability term");
      if (total > 0.0) mix["structural_share"] = tagged(structural / total, mode, var_tol / total, "structural share");
      ojson terms = ojson::array();
      for (std::size_t i = 0; i < n; ++i) {
        double b = 0.0, se2 = 0.0;
        for (std::size_t m = 0; m < q; ++m) {
          b += prior[m] * rows[m]->first[i] * rows[m]->variance;
          const double s = prior[m] * rows[m]->first_se[i] * rows[m]->variance;
          se2 += s * s;
        }
        terms.push_back({{"subset", SubsetIndex::singleton(i).label()}, {"value", tagged_se(b, std::sqrt(se2), mode, "B_i")}});
      }
      mix["terms"] = std::move(terms);
      if (std::all_of(superposition.begin(), superposition.end(), [](const auto& s) { return s.has_value(); })) {
        double ds = 0.0;
        for (std::size_t m = 0; m < q; ++m) ds += prior[m] * *superposition[m];
        mix["superposition_dimension"] = tagged(ds, mode, 0.0, "mixture D_S");
      }
      warnings.push_back("mixture: estimated mode reports first-order structural terms only");
    }
    report["mixture"] = std::move(mix);
  }

  if (wants("dimension")) {
    ojson dim;
    ojson per = ojson::array();
    std::vector<VarianceDecomposition> complete_vds;
    for (std::size_t m = 0; m < q; ++m) {
      if (!dims[m]) continue;
      const auto& vd = *results[m]->vd;
      const auto& mode = results[m]->mode;
      const double tol = static_cast<double>(n) * vd.tolerance / vd.total;
      ojson mass = ojson::array();
      for (const auto& [z, p] : dims[m]->mass) {
        mass.push_back({{"subset", z.label()}, {"value", tagged(p, mode, vd.tolerance / vd.total, "mass")}});
      }
      per.push_back({{"name", set.name(m)},
                     {"superposition", tagged(dims[m]->superposition, mode, tol, "D_S")},
                     {"truncation", tagged(dims[m]->truncation, mode, tol, "D_T")},
                     {"mass", std::move(mass)}});
      complete_vds.push_back(vd);
    }
    if (per.empty()) {
      warnings.push_back("dimension: distributions need the quadrature estimator with every order decomposed");
    } else {
      dim["per_measure"] = std::move(per);
      if (complete_vds.size() == q) {
        const auto b = dimension_bounds(complete_vds);
        double tol = 0.0;
        std::string mode = "quadrature";
        for (const auto& vd : complete_vds) {
          tol = std::max(tol, static_cast<double>(n) * vd.tolerance / vd.total);
          if (vd.mode != "quadrature") mode = "MC";
        }
        dim["bounds"] = {{"superposition_min", tagged(b.superposition_min, mode, tol)},
                         {"superposition_max", tagged(b.superposition_max, mode, tol)},
                         {"truncation_min", tagged(b.truncation_min, mode, tol)},
                         {"truncation_max", tagged(b.truncation_max, mode, tol)}};
        if (set.has_prior()) {
          const auto d = mixture_dimension_distribution(set, complete_vds);
          ojson mass = ojson::array();
          for (const auto& [z, p] : d.mass) mass.push_back({{"subset", z.label()}, {"value", tagged(p, mode, tol)}});
          dim["mixture"] = {{"superposition", tagged(d.superposition, mode, tol, "mixture D_S")},
                            {"truncation", tagged(d.truncation, mode, tol, "mixture D_T")},
                            {"mass", std::move(mass)}};
        }
      }
    }
    report["dimension"] = std::move(dim);
  }

  if (wants("robust")) {
    ojson rob;
    if (!all_measures) {
      warnings.push_back("robust: needs indices under every measure; section left empty");
    } else {
      std::vector<std::vector<double>> first, se;
      bool estimated = false;
      double tol = 0.0;
      for (const auto& r : rows) {
        first.push_back(r->first);
        if (r->has_se) {
          estimated = true;
          se.push_back(r->first_se);
        } else {
          se.emplace_back(n, 0.0);
          tol = std::max(tol, r->index_tol);
        }
      }
      const auto rep = estimated ? robust_ranking(first, se) : robust_ranking(first);
      const std::string mode = estimated ? (cfg.estimator == Estimator::reweight ? "reweighted" : "MC")
                                         : results.front()->mode;
      ojson inputs = ojson::array();
      for (std::size_t i = 0; i < n; ++i) {
        inputs.push_back({{"input", detail::input_label(i)},
                          {"lower", tagged(rep.lower[i], mode, tol, "lower index")},
                          {"upper", tagged(rep.upper[i], mode, tol, "upper index")}});
      }
      rob["estimated"] = rep.estimated;
      rob["inputs"] = std::move(inputs);
      ojson blocks = ojson::array();
      for (const auto& b : rep.blocks) {
        ojson block = ojson::array();
        for (auto i : b) block.push_back(detail::input_label(i));
        blocks.push_back(std::move(block));
      }
      rob["blocks"] = std::move(blocks);
      rob["most_important"] = rep.most_important ? ojson(detail::input_label(*rep.most_important)) : ojson(nullptr);
      rob["least_important"] = rep.least_important ? ojson(detail::input_label(*rep.least_important)) : ojson(nullptr);
    }
    report["robust"] = std::move(rob);
  }

  if (wants("trend")) {
    ojson trend;
    if (!have_model) {
      warnings.push_back("trend: effect curves need a model; section left empty");
    } else {
      const auto& model = source.builtin->model;
      std::vector<std::optional<AnovaExpansion<Model>>> parts(q);
      parallel_for(q, cfg.workers, [&](std::size_t m) { parts[m].emplace(model, set[m], cfg.quadrature); });
      ojson curves = ojson::array();
      for (std::size_t m = 0; m < q; ++m) {
        const std::string mode = n <= cfg.quadrature.max_tensor_dims ? "quadrature" : "MC";
        const double tol = n <= cfg.quadrature.max_tensor_dims ? 1e-10 : qmc_tolerance;
        for (std::size_t i = 0; i < n; ++i) {
          const auto r = plotting_range(set[m][i]);
          const auto curve = parts[m]->first_order_curve(i, linear_grid(r.lo, r.hi, cfg.curve_points), set.name(m));
          for (double y : curve.values) detail::finite(y, "effect value");
          const auto v = detail::curve_verdict(curve, tol);
          curves.push_back({{"measure", set.name(m)},
                            {"input", detail::input_label(i)},
                            {"verdict", v.verdict()},
                            {"max_increase", tagged(v.max_increase, mode, tol)},
                            {"max_decrease", tagged(v.max_decrease, mode, tol)},
                            {"verdict_tolerance", v.tolerance},
                            {"mode", mode},
                            {"tolerance", tol},
                            {"x", curve.grid},
                            {"value", curve.values}});
        }
      }
      trend["grid_relative"] = true;
      trend["curves"] = std::move(curves);
      if (set.has_prior() && wants("mixture")) {
        const MixtureAnova<Model> anova(model, set, cfg.quadrature);
        ojson mcurves = ojson::array();
        for (std::size_t i = 0; i < n; ++i) {
          double lo = std::numeric_limits<double>::infinity(), hi = -lo;
          for (std::size_t m = 0; m < q; ++m) {
            const auto r = plotting_range(set[m][i]);
            lo = std::min(lo, r.lo);
            hi = std::max(hi, r.hi);
          }
          const auto grid = linear_grid(lo, hi, cfg.curve_points);
          const auto curve = anova.first_order_curve(i, grid);
          const auto z = SubsetIndex::singleton(i);
          ojson components = ojson::object();
          std::vector<double> x(n);
          for (std::size_t k = 0; k < n; ++k) x[k] = set[0][k].mean();
          for (std::size_t m = 0; m < q; ++m) {
            ojson col = ojson::array();
            for (double g : grid) {
              x[i] = g;
              if (set[m].in_support(z, x)) col.push_back(detail::finite(parts[m]->effect(z, x), "effect value"));
              else col.push_back(nullptr);
            }
            components[set.name(m)] = std::move(col);
          }
          for (double y : curve.values) detail::finite(y, "mixture effect value");
          const auto v = detail::curve_verdict(curve, n <= cfg.quadrature.max_tensor_dims ? 1e-10 : qmc_tolerance);
          mcurves.push_back({{"input", detail::input_label(i)},
                             {"verdict", v.verdict()},
                             {"verdict_tolerance", v.tolerance},
                             {"mode", n <= cfg.quadrature.max_tensor_dims ? "quadrature" : "MC"},
                             {"tolerance", n <= cfg.quadrature.max_tensor_dims ? 1e-10 : qmc_tolerance},
                             {"x", grid},
                             {"components", std::move(components)},
                             {"mixture", curve.values}});
        }
        trend["mixture_curves"] = std::move(mcurves);
      }
    }
    report["trend"] = std::move(trend);
  }

  if (wants("cores")) {
    ojson cores;
    if (!have_model || !source.builtin->multilinear) {
      warnings.push_back("cores: core detection needs a composite-multilinear model; section left empty");
    } else {
      ojson groups = ojson::array();
      for (const auto& g : partition_into_cores(*source.builtin->multilinear, set)) {
        ojson names = ojson::array();
        for (auto m : g) names.push_back(set.name(m));
        groups.push_back(std::move(names));
      }
      cores["partition"] = std::move(groups);
      cores["tolerance"] = 1e-9;
    }
    report["cores"] = std::move(cores);
  }

  report["warnings"] = warnings;
  return report;
}

// ---------------------------------------------------------------------------
// Plot data

struct EmitResult {
  std::vector<std::string> files;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  return out;
}

inline void close_csv(std::ofstream& out, const std::filesystem::path& p) {
  out.close();
  if (!out) throw DataError("write failure on '" + p.string() + "'");
}

}  // namespace detail

/// Writes one CSV per effect curve (`effect_<measure>_<subset>.csv`), one per
/// mixture curve (`mixture_effect_<input>.csv`) and a long-format index table
/// (`indices.csv`). Sections without data produce a warning instead of a file.
inline EmitResult emit_plot_data(const nlohmann::ordered_json& report, const std::string& outdir) {
  namespace fs = std::filesystem;
  EmitResult res;
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec) throw DataError("cannot create output directory '" + outdir + "': " + ec.message());

  const auto curves = report.contains("trend") ? report["trend"].value("curves", nlohmann::ordered_json::array())
                                               : nlohmann::ordered_json::array();
  if (curves.empty()) res.warnings.push_back("plot data: no effect curves in the report");
  for (const auto& c : curves) {
    const auto path = fs::path(outdir) / ("effect_" + c["measure"].get<std::string>() + "_" +
                                          c["input"].get<std::string>() + ".csv");
    auto out = detail::open_csv(path);
    out << "x,value\n";
    const auto& x = c["x"];
    const auto& v = c["value"];
    for (std::size_t k = 0; k < x.size(); ++k) {
      out << format_double(x[k].get<double>()) << ',' << format_double(v[k].get<double>()) << '\n';
    }
    detail::close_csv(out, path);
    res.files.push_back(path.string());
  }

  if (report.contains("trend") && report["trend"].contains("mixture_curves")) {
    for (const auto& c : report["trend"]["mixture_curves"]) {
      const auto path = fs::path(outdir) / ("mixture_effect_" + c["input"].get<std::string>() + ".csv");
      auto out = detail::open_csv(path);
      out << 'x';
      for (const auto& [name, _] : c["components"].items()) out << ',' << name;
      out << ",mixture\n";
      const auto& x = c["x"];
      for (std::size_t k = 0; k < x.size(); ++k) {
        out << format_double(x[k].get<double>());
        for (const auto& [name, col] : c["components"].items()) {
          out << ',';
          if (!col[k].is_null()) out << format_double(col[k].get<double>());
        }
        out << ',' << format_double(c["mixture"][k].get<double>()) << '\n';
      }
      detail::close_csv(out, path);
      res.files.push_back(path.string());
    }
  }

  const auto per = report.value("per_measure", nlohmann::ordered_json::array());
  if (per.empty()) {
    res.warnings.push_back("plot data: no per-measure indices in the report");
  } else {
    const auto path = fs::path(outdir) / "indices.csv";
    auto out = detail::open_csv(path);
    out << "measure,input,index,value,se,mode\n";
    for (const auto& m : per) {
      for (const auto& r : m["indices"]) {
        for (const char* kind : {"first", "total"}) {
          if (!r.contains(kind)) continue;
          const auto& t = r[kind];
          out << m["name"].get<std::string>() << ',' << r["input"].get<std::string>() << ',' << kind << ','
              << format_double(t["value"].get<double>()) << ',';
          if (t.contains("se")) out << format_double(t["se"].get<double>());
          out << ',' << t["mode"].get<std::string>() << '\n';
        }
      }
    }
    detail::close_csv(out, path);
    res.files.push_back(path.string());
  }
  return res;
}

/// Canonical serialization used for report files.
inline std::string dump_report(const nlohmann::ordered_json& report) { return report.dump(2) + "\n"; }

}  // namespace rgsa
