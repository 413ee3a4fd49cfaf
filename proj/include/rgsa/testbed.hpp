#pragma once

// Analytic test models: the Ishigami function with closed-form ANOVA effects
// under three reference measures, and composite-multilinear models
// g(x) = sum_u prod_{i in u} t_i(x_i), whose effects depend on the measure only
// through the factor means E[t_i(X_i)]. The latter makes cores of measures
// directly computable.

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "rgsa/error.hpp"
#include "rgsa/measures.hpp"
#include "rgsa/model.hpp"
#include "rgsa/subset.hpp"

namespace rgsa {

// ---------------------------------------------------------------------------
// Ishigami

struct Ishigami {
  double a = 7.0;
  double b = 0.1;

  double operator()(std::span<const double> x) const {
    const double s2 = std::sin(x[1]);
    const double x3 = x[2] * x[2];
    return std::sin(x[0]) * (1.0 + b * x3 * x3) + a * s2 * s2;
  }
};

enum class IshigamiMeasure { mu1, mu2, mu3 };

/// Reference measures for Ishigami studies. 1: U[-pi,pi]^3, 2: N(0,1)^3,
/// 3: U[0,pi]^3, 4: U[-pi,pi] x U[-pi/2,pi/2] x U[-pi,pi],
/// 5: U[-pi/2,pi/2]^2 x U[-pi,pi].
inline ProductMeasure ishigami_measure(int which) {
  using std::numbers::pi;
  const auto full = UnivariateMeasure::uniform(-pi, pi);
  const auto half = UnivariateMeasure::uniform(-pi / 2, pi / 2);
  switch (which) {
    case 1: return ProductMeasure::iid(full, 3);
    case 2: return ProductMeasure::iid(UnivariateMeasure::normal(0.0, 1.0), 3);
    case 3: return ProductMeasure::iid(UnivariateMeasure::uniform(0.0, pi), 3);
    case 4: return ProductMeasure({full, half, full});
    case 5: return ProductMeasure({half, half, full});
    default: throw std::invalid_argument("ishigami_measure: expected 1..5");
  }
}

inline ProductMeasure ishigami_measure(IshigamiMeasure m) {
  return ishigami_measure(static_cast<int>(m) + 1);
}

/// {mu1, mu2, mu3} with an optional prior.
inline MeasureSet ishigami_measure_set(std::optional<std::vector<double>> prior = std::nullopt) {
  return MeasureSet({ishigami_measure(1), ishigami_measure(2), ishigami_measure(3)},
                    {"mu1", "mu2", "mu3"}, std::move(prior));
}

/// Closed-form constant term g_0 under one of the three reference measures.
inline double ishigami_constant(const Ishigami& g, IshigamiMeasure m) {
  using std::numbers::pi;
  const double c = 1.0 + g.b * std::pow(pi, 4) / 5.0;
  switch (m) {
    case IshigamiMeasure::mu1: return g.a / 2.0;
    case IshigamiMeasure::mu2: return g.a / 2.0 * (1.0 - std::exp(-2.0));
    case IshigamiMeasure::mu3: return g.a / 2.0 + 2.0 / pi * c;
  }
  return 0.0;
}

/// Closed-form effect g_z at the z-coordinates of the full point `x`.
/// Subsets without a listed formula are identically zero.
inline double ishigami_effect(const Ishigami& g, IshigamiMeasure m, SubsetIndex z,
                              std::span<const double> x) {
  using std::numbers::pi;
  if (x.size() != 3) throw std::invalid_argument("ishigami_effect: expects 3 coordinates");
  if (!ishigami_measure(m).in_support(z, x)) {
    throw std::domain_error("ishigami_effect: point outside the measure's support");
  }
  const double c = 1.0 + g.b * std::pow(pi, 4) / 5.0;
  const double s1 = std::sin(x[0]);
  const double s2sq = std::sin(x[1]) * std::sin(x[1]);
  const double x3_4 = std::pow(x[2], 4);
  const auto mask = z.mask();
  if (mask == 0) return ishigami_constant(g, m);
  switch (m) {
    case IshigamiMeasure::mu1:
      if (mask == 0b001) return s1 * c;
      if (mask == 0b010) return g.a * s2sq - g.a / 2.0;
      if (mask == 0b101) return g.b * s1 * (x3_4 - std::pow(pi, 4) / 5.0);
      return 0.0;
    case IshigamiMeasure::mu2: {
      const double e2 = 1.0 - std::exp(-2.0);
      if (mask == 0b001) return s1 * (1.0 + 3.0 * g.b);
      if (mask == 0b010) return g.a * s2sq - g.a / 2.0 * e2;
      if (mask == 0b101) return g.b * s1 * (x3_4 - 3.0);
      return 0.0;
    }
    case IshigamiMeasure::mu3:
      if (mask == 0b001) return (s1 - 2.0 / pi) * c;
      if (mask == 0b010) return g.a * s2sq - g.a / 2.0;
      if (mask == 0b100) return 2.0 * g.b / pi * (x3_4 - std::pow(pi, 4) / 5.0);
      if (mask == 0b101) return g.b * (s1 - 2.0 / pi) * (x3_4 - std::pow(pi, 4) / 5.0);
      return 0.0;
  }
  return 0.0;
}

/// Mixture effect sum_m p_m I_m(x_z) g_z^{mu^m}(x_z) over {mu1, mu2, mu3}: a
/// component contributes only where x_z lies in its own support.
inline double ishigami_mixture_effect(const Ishigami& g, std::span<const double> prior,
                                      SubsetIndex z, std::span<const double> x) {
  if (prior.size() != 3) throw std::invalid_argument("ishigami_mixture_effect: prior needs 3 weights");
  double acc = 0.0;
  for (int m = 0; m < 3; ++m) {
    const auto id = static_cast<IshigamiMeasure>(m);
    if (prior[m] == 0.0 || !ishigami_measure(id).in_support(z, x)) continue;
    acc += prior[m] * ishigami_effect(g, id, z, x);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Composite-multilinear models

struct Factor {
  enum class Kind { poly, sin, sin2, exp };

  Kind kind = Kind::poly;
  double scale = 1.0;
  double rate = 1.0;            // exp only
  std::vector<double> coeffs;   // poly only: c0 + c1 x + c2 x^2 + ...

  static Factor polynomial(std::vector<double> c) { return {Kind::poly, 1.0, 1.0, std::move(c)}; }
  static Factor sine(double s = 1.0) { return {Kind::sin, s, 1.0, {}}; }
  static Factor sine_squared(double s = 1.0) { return {Kind::sin2, s, 1.0, {}}; }
  static Factor exponential(double s, double r) { return {Kind::exp, s, r, {}}; }

  double operator()(double x) const {
    switch (kind) {
      case Kind::poly: {
        double acc = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
        return scale * acc;
      }
      case Kind::sin: return scale * std::sin(x);
      case Kind::sin2: {
        const double s = std::sin(x);
        return scale * s * s;
      }
      case Kind::exp: return scale * std::exp(rate * x);
    }
    return 0.0;
  }
};

class CompositeMultilinearModel {
 public:
  CompositeMultilinearModel(std::vector<Factor> factors, std::vector<SubsetIndex> terms)
      : factors_(std::move(factors)), terms_(std::move(terms)) {
    if (factors_.empty()) throw ConfigError("multilinear model needs at least one factor");
    if (factors_.size() > SubsetIndex::max_inputs) throw ConfigError("multilinear model: at most 20 inputs");
    for (auto u : terms_) {
      if (!u.is_subset_of(SubsetIndex::full(factors_.size()))) {
        throw ConfigError("multilinear term refers to an input beyond n");
      }
    }
  }

  std::size_t dim() const { return factors_.size(); }
  const std::vector<Factor>& factors() const { return factors_; }
  const std::vector<SubsetIndex>& terms() const { return terms_; }

  double operator()(std::span<const double> x) const {
    double acc = 0.0;
    for (auto u : terms_) {
      double prod = 1.0;
      for (std::uint32_t m = u.mask(); m; m &= m - 1) {
        const auto i = static_cast<std::size_t>(std::countr_zero(m));
        prod *= factors_[i](x[i]);
      }
      acc += prod;
    }
    return acc;
  }

  /// E[t_i(X_i)] per input, by `points`-node quadrature on each marginal.
  std::vector<double> factor_means(const ProductMeasure& m, std::size_t points = 128) const {
    check(m);
    std::vector<double> out(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      out[i] = m[i].rule(points).integrate(factors_[i]);
    }
    return out;
  }

  /// Closed-form effect: sum over terms u containing z of
  /// prod_{i in z} (t_i - E t_i) * prod_{i in u \ z} E t_i.
  double effect(std::span<const double> means, SubsetIndex z, std::span<const double> x) const {
    double acc = 0.0;
    for (auto u : terms_) {
      if (!z.is_subset_of(u)) continue;
      double prod = 1.0;
      for (auto i : u.members()) {
        prod *= z.contains(i) ? factors_[i](x[i]) - means[i] : means[i];
      }
      acc += prod;
    }
    return acc;
  }

  double effect(const ProductMeasure& m, SubsetIndex z, std::span<const double> x) const {
    const auto means = factor_means(m);
    return effect(means, z, x);
  }

 private:
  void check(const ProductMeasure& m) const {
    if (m.dim() != dim()) throw std::invalid_argument("multilinear model: dimension mismatch");
  }

  std::vector<Factor> factors_;
  std::vector<SubsetIndex> terms_;
};

/// Ishigami written as t1 t3 + t2 with t1 = sin, t2 = a sin^2, t3 = 1 + b x^4.
inline CompositeMultilinearModel ishigami_multilinear(double a = 7.0, double b = 0.1) {
  return CompositeMultilinearModel(
      {Factor::sine(), Factor::sine_squared(a), Factor::polynomial({1.0, 0.0, 0.0, 0.0, b})},
      {SubsetIndex::of({0, 2}), SubsetIndex::of({1})});
}

/// Whether two measures induce the same ANOVA expansion of a
/// composite-multilinear model: all factor means agree within `tol`.
/// Means are computed with 128-node quadrature and checked against a 64-node
/// pass; disagreement beyond 1e-8 is reported as non-convergence.
inline bool same_core(const CompositeMultilinearModel& model, const ProductMeasure& a,
                      const ProductMeasure& b, double tol = 1e-9) {
  const auto check = [&](const ProductMeasure& m) {
    auto fine = model.factor_means(m, 128);
    const auto coarse = model.factor_means(m, 64);
    for (std::size_t i = 0; i < fine.size(); ++i) {
      if (!std::isfinite(fine[i]) ||
          std::abs(fine[i] - coarse[i]) > 1e-8 * std::max(1.0, std::abs(fine[i]))) {
        throw NumericError("same_core: quadrature did not converge for factor " +
                           std::to_string(i + 1));
      }
    }
    return fine;
  };
  const auto ea = check(a), eb = check(b);
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (std::abs(ea[i] - eb[i]) > tol) return false;
  }
  return true;
}

/// Groups measure indices into cores. Grouping is the transitive closure of
/// the pairwise same_core relation, so the result is always a partition.
inline std::vector<std::vector<std::size_t>> partition_into_cores(
    const CompositeMultilinearModel& model, const MeasureSet& set, double tol = 1e-9) {
  const std::size_t q = set.size();
  std::vector<std::size_t> parent(q);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < q; ++a) {
    for (std::size_t b = a + 1; b < q; ++b) {
      if (find(a) == find(b)) continue;
      if (same_core(model, set[a], set[b], tol)) parent[std::max(find(a), find(b))] = std::min(find(a), find(b));
    }
  }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> slot(q, q);
  for (std::size_t m = 0; m < q; ++m) {
    const auto root = find(m);
    if (slot[root] == q) {
      slot[root] = groups.size();
      groups.emplace_back();
    }
    groups[slot[root]].push_back(m);
  }
  return groups;
}

// ---------------------------------------------------------------------------
// Model registry

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                           std::string_view where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(where) + ": unknown field '" + key + "'");
  }
}

inline Factor parse_factor(const nlohmann::json& j) {
  reject_unknown(j, {"kind", "scale", "rate", "coeffs"}, "factor");
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("factor: missing 'kind'");
  const auto kind = j["kind"].get<std::string>();
  Factor f;
  f.scale = j.value("scale", 1.0);
  if (kind == "poly") {
    f.kind = Factor::Kind::poly;
    if (!j.contains("coeffs") || !j["coeffs"].is_array()) throw ConfigError("poly factor: missing 'coeffs'");
    f.coeffs = j["coeffs"].get<std::vector<double>>();
  } else if (kind == "sin") {
    f.kind = Factor::Kind::sin;
  } else if (kind == "sin2") {
    f.kind = Factor::Kind::sin2;
  } else if (kind == "exp") {
    f.kind = Factor::Kind::exp;
    f.rate = j.value("rate", 1.0);
  } else {
    throw ConfigError("factor: unknown kind '" + kind + "'");
  }
  return f;
}

}  // namespace detail

/// Parses {"n": .., "factors": [..], "terms": [[1,3],[2]]} (terms one-based).
inline CompositeMultilinearModel parse_multilinear(const nlohmann::json& j) {
  try {
    detail::reject_unknown(j, {"n", "factors", "terms"}, "multilinear model");
    if (!j.contains("n") || !j.contains("factors") || !j.contains("terms")) {
      throw ConfigError("multilinear model: 'n', 'factors' and 'terms' are required");
    }
    const auto n = j["n"].get<std::size_t>();
    std::vector<Factor> factors;
    for (const auto& f : j["factors"]) factors.push_back(detail::parse_factor(f));
    if (factors.size() != n) throw ConfigError("multilinear model: expected n factors");
    std::vector<SubsetIndex> terms;
    for (const auto& t : j["terms"]) {
      std::uint32_t mask = 0;
      for (const auto& idx : t) {
        const auto i = idx.get<std::size_t>();
        if (i < 1 || i > n) throw ConfigError("multilinear term index out of range");
        mask |= 1u << (i - 1);
      }
      terms.emplace_back(mask);
    }
    return CompositeMultilinearModel(std::move(factors), std::move(terms));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("multilinear model: ") + e.what());
  }
}

inline CompositeMultilinearModel load_multilinear(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open multilinear model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed multilinear model file '" + path + "': " + e.what());
  }
  return parse_multilinear(j);
}

/// A registered model plus, when available, its composite-multilinear form.
struct BuiltinModel {
  Model model;
  std::optional<CompositeMultilinearModel> multilinear;
};

/// Resolves "ishigami" or "multilinear:<file>".
inline BuiltinModel make_builtin_model(std::string_view spec) {
  if (spec == "ishigami") {
    return {Model("ishigami", 3, Ishigami{}), ishigami_multilinear()};
  }
  constexpr std::string_view prefix = "multilinear:";
  if (spec.starts_with(prefix)) {
    auto ml = load_multilinear(std::string(spec.substr(prefix.size())));
    const auto n = ml.dim();
    return {Model(std::string(spec), n, ml), std::move(ml)};
  }
  throw ConfigError("unknown model '" + std::string(spec) + "'");
}

}  // namespace rgsa
