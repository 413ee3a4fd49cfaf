#pragma once

// Univariate and product probability measures, finite measure sets with an
// optional prior, the induced mixture, and logarithmic pooling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "rgsa/error.hpp"
#include "rgsa/matrix.hpp"
#include "rgsa/quadrature.hpp"
#include "rgsa/rng.hpp"
#include "rgsa/subset.hpp"

namespace rgsa {

struct Uniform {
  double lo;
  double hi;
  friend bool operator==(const Uniform&, const Uniform&) = default;
};

struct Normal {
  double mean;
  double sd;
  friend bool operator==(const Normal&, const Normal&) = default;
};

/// Equally likely atoms. Used for discrete-grid models, where quadrature
/// reduces to exact finite sums.
struct Discrete {
  std::vector<double> atoms;  // sorted ascending
  friend bool operator==(const Discrete&, const Discrete&) = default;
};

/// Closed interval [lo, hi]; either end may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x >= lo && x <= hi; }
  bool empty() const { return lo > hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  friend bool operator==(const Interval&, const Interval&) = default;
};

class UnivariateMeasure {
 public:
  using Params = std::variant<Uniform, Normal, Discrete>;

  static UnivariateMeasure uniform(double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
      throw ConfigError("uniform measure requires finite lo < hi");
    }
    return UnivariateMeasure(Uniform{lo, hi});
  }

  static UnivariateMeasure normal(double mean, double sd) {
    if (!(std::isfinite(mean) && std::isfinite(sd) && sd > 0.0)) {
      throw ConfigError("normal measure requires finite mean and sd > 0");
    }
    return UnivariateMeasure(Normal{mean, sd});
  }

  static UnivariateMeasure discrete(std::vector<double> atoms) {
    if (atoms.empty()) throw ConfigError("discrete measure requires at least one atom");
    for (double a : atoms) {
      if (!std::isfinite(a)) throw ConfigError("discrete measure atoms must be finite");
    }
    std::sort(atoms.begin(), atoms.end());
    return UnivariateMeasure(Discrete{std::move(atoms)});
  }

  const Params& params() const { return params_; }

  std::string_view family() const {
    return std::visit(
        [](const auto& p) -> std::string_view {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) return "uniform";
          else if constexpr (std::is_same_v<T, Normal>) return "normal";
          else return "discrete";
        },
        params_);
  }

  /// Density for continuous families; probability mass for Discrete.
  double density(double x) const {
    return std::visit(
        [x](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return (x >= p.lo && x <= p.hi) ? 1.0 / (p.hi - p.lo) : 0.0;
          } else if constexpr (std::is_same_v<T, Normal>) {
            const double t = (x - p.mean) / p.sd;
            return std::exp(-0.5 * t * t) / (p.sd * std::sqrt(2.0 * std::numbers::pi));
          } else {
            const auto [first, last] = std::equal_range(p.atoms.begin(), p.atoms.end(), x);
            return static_cast<double>(last - first) / static_cast<double>(p.atoms.size());
          }
        },
        params_);
  }

  double cdf(double x) const {
    return std::visit(
        [x](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return std::clamp((x - p.lo) / (p.hi - p.lo), 0.0, 1.0);
          } else if constexpr (std::is_same_v<T, Normal>) {
            return 0.5 * std::erfc(-(x - p.mean) / (p.sd * std::numbers::sqrt2));
          } else {
            const auto it = std::upper_bound(p.atoms.begin(), p.atoms.end(), x);
            return static_cast<double>(it - p.atoms.begin()) /
                   static_cast<double>(p.atoms.size());
          }
        },
        params_);
  }

  /// Inverse CDF on (0, 1).
  double quantile(double u) const {
    return std::visit(
        [u](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return p.lo + u * (p.hi - p.lo);
          } else if constexpr (std::is_same_v<T, Normal>) {
            return boost::math::quantile(boost::math::normal(p.mean, p.sd), u);
          } else {
            const auto k = p.atoms.size();
            const auto idx = std::min(k - 1, static_cast<std::size_t>(u * static_cast<double>(k)));
            return p.atoms[idx];
          }
        },
        params_);
  }

  double mean() const {
    return std::visit(
        [](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) return 0.5 * (p.lo + p.hi);
          else if constexpr (std::is_same_v<T, Normal>) return p.mean;
          else return std::accumulate(p.atoms.begin(), p.atoms.end(), 0.0) /
                      static_cast<double>(p.atoms.size());
        },
        params_);
  }

  double variance() const {
    return std::visit(
        [this](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return (p.hi - p.lo) * (p.hi - p.lo) / 12.0;
          } else if constexpr (std::is_same_v<T, Normal>) {
            return p.sd * p.sd;
          } else {
            const double m = mean();
            double acc = 0.0;
            for (double a : p.atoms) acc += (a - m) * (a - m);
            return acc / static_cast<double>(p.atoms.size());
          }
        },
        params_);
  }

  Interval support() const {
    return std::visit(
        [](const auto& p) -> Interval {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) return {p.lo, p.hi};
          else if constexpr (std::is_same_v<T, Normal>) return {};
          else return {p.atoms.front(), p.atoms.back()};
        },
        params_);
  }

  /// A point is in the support iff its density (or mass) is positive.
  /// Boundary points of a Uniform count as inside.
  bool in_support(double x) const { return density(x) > 0.0; }

  /// Probability-weighted rule: Gauss-Legendre for Uniform, Gauss-Hermite for
  /// Normal, the atoms themselves for Discrete. Weights sum to 1.
  Rule rule(std::size_t points) const {
    return std::visit(
        [points](const auto& p) -> Rule {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            Rule r = gauss_legendre(points, p.lo, p.hi);
            for (auto& w : r.weights) w /= (p.hi - p.lo);
            return r;
          } else if constexpr (std::is_same_v<T, Normal>) {
            Rule r = gauss_hermite(points);
            for (auto& x : r.nodes) x = p.mean + p.sd * x;
            return r;
          } else {
            const double w = 1.0 / static_cast<double>(p.atoms.size());
            return Rule{p.atoms, std::vector<double>(p.atoms.size(), w)};
          }
        },
        params_);
  }

  /// Probability-weighted rule that splits the integration range at the given
  /// breakpoints, for integrands that jump there (support indicators).
  /// Normal tails beyond 12 sd are dropped.
  Rule piecewise_rule(std::span<const double> breakpoints, std::size_t points) const {
    if (std::holds_alternative<Discrete>(params_)) return rule(points);
    Interval range = support();
    if (const auto* n = std::get_if<Normal>(&params_)) {
      range = {n->mean - 12.0 * n->sd, n->mean + 12.0 * n->sd};
    }
    std::vector<double> cuts{range.lo};
    for (double b : breakpoints) {
      if (b > range.lo && b < range.hi) cuts.push_back(b);
    }
    cuts.push_back(range.hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    Rule out;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
      const Rule seg = gauss_legendre(points, cuts[s], cuts[s + 1]);
      for (std::size_t k = 0; k < seg.size(); ++k) {
        out.nodes.push_back(seg.nodes[k]);
        out.weights.push_back(seg.weights[k] * density(seg.nodes[k]));
      }
    }
    return out;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&os](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) os << "U[" << p.lo << ", " << p.hi << "]";
          else if constexpr (std::is_same_v<T, Normal>) os << "N(" << p.mean << ", " << p.sd << ")";
          else os << "Discrete(" << p.atoms.size() << " atoms)";
        },
        params_);
    return os.str();
  }

  friend bool operator==(const UnivariateMeasure&, const UnivariateMeasure&) = default;

 private:
  explicit UnivariateMeasure(Params p) : params_(std::move(p)) {}
  Params params_;
};

/// Product of independent univariate components.
class ProductMeasure {
 public:
  ProductMeasure() = default;
  explicit ProductMeasure(std::vector<UnivariateMeasure> components)
      : components_(std::move(components)) {
    if (components_.empty()) throw ConfigError("product measure needs at least one component");
    if (components_.size() > SubsetIndex::max_inputs) {
      throw ConfigError("product measure supports at most 20 inputs");
    }
  }

  /// n copies of the same component.
  static ProductMeasure iid(const UnivariateMeasure& c, std::size_t n) {
    return ProductMeasure(std::vector<UnivariateMeasure>(n, c));
  }

  std::size_t dim() const { return components_.size(); }
  const UnivariateMeasure& operator[](std::size_t i) const { return components_.at(i); }
  const std::vector<UnivariateMeasure>& components() const { return components_; }

  double density(std::span<const double> x) const {
    check_dim(x);
    double d = 1.0;
    for (std::size_t i = 0; i < components_.size() && d > 0.0; ++i) {
      d *= components_[i].density(x[i]);
    }
    return d;
  }

  bool in_support(std::span<const double> x) const { return density(x) > 0.0; }

  /// Support test restricted to the coordinates in `z`; `x` is full-length.
  bool in_support(SubsetIndex z, std::span<const double> x) const {
    check_dim(x);
    for (auto i : z.members()) {
      if (!components_[i].in_support(x[i])) return false;
    }
    return true;
  }

  friend bool operator==(const ProductMeasure&, const ProductMeasure&) = default;

 private:
  void check_dim(std::span<const double> x) const {
    if (x.size() != components_.size()) {
      throw std::invalid_argument("dimension mismatch: point has " + std::to_string(x.size()) +
                                  " coordinates, measure has " +
                                  std::to_string(components_.size()));
    }
  }

  std::vector<UnivariateMeasure> components_;
};

/// A finite set of candidate measures sharing one dimension, optionally with
/// prior weights.
class MeasureSet {
 public:
  MeasureSet() = default;

  explicit MeasureSet(std::vector<ProductMeasure> measures, std::vector<std::string> names = {},
                      std::optional<std::vector<double>> prior = std::nullopt)
      : measures_(std::move(measures)), names_(std::move(names)) {
    if (measures_.empty()) throw ConfigError("measure set must contain at least one measure");
    const auto n = measures_.front().dim();
    for (const auto& m : measures_) {
      if (m.dim() != n) throw ConfigError("all measures in a set must share the same dimension");
    }
    if (names_.empty()) {
      for (std::size_t m = 0; m < measures_.size(); ++m) names_.push_back("mu" + std::to_string(m + 1));
    }
    if (names_.size() != measures_.size()) throw ConfigError("one name per measure is required");
    for (std::size_t a = 0; a < names_.size(); ++a) {
      for (std::size_t b = a + 1; b < names_.size(); ++b) {
        if (names_[a] == names_[b]) throw ConfigError("duplicate measure name '" + names_[a] + "'");
      }
    }
    if (prior) set_prior(std::move(*prior));
  }

  std::size_t size() const { return measures_.size(); }
  std::size_t dim() const { return measures_.empty() ? 0 : measures_.front().dim(); }
  const ProductMeasure& operator[](std::size_t m) const { return measures_.at(m); }
  const std::vector<ProductMeasure>& measures() const { return measures_; }
  const std::string& name(std::size_t m) const { return names_.at(m); }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t m = 0; m < names_.size(); ++m) {
      if (names_[m] == name) return m;
    }
    return std::nullopt;
  }

  bool has_prior() const { return prior_.has_value(); }

  const std::vector<double>& prior() const {
    if (!prior_) throw PriorRequiredError("measure set has no prior");
    return *prior_;
  }

  MeasureSet with_prior(std::vector<double> prior) const {
    MeasureSet out = *this;
    out.set_prior(std::move(prior));
    return out;
  }

 private:
  // Zero weights are accepted so that degenerate priors can be expressed.
  void set_prior(std::vector<double> p) {
    if (p.size() != measures_.size()) throw ConfigError("prior needs one weight per measure");
    double sum = 0.0;
    for (double w : p) {
      if (!std::isfinite(w) || w < 0.0) throw ConfigError("prior weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("prior weights must sum to 1");
    prior_ = std::move(p);
  }

  std::vector<ProductMeasure> measures_;
  std::vector<std::string> names_;
  std::optional<std::vector<double>> prior_;
};

/// The mixture sum_m p_m mu^m induced by a prior over a measure set.
class MixtureMeasure {
 public:
  explicit MixtureMeasure(MeasureSet set) : set_(std::move(set)) {
    if (!set_.has_prior()) throw PriorRequiredError("mixture measure");
  }

  const MeasureSet& set() const { return set_; }
  std::size_t dim() const { return set_.dim(); }
  double weight(std::size_t m) const { return set_.prior().at(m); }

  double density(std::span<const double> x) const {
    double d = 0.0;
    for (std::size_t m = 0; m < set_.size(); ++m) d += weight(m) * set_[m].density(x);
    return d;
  }

 private:
  MeasureSet set_;
};

// ---------------------------------------------------------------------------
// Sampling

struct MixtureDraws {
  Matrix inputs;
  std::vector<std::size_t> component;
};

inline Matrix sample(const ProductMeasure& m, std::size_t count, std::uint64_t seed,
                     unsigned workers = 1) {
  if (count == 0) throw std::invalid_argument("sample: count must be positive");
  const std::size_t n = m.dim();
  Matrix out(count, n);
  const std::size_t blocks = (count + stream_block - 1) / stream_block;
  parallel_for(blocks, workers, [&](std::size_t b) {
    RandomStream rng(seed, "sample", b);
    const std::size_t end = std::min(count, (b + 1) * stream_block);
    for (std::size_t r = b * stream_block; r < end; ++r) {
      for (std::size_t i = 0; i < n; ++i) out(r, i) = m[i].quantile(rng.uniform());
    }
  });
  return out;
}

/// Two-stage draws: a component is chosen by the prior, then the inputs are
/// drawn from that component.
inline MixtureDraws sample_with_components(const MixtureMeasure& mix, std::size_t count,
                                           std::uint64_t seed, unsigned workers = 1) {
  if (count == 0) throw std::invalid_argument("sample: count must be positive");
  const auto& set = mix.set();
  const std::size_t n = set.dim();
  std::vector<double> cumulative(set.size());
  std::partial_sum(set.prior().begin(), set.prior().end(), cumulative.begin());
  MixtureDraws out{Matrix(count, n), std::vector<std::size_t>(count)};
  const std::size_t blocks = (count + stream_block - 1) / stream_block;
  parallel_for(blocks, workers, [&](std::size_t b) {
    RandomStream rng(seed, "sample-mixture", b);
    const std::size_t end = std::min(count, (b + 1) * stream_block);
    for (std::size_t r = b * stream_block; r < end; ++r) {
      const double u = rng.uniform() * cumulative.back();
      std::size_t m = 0;
      while (m + 1 < cumulative.size() && (u >= cumulative[m] || set.prior()[m] == 0.0)) ++m;
      out.component[r] = m;
      for (std::size_t i = 0; i < n; ++i) out.inputs(r, i) = set[m][i].quantile(rng.uniform());
    }
  });
  return out;
}

inline Matrix sample(const MixtureMeasure& mix, std::size_t count, std::uint64_t seed,
                     unsigned workers = 1) {
  return sample_with_components(mix, count, seed, workers).inputs;
}

// ---------------------------------------------------------------------------
// Mixture marginals, covariance, pooling

/// Density of the mixture marginal of the coordinates in `keep` at `x_keep`
/// (one value per member of `keep`, ascending index order). Components are
/// product measures, so the marginal is the mixture of component marginals.
inline double mixture_marginal_density(const MixtureMeasure& mix, SubsetIndex keep,
                                       std::span<const double> x_keep) {
  if (keep.empty()) throw std::invalid_argument("mixture_marginal_density: empty subset");
  const auto members = keep.members();
  if (x_keep.size() != members.size()) {
    throw std::invalid_argument("mixture_marginal_density: coordinates do not match subset");
  }
  if (keep.max_member() >= mix.dim()) {
    throw std::invalid_argument("mixture_marginal_density: subset exceeds dimension");
  }
  double total = 0.0;
  for (std::size_t m = 0; m < mix.set().size(); ++m) {
    double d = mix.weight(m);
    for (std::size_t k = 0; k < members.size() && d > 0.0; ++k) {
      d *= mix.set()[m][members[k]].density(x_keep[k]);
    }
    total += d;
  }
  return total;
}

/// Cov(X_i, X_j) under the mixture, from closed-form component means.
inline double mixture_covariance(const MixtureMeasure& mix, std::size_t i, std::size_t j) {
  if (i == j) throw std::invalid_argument("mixture_covariance: requires i != j");
  if (i >= mix.dim() || j >= mix.dim()) throw std::out_of_range("mixture_covariance: index");
  double cross = 0.0, mi = 0.0, mj = 0.0;
  for (std::size_t m = 0; m < mix.set().size(); ++m) {
    const double ei = mix.set()[m][i].mean(), ej = mix.set()[m][j].mean();
    cross += mix.weight(m) * ei * ej;
    mi += mix.weight(m) * ei;
    mj += mix.weight(m) * ej;
  }
  return cross - mi * mj;
}

/// Logarithmic opinion pool k * prod_m mu^m(x)^{w_m}, computed per coordinate.
/// Normal components pool to the precision-weighted Normal; Uniform
/// components pool to the Uniform on the intersection of their supports.
inline ProductMeasure log_pool(const MeasureSet& set, std::span<const double> weights) {
  if (weights.size() != set.size()) throw ConfigError("log_pool: one weight per measure");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("log_pool: weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("log_pool: weights must sum to 1");

  std::vector<UnivariateMeasure> pooled;
  for (std::size_t i = 0; i < set.dim(); ++i) {
    const auto& first = set[0][i].params();
    if (std::holds_alternative<Normal>(first)) {
      double precision = 0.0, weighted_mean = 0.0;
      for (std::size_t m = 0; m < set.size(); ++m) {
        const auto* p = std::get_if<Normal>(&set[m][i].params());
        if (!p) throw ConfigError("log_pool: mixed families on coordinate " + std::to_string(i + 1));
        const double tau = weights[m] / (p->sd * p->sd);
        precision += tau;
        weighted_mean += tau * p->mean;
      }
      pooled.push_back(UnivariateMeasure::normal(weighted_mean / precision, 1.0 / std::sqrt(precision)));
    } else if (std::holds_alternative<Uniform>(first)) {
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < set.size(); ++m) {
        const auto* p = std::get_if<Uniform>(&set[m][i].params());
        if (!p) throw ConfigError("log_pool: mixed families on coordinate " + std::to_string(i + 1));
        lo = std::max(lo, p->lo);
        hi = std::min(hi, p->hi);
      }
      if (!(lo < hi)) {
        throw ConfigError("log_pool: supports do not intersect on coordinate " + std::to_string(i + 1));
      }
      pooled.push_back(UnivariateMeasure::uniform(lo, hi));
    } else {
      throw ConfigError("log_pool: discrete components are not supported");
    }
  }
  return ProductMeasure(std::move(pooled));
}

/// Intersection of the component supports on coordinate i.
inline Interval support_intersection(const MeasureSet& set, std::size_t i) {
  Interval out;
  for (const auto& m : set.measures()) {
    const auto s = m[i].support();
    out.lo = std::max(out.lo, s.lo);
    out.hi = std::min(out.hi, s.hi);
  }
  return out;
}

/// Finite support endpoints of all components on coordinate i.
inline std::vector<double> support_breakpoints(const MeasureSet& set, std::size_t i) {
  std::vector<double> out;
  for (const auto& m : set.measures()) {
    const auto s = m[i].support();
    if (std::isfinite(s.lo)) out.push_back(s.lo);
    if (std::isfinite(s.hi)) out.push_back(s.hi);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// A bounded plotting range for one coordinate of one measure: the support
/// when bounded, mean +/- 4 sd for a Normal.
inline Interval plotting_range(const UnivariateMeasure& m) {
  if (const auto* p = std::get_if<Normal>(&m.params())) {
    return {p->mean - 4.0 * p->sd, p->mean + 4.0 * p->sd};
  }
  return m.support();
}

}  // namespace rgsa
