#pragma once

// Functional ANOVA under a single product measure.
//
// Effects are built from conditional expectations w_z(x_z) = E[G | X_z = x_z]
// by subtracting all lower-order effects, memoized bottom-up by cardinality.
// Integrals over the complementary coordinates use tensor quadrature when at
// most `max_tensor_dims` coordinates are integrated out and a digitally
// shifted Sobol rule otherwise.

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rgsa/error.hpp"
#include "rgsa/matrix.hpp"
#include "rgsa/measures.hpp"
#include "rgsa/model.hpp"
#include "rgsa/quadrature.hpp"
#include "rgsa/subset.hpp"

namespace rgsa {

struct QuadratureOptions {
  std::size_t points = 64;              // nodes per coordinate
  std::size_t max_tensor_dims = 3;      // beyond this, integrate by QMC
  std::size_t qmc_points = std::size_t{1} << 14;
  std::uint64_t qmc_seed = 0x0a11'5eed;
};

/// Tolerance declared for QMC-based results.
inline constexpr double qmc_tolerance = 1e-4;

/// A tabulated effect function of one input on a strictly increasing grid.
struct EffectCurve {
  SubsetIndex subset;
  std::vector<double> grid;
  std::vector<double> values;
  std::string tag;

  void validate() const {
    if (grid.size() != values.size()) throw std::invalid_argument("EffectCurve: grid/value size mismatch");
    for (std::size_t k = 1; k < grid.size(); ++k) {
      if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("EffectCurve: grid not strictly increasing");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw NumericError("EffectCurve: non-finite value");
    }
  }
};

inline std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  if (count < 2 || !(hi > lo)) throw std::invalid_argument("linear_grid: need count >= 2 and hi > lo");
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  out.back() = hi;
  return out;
}

template <ScalarModel M>
class AnovaExpansion {
 public:
  AnovaExpansion(M model, ProductMeasure measure, QuadratureOptions opts = {})
      : model_(std::move(model)), measure_(std::move(measure)), opts_(opts) {
    const auto n = measure_.dim();
    rules_.reserve(n);
    for (const auto& c : measure_.components()) rules_.push_back(c.rule(opts_.points));
    if (n > opts_.max_tensor_dims) {
      const Matrix u = scrambled_sobol(opts_.qmc_points, n, opts_.qmc_seed);
      qmc_ = Matrix(u.rows, n);
      for (std::size_t r = 0; r < u.rows; ++r) {
        for (std::size_t i = 0; i < n; ++i) qmc_(r, i) = measure_[i].quantile(u(r, i));
      }
    }
    std::vector<double> origin(n);
    for (std::size_t i = 0; i < n; ++i) origin[i] = measure_[i].mean();
    constant_ = integrate_out(SubsetIndex{}, origin);
  }

  std::size_t dim() const { return measure_.dim(); }
  const M& model() const { return model_; }
  const ProductMeasure& measure() const { return measure_; }
  const QuadratureOptions& options() const { return opts_; }

  /// g_0 = E[G].
  double constant() const { return constant_; }

  /// E[G | X_z = x_z]; `x` is a full-length point whose z-coordinates are used.
  double conditional_expectation(SubsetIndex z, std::span<const double> x) const {
    check(x);
    if (z.empty()) return constant_;
    if (z == SubsetIndex::full(dim())) return evaluate(x);
    return integrate_out(z, x);
  }

  /// Effect g_z(x_z): conditional expectation minus all proper-subset effects.
  double effect(SubsetIndex z, std::span<const double> x) const {
    return effect_table(z, x).back().second;
  }

  /// Effects of every subset of z at x, in canonical order (last entry is z).
  std::vector<std::pair<SubsetIndex, double>> effect_table(SubsetIndex z,
                                                           std::span<const double> x) const {
    check(x);
    if (!z.is_subset_of(SubsetIndex::full(dim()))) throw std::invalid_argument("effect: subset exceeds dimension");
    const auto subsets = subsets_of(z);
    std::vector<std::pair<SubsetIndex, double>> table;
    table.reserve(subsets.size());
    std::map<std::uint32_t, double> done;
    for (auto v : subsets) {
      double value = conditional_expectation(v, x);
      for (auto u : subsets_of(v, true, false)) value -= done.at(u.mask());
      done[v.mask()] = value;
      table.emplace_back(v, value);
    }
    return table;
  }

  /// Effects of all 2^n subsets at x, indexed by subset mask.
  std::vector<double> effects_at(std::span<const double> x) const {
    if (dim() > 16) throw std::invalid_argument("effects_at: n too large for a full table");
    std::vector<double> out(std::size_t{1} << dim(), 0.0);
    for (const auto& [z, v] : effect_table(SubsetIndex::full(dim()), x)) out[z.mask()] = v;
    return out;
  }

  /// First-order effect of input i tabulated on `grid`.
  EffectCurve first_order_curve(std::size_t i, std::vector<double> grid, std::string tag = {}) const {
    std::vector<double> x(dim());
    for (std::size_t k = 0; k < dim(); ++k) x[k] = measure_[k].mean();
    EffectCurve curve{SubsetIndex::singleton(i), std::move(grid), {}, std::move(tag)};
    curve.values.reserve(curve.grid.size());
    for (double g : curve.grid) {
      x[i] = g;
      curve.values.push_back(conditional_expectation(curve.subset, x) - constant_);
    }
    curve.validate();
    return curve;
  }

 private:
  void check(std::span<const double> x) const {
    if (x.size() != dim()) throw std::invalid_argument("dimension mismatch in ANOVA evaluation");
  }

  double evaluate(std::span<const double> x) const {
    const double v = model_(x);
    if (!std::isfinite(v)) throw NumericError("model returned a non-finite value");
    return v;
  }

  // Integral of g over the coordinates not in `keep`, others fixed from x.
  double integrate_out(SubsetIndex keep, std::span<const double> x) const {
    const auto free = keep.complement(dim()).members();
    std::vector<double> y(x.begin(), x.end());
    double acc = 0.0;
    if (free.size() <= opts_.max_tensor_dims) {
      std::vector<std::size_t> idx(free.size(), 0);
      for (;;) {
        double w = 1.0;
        for (std::size_t k = 0; k < free.size(); ++k) {
          const auto& r = rules_[free[k]];
          y[free[k]] = r.nodes[idx[k]];
          w *= r.weights[idx[k]];
        }
        acc += w * evaluate(y);
        std::size_t k = 0;
        while (k < free.size() && ++idx[k] == rules_[free[k]].size()) idx[k++] = 0;
        if (k == free.size()) break;
      }
    } else {
      for (std::size_t r = 0; r < qmc_.rows; ++r) {
        for (auto i : free) y[i] = qmc_(r, i);
        acc += evaluate(y);
      }
      acc /= static_cast<double>(qmc_.rows);
    }
    if (!std::isfinite(acc)) throw NumericError("quadrature produced a non-finite value");
    return acc;
  }

  M model_;
  ProductMeasure measure_;
  QuadratureOptions opts_;
  std::vector<Rule> rules_;
  Matrix qmc_;
  double constant_ = 0.0;
};

// ---------------------------------------------------------------------------
// Variance decomposition

struct VarianceDecomposition {
  std::size_t n = 0;
  std::size_t max_order = 0;
  std::map<SubsetIndex, double> terms;  // raw V_z for 1 <= |z| <= max_order
  std::vector<double> total_effects;    // raw VT_i = sum_{z contains i} V_z
  double mean = 0.0;
  double total = 0.0;
  std::string mode;                     // "quadrature" or "qmc"
  double tolerance = 0.0;
  std::string tag;

  bool complete() const { return max_order >= n; }

  /// V_z clamped at zero; subsets above max_order report 0.
  double term(SubsetIndex z) const {
    const auto it = terms.find(z);
    return it == terms.end() ? 0.0 : std::max(0.0, it->second);
  }

  double raw_term(SubsetIndex z) const {
    const auto it = terms.find(z);
    return it == terms.end() ? 0.0 : it->second;
  }

  /// Variance not attributed to any listed subset (higher orders and noise).
  double residual() const {
    double sum = 0.0;
    for (const auto& [z, v] : terms) sum += v;
    return total - sum;
  }
};

inline std::size_t default_max_order(std::size_t n) { return n <= 4 ? n : 2; }

namespace detail {

template <ScalarModel M>
VarianceDecomposition grid_decomposition(const M& model, const ProductMeasure& measure,
                                         std::size_t max_order, const QuadratureOptions& opts) {
  const std::size_t n = measure.dim();
  std::vector<Rule> rules;
  std::vector<std::size_t> sizes, strides(n);
  for (const auto& c : measure.components()) {
    rules.push_back(c.rule(opts.points));
    sizes.push_back(rules.back().size());
  }
  std::size_t points = 1;
  for (std::size_t i = n; i-- > 0;) {
    strides[i] = points;
    points *= sizes[i];
  }

  // Model values and product weights on the full tensor grid.
  std::vector<double> values(points), weights(points);
  {
    std::vector<std::size_t> idx(n, 0);
    std::vector<double> x(n);
    for (std::size_t p = 0; p < points; ++p) {
      double w = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = rules[i].nodes[idx[i]];
        w *= rules[i].weights[idx[i]];
      }
      const double v = model(std::span<const double>(x));
      if (!std::isfinite(v)) throw NumericError("model returned a non-finite value");
      values[p] = v;
      weights[p] = w;
      for (std::size_t i = n; i-- > 0;) {
        if (++idx[i] < sizes[i]) break;
        idx[i] = 0;
      }
    }
  }

  // Conditional expectations w_v on the v-subgrid, for every subset v.
  const std::uint32_t full = SubsetIndex::full(n).mask();
  auto subgrid_size = [&](SubsetIndex v) {
    std::size_t s = 1;
    for (auto i : v.members()) s *= sizes[i];
    return s;
  };
  // Position of full-grid point p inside the v-subgrid (row-major over v).
  auto project = [&](std::size_t p, SubsetIndex v) {
    std::size_t pos = 0;
    for (auto i : v.members()) pos = pos * sizes[i] + (p / strides[i]) % sizes[i];
    return pos;
  };
  std::vector<std::vector<double>> cond(full + 1);
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    const SubsetIndex v(mask);
    auto& w_v = cond[mask];
    w_v.assign(subgrid_size(v), 0.0);
    const auto others = v.complement(n).members();
    for (std::size_t p = 0; p < points; ++p) {
      double w = 1.0;
      for (auto i : others) w *= rules[i].weights[(p / strides[i]) % sizes[i]];
      w_v[project(p, v)] += w * values[p];
    }
  }

  VarianceDecomposition vd;
  vd.n = n;
  vd.max_order = max_order;
  vd.mean = cond[0][0];
  vd.mode = "quadrature";
  vd.total_effects.assign(n, 0.0);
  double total = 0.0;
  for (std::size_t p = 0; p < points; ++p) {
    const double d = values[p] - vd.mean;
    total += weights[p] * d * d;
  }
  vd.total = total;

  // g_z on the z-subgrid by inclusion-exclusion, then V_z = sum W_z g_z^2.
  for (auto z : all_subsets(n, n)) {
    const auto members = z.members();
    const std::size_t size = subgrid_size(z);
    std::vector<std::size_t> local(members.size(), 0);
    const auto lower = subsets_of(z);
    double v_z = 0.0;
    for (std::size_t q = 0; q < size; ++q) {
      // local multi-index over members (row-major), decoded from q
      std::size_t rem = q;
      for (std::size_t k = members.size(); k-- > 0;) {
        local[k] = rem % sizes[members[k]];
        rem /= sizes[members[k]];
      }
      double w = 1.0;
      for (std::size_t k = 0; k < members.size(); ++k) w *= rules[members[k]].weights[local[k]];
      double g = 0.0;
      for (auto v : lower) {
        std::size_t pos = 0;
        for (std::size_t k = 0; k < members.size(); ++k) {
          if (v.contains(members[k])) pos = pos * sizes[members[k]] + local[k];
        }
        const bool odd = ((z.size() - v.size()) & 1u) != 0;
        g += odd ? -cond[v.mask()][pos] : cond[v.mask()][pos];
      }
      v_z += w * g * g;
    }
    for (auto i : members) vd.total_effects[i] += v_z;
    if (z.size() <= max_order) vd.terms[z] = v_z;
  }
  vd.tolerance = 1e-10 * std::max(1.0, vd.total);
  return vd;
}

template <ScalarModel M>
VarianceDecomposition qmc_decomposition(const M& model, const ProductMeasure& measure,
                                        std::size_t max_order, const QuadratureOptions& opts) {
  const std::size_t n = measure.dim();
  const std::size_t N = opts.qmc_points;
  const Matrix u = scrambled_sobol(N, 2 * n, opts.qmc_seed);
  Matrix a(N, n), b(N, n);
  for (std::size_t r = 0; r < N; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      a(r, i) = measure[i].quantile(u(r, i));
      b(r, i) = measure[i].quantile(u(r, n + i));
    }
  }
  auto eval = [&](std::span<const double> x) {
    const double v = model(x);
    if (!std::isfinite(v)) throw NumericError("model returned a non-finite value");
    return v;
  };
  std::vector<double> fa(N), fb(N);
  for (std::size_t r = 0; r < N; ++r) {
    fa[r] = eval(a.row(r));
    fb[r] = eval(b.row(r));
  }
  // Output of the hybrid point taking coordinates in `from_a` from A, the rest from B.
  std::vector<double> hybrid(n);
  auto hybrid_eval = [&](std::size_t r, SubsetIndex from_a) {
    for (std::size_t i = 0; i < n; ++i) hybrid[i] = from_a.contains(i) ? a(r, i) : b(r, i);
    return eval(hybrid);
  };

  VarianceDecomposition vd;
  vd.n = n;
  vd.max_order = max_order;
  vd.mode = "qmc";
  double mean = 0.0;
  for (std::size_t r = 0; r < N; ++r) mean += fa[r] + fb[r];
  mean /= 2.0 * static_cast<double>(N);
  double total = 0.0;
  for (std::size_t r = 0; r < N; ++r) {
    total += (fa[r] - mean) * (fa[r] - mean) + (fb[r] - mean) * (fb[r] - mean);
  }
  vd.mean = mean;
  vd.total = total / (2.0 * static_cast<double>(N));

  // Closed indices tau_v = E[f(A) (f(C_v) - f(B))], then Moebius inversion.
  std::map<SubsetIndex, double> closed;
  for (auto v : all_subsets(n, max_order)) {
    double acc = 0.0;
    for (std::size_t r = 0; r < N; ++r) acc += fa[r] * (hybrid_eval(r, v) - fb[r]);
    closed[v] = acc / static_cast<double>(N);
  }
  for (auto z : all_subsets(n, max_order)) {
    double v_z = 0.0;
    for (auto v : subsets_of(z, false)) {
      const bool odd = ((z.size() - v.size()) & 1u) != 0;
      v_z += odd ? -closed.at(v) : closed.at(v);
    }
    vd.terms[z] = v_z;
  }
  vd.total_effects.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto all_but_i = SubsetIndex::singleton(i).complement(n);
    double acc = 0.0;
    for (std::size_t r = 0; r < N; ++r) {
      const double d = fa[r] - hybrid_eval(r, all_but_i);
      acc += d * d;
    }
    vd.total_effects[i] = 0.5 * acc / static_cast<double>(N);
  }
  vd.tolerance = qmc_tolerance * std::max(1.0, vd.total);
  return vd;
}

}  // namespace detail

/// V_z for every subset up to `max_order` (0 selects the default: n for
/// n <= 4, else 2). Higher orders are folded into `residual()`.
template <ScalarModel M>
VarianceDecomposition variance_decomposition(const M& model, const ProductMeasure& measure,
                                             std::size_t max_order = 0,
                                             QuadratureOptions opts = {}, std::string tag = {}) {
  const std::size_t n = measure.dim();
  if (max_order == 0) max_order = default_max_order(n);
  if (max_order > n) throw std::invalid_argument("variance_decomposition: max_order exceeds n");
  auto vd = n <= opts.max_tensor_dims ? detail::grid_decomposition(model, measure, max_order, opts)
                                      : detail::qmc_decomposition(model, measure, max_order, opts);
  vd.tag = std::move(tag);
  return vd;
}

struct SobolIndices {
  double first = 0.0;
  double total = 0.0;
};

/// Returns true when the decomposition's variance is numerically zero.
inline bool zero_variance(const VarianceDecomposition& vd) {
  return !(vd.total > 1e-12 * std::max(1.0, vd.mean * vd.mean));
}

/// First-order S_i = V_i / V and total ST_i = VT_i / V for each input.
inline std::vector<SobolIndices> first_and_total_indices(const VarianceDecomposition& vd) {
  if (zero_variance(vd)) throw ZeroVarianceError("indices are undefined" + (vd.tag.empty() ? std::string{} : " for " + vd.tag));
  std::vector<SobolIndices> out(vd.n);
  for (std::size_t i = 0; i < vd.n; ++i) {
    out[i].first = vd.term(SubsetIndex::singleton(i)) / vd.total;
    out[i].total = std::max(0.0, vd.total_effects[i]) / vd.total;
  }
  return out;
}

}  // namespace rgsa
