#pragma once

// Dimension distributions and mean effective dimensions, robust rankings of
// inputs across a measure set, and grid checks of monotonicity and
// ultramodularity.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rgsa/anova.hpp"
#include "rgsa/error.hpp"
#include "rgsa/measures.hpp"
#include "rgsa/model.hpp"
#include "rgsa/subset.hpp"

namespace rgsa {

// ---------------------------------------------------------------------------
// Dimension distributions

struct DimensionDistribution {
  std::map<SubsetIndex, double> mass;
  double superposition = 0.0;  // D_S = sum |z| mass(z)
  double truncation = 0.0;     // D_T = sum max(z) mass(z), one-based max
  double superposition_from_totals = 0.0;  // sum ST_i (per measure) or sum p_m D_S^m (mixture)
};

namespace detail {

inline void fill_dimensions(DimensionDistribution& d) {
  d.superposition = 0.0;
  d.truncation = 0.0;
  for (const auto& [z, p] : d.mass) {
    d.superposition += static_cast<double>(z.size()) * p;
    d.truncation += static_cast<double>(z.max_member() + 1) * p;
  }
}

}  // namespace detail

/// Owen's mass function V_z / V. Masses use clamped terms and are normalized
/// by their sum, which equals V up to the decomposition's tolerance.
inline DimensionDistribution dimension_distribution(const VarianceDecomposition& vd) {
  if (!vd.complete()) throw ConfigError("dimension distribution needs a decomposition of every order");
  if (zero_variance(vd)) throw ZeroVarianceError("dimension distribution is undefined for zero variance");
  DimensionDistribution d;
  double sum = 0.0;
  for (const auto& [z, v] : vd.terms) sum += std::max(0.0, v);
  for (const auto& [z, v] : vd.terms) d.mass[z] = std::max(0.0, v) / sum;
  detail::fill_dimensions(d);
  for (double t : vd.total_effects) d.superposition_from_totals += std::max(0.0, t) / vd.total;
  return d;
}

/// Prior-weighted mixture of per-measure mass functions.
inline DimensionDistribution mixture_dimension_distribution(const MeasureSet& set,
                                                            std::span<const VarianceDecomposition> vds) {
  const auto& prior = set.prior();
  if (vds.size() != set.size()) throw std::invalid_argument("one decomposition per measure is required");
  DimensionDistribution d;
  for (std::size_t m = 0; m < set.size(); ++m) {
    const auto dm = dimension_distribution(vds[m]);
    for (const auto& [z, p] : dm.mass) d.mass[z] += prior[m] * p;
    d.superposition_from_totals += prior[m] * dm.superposition;
  }
  detail::fill_dimensions(d);
  return d;
}

struct DimensionBounds {
  double superposition_min = 0.0, superposition_max = 0.0;
  double truncation_min = 0.0, truncation_max = 0.0;
};

inline DimensionBounds dimension_bounds(std::span<const VarianceDecomposition> vds) {
  if (vds.empty()) throw std::invalid_argument("dimension_bounds: no measures");
  DimensionBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& vd : vds) {
    const auto d = dimension_distribution(vd);
    b.superposition_min = std::min(b.superposition_min, d.superposition);
    b.superposition_max = std::max(b.superposition_max, d.superposition);
    b.truncation_min = std::min(b.truncation_min, d.truncation);
    b.truncation_max = std::max(b.truncation_max, d.truncation);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Robust ranking

struct RobustReport {
  std::vector<double> lower;  // inf over measures of S_i
  std::vector<double> upper;  // sup over measures of S_i
  std::vector<std::vector<bool>> dominates;  // dominates[i][j]: i robustly above j
  std::vector<std::vector<std::size_t>> blocks;  // best first; size > 1 means unresolved
  std::optional<std::size_t> most_important;
  std::optional<std::size_t> least_important;
  bool estimated = false;  // dominance carries the 2-SE guard
};

/// `first[m][i]` is S_i under measure m. With `se` given (same shape), i
/// dominates j only if lower_i > upper_j + 2 sqrt(se_i^2 + se_j^2), using
/// the standard errors at the attaining measures; otherwise the comparison
/// is strict.
inline RobustReport robust_ranking(const std::vector<std::vector<double>>& first,
                                   const std::optional<std::vector<std::vector<double>>>& se = std::nullopt) {
  if (first.empty() || first.front().empty()) throw std::invalid_argument("robust_ranking: no indices");
  const std::size_t q = first.size(), n = first.front().size();
  for (const auto& row : first) {
    if (row.size() != n) throw std::invalid_argument("robust_ranking: ragged index table");
  }
  if (se && (se->size() != q || se->front().size() != n)) {
    throw std::invalid_argument("robust_ranking: standard errors must match the index table");
  }
  RobustReport rep;
  rep.estimated = se.has_value();
  rep.lower.assign(n, std::numeric_limits<double>::infinity());
  rep.upper.assign(n, -std::numeric_limits<double>::infinity());
  std::vector<double> lower_se(n, 0.0), upper_se(n, 0.0);
  for (std::size_t m = 0; m < q; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      if (first[m][i] < rep.lower[i]) {
        rep.lower[i] = first[m][i];
        if (se) lower_se[i] = (*se)[m][i];
      }
      if (first[m][i] > rep.upper[i]) {
        rep.upper[i] = first[m][i];
        if (se) upper_se[i] = (*se)[m][i];
      }
    }
  }
  rep.dominates.assign(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double guard = se ? 2.0 * std::hypot(lower_se[i], upper_se[j]) : 0.0;
      rep.dominates[i][j] = rep.lower[i] > rep.upper[j] + guard;
    }
  }
  // Peel blocks top-down: the shortest prefix (by lower bound) whose members
  // all dominate everything left over.
  std::vector<std::size_t> rest(n);
  std::iota(rest.begin(), rest.end(), 0);
  while (!rest.empty()) {
    std::stable_sort(rest.begin(), rest.end(),
                     [&](std::size_t a, std::size_t b) { return rep.lower[a] > rep.lower[b]; });
    std::size_t cut = rest.size();
    for (std::size_t k = 1; k < rest.size(); ++k) {
      bool ok = true;
      for (std::size_t p = 0; p < k && ok; ++p)
        for (std::size_t r = k; r < rest.size() && ok; ++r) ok = rep.dominates[rest[p]][rest[r]];
      if (ok) {
        cut = k;
        break;
      }
    }
    std::vector<std::size_t> block(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(cut));
    std::sort(block.begin(), block.end());
    rep.blocks.push_back(std::move(block));
    rest.erase(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(cut));
  }
  for (std::size_t i = 0; i < n && n > 1; ++i) {
    bool top = true, bottom = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      top = top && rep.dominates[i][j];
      bottom = bottom && rep.dominates[j][i];
    }
    if (top) rep.most_important = i;
    if (bottom) rep.least_important = i;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Monotonicity

struct MonotonicityVerdict {
  bool nondecreasing = false;
  bool nonincreasing = false;
  double max_decrease = 0.0;  // largest drop between consecutive grid points
  double max_increase = 0.0;  // largest rise between consecutive grid points
  double tolerance = 0.0;

  std::string verdict() const {
    if (nondecreasing) return "nondecreasing";
    if (nonincreasing) return "nonincreasing";
    return "nonmonotone";
  }
};

/// Scans consecutive differences. Default tolerance: 1e-6 of the value range.
/// Verdicts are relative to the grid.
inline MonotonicityVerdict monotonicity_check(const EffectCurve& curve, std::optional<double> tol = std::nullopt) {
  if (curve.grid.size() < 2) throw std::invalid_argument("monotonicity_check: need at least 2 grid points");
  curve.validate();
  const auto [lo, hi] = std::minmax_element(curve.values.begin(), curve.values.end());
  MonotonicityVerdict v;
  v.tolerance = tol.value_or(1e-6 * (*hi - *lo));
  for (std::size_t k = 1; k < curve.values.size(); ++k) {
    const double d = curve.values[k] - curve.values[k - 1];
    v.max_decrease = std::max(v.max_decrease, -d);
    v.max_increase = std::max(v.max_increase, d);
  }
  v.nondecreasing = v.max_decrease <= v.tolerance;
  v.nonincreasing = v.max_increase <= v.tolerance;
  return v;
}

// ---------------------------------------------------------------------------
// Ultramodularity

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

inline constexpr std::size_t ultramodular_max_grid = 9;
inline constexpr std::size_t ultramodular_max_dim = 4;

struct UltramodularityReport {
  bool ultramodular = false;
  double max_violation = 0.0;   // largest f(x1+d)-f(x1) - (f(x2+d)-f(x2))
  std::size_t comparisons = 0;  // C(k+2, 3)^n triples tested
  std::vector<bool> first_order_convex;  // per input; empty when not requested
  double tolerance = 0.0;
};

/// Exhaustive grid test of f(x1 + d) - f(x1) <= f(x2 + d) - f(x2) over all
/// x1 <= x2 and steps d >= 0 on a k^n grid. Per coordinate the admissible
/// (x1, x2, x2 + d) index triples number C(k+2, 3).
template <ScalarModel M>
UltramodularityReport ultramodular_on_grid(const M& f, const Box& box, std::size_t grid_k,
                                           std::optional<double> tol = std::nullopt) {
  const std::size_t n = box.lo.size();
  if (box.hi.size() != n || n == 0) throw std::invalid_argument("ultramodularity: malformed box");
  if (grid_k < 3) throw ConfigError("ultramodularity: grid_k must be at least 3");
  if (grid_k > ultramodular_max_grid || n > ultramodular_max_dim) {
    throw ConfigError("ultramodularity: enumeration is limited to grid_k <= 9 and n <= 4; "
                      "check a lower-dimensional slice or a coarser grid");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(box.hi[i] > box.lo[i])) throw ConfigError("ultramodularity: box needs lo < hi");
  }
  std::size_t points = 1;
  for (std::size_t i = 0; i < n; ++i) points *= grid_k;
  std::vector<double> values(points);
  std::vector<double> x(n);
  for (std::size_t p = 0; p < points; ++p) {
    std::size_t rem = p;
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = rem % grid_k;
      rem /= grid_k;
      x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * static_cast<double>(k) / static_cast<double>(grid_k - 1);
    }
    values[p] = f(std::span<const double>(x));
    if (!std::isfinite(values[p])) throw NumericError("ultramodularity: non-finite model value");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  UltramodularityReport rep;
  rep.tolerance = tol.value_or(1e-9 * std::max(1.0, *hi - *lo));

  // Per-coordinate triples (a, b, c = b + d) with a <= b <= c.
  std::vector<std::array<std::size_t, 3>> triples;
  for (std::size_t a = 0; a < grid_k; ++a)
    for (std::size_t b = a; b < grid_k; ++b)
      for (std::size_t c = b; c < grid_k; ++c) triples.push_back({a, b, c});
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t i = 1; i < n; ++i) stride[i] = stride[i - 1] * grid_k;
  std::vector<std::size_t> pick(n, 0);
  for (;;) {
    std::size_t x1 = 0, x2 = 0, x1d = 0, x2d = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& [a, b, c] = triples[pick[i]];
      const std::size_t d = c - b;
      x1 += a * stride[i];
      x2 += b * stride[i];
      x1d += (a + d) * stride[i];
      x2d += c * stride[i];
    }
    const double gap = (values[x1d] - values[x1]) - (values[x2d] - values[x2]);
    rep.max_violation = std::max(rep.max_violation, gap);
    ++rep.comparisons;
    std::size_t i = 0;
    while (i < n && ++pick[i] == triples.size()) pick[i++] = 0;
    if (i == n) break;
  }
  rep.ultramodular = rep.max_violation <= rep.tolerance;
  return rep;
}

/// Grid ultramodularity of the model on `box` plus discrete convexity of each
/// first-order effect under `measure` on the same grid.
template <ScalarModel M>
UltramodularityReport ultramodularity_check(const M& model, const ProductMeasure& measure, const Box& box,
                                            std::size_t grid_k, std::optional<double> tol = std::nullopt,
                                            QuadratureOptions opts = {}) {
  if (box.lo.size() != measure.dim()) throw std::invalid_argument("ultramodularity: box dimension mismatch");
  for (std::size_t i = 0; i < measure.dim(); ++i) {
    const auto s = measure[i].support();
    if (box.lo[i] < s.lo || box.hi[i] > s.hi) {
      throw ConfigError("ultramodularity: box leaves the support of input x" + std::to_string(i + 1));
    }
  }
  auto rep = ultramodular_on_grid(model, box, grid_k, tol);
  const AnovaExpansion<M> ex(model, measure, opts);
  for (std::size_t i = 0; i < measure.dim(); ++i) {
    const auto curve = ex.first_order_curve(i, linear_grid(box.lo[i], box.hi[i], grid_k));
    bool convex = true;
    for (std::size_t k = 1; k + 1 < grid_k; ++k) {
      const double second = curve.values[k + 1] - 2.0 * curve.values[k] + curve.values[k - 1];
      convex = convex && second >= -rep.tolerance;
    }
    rep.first_order_convex.push_back(convex);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Monotonicity condition for higher-order mixture effects

struct EffectIncrement {
  double conditional = 0.0;   // w_z(x2) - w_z(x1)
  double lower_effects = 0.0; // sum over proper subsets v of z of g_v(x2) - g_v(x1)
};

/// Increment of w_z and of the proper-subset effects between x1 and x2
/// (full-length points; only the z-coordinates matter).
template <ScalarModel M>
EffectIncrement effect_increments(const AnovaExpansion<M>& ex, SubsetIndex z, std::span<const double> x1,
                                  std::span<const double> x2) {
  EffectIncrement inc;
  inc.conditional = ex.conditional_expectation(z, x2) - ex.conditional_expectation(z, x1);
  const auto t1 = ex.effect_table(z, x1), t2 = ex.effect_table(z, x2);
  for (std::size_t k = 0; k + 1 < t1.size(); ++k) inc.lower_effects += t2[k].second - t1[k].second;
  return inc;
}

struct MonotonicityCondition {
  bool holds = true;
  double worst_margin = std::numeric_limits<double>::infinity();  // min of conditional - lower_effects
  std::size_t pairs = 0;
};

/// Checks conditional >= lower_effects - tol for every supplied increment
/// (all measures, all grid pairs with x1 <= x2).
inline MonotonicityCondition mixture_monotonicity_condition(std::span<const EffectIncrement> increments,
                                                            double tol = 1e-9) {
  MonotonicityCondition c;
  for (const auto& inc : increments) {
    const double margin = inc.conditional - inc.lower_effects;
    c.worst_margin = std::min(c.worst_margin, margin);
    c.holds = c.holds && margin >= -tol;
    ++c.pairs;
  }
  return c;
}

/// Builds increments on the tensor grid over the z-coordinates (one grid per
/// member of z) for every expansion, over all ordered pairs x1 <= x2, x1 != x2.
template <ScalarModel M>
MonotonicityCondition mixture_monotonicity_condition(std::span<const AnovaExpansion<M>> parts, SubsetIndex z,
                                                     const std::vector<std::vector<double>>& grids,
                                                     double tol = 1e-9) {
  const auto members = z.members();
  if (members.empty() || grids.size() != members.size()) {
    throw std::invalid_argument("monotonicity condition: one grid per member of z");
  }
  std::vector<EffectIncrement> increments;
  for (const auto& ex : parts) {
    // Tabulate w_z and the proper-subset effect sum at every grid node.
    std::vector<std::size_t> idx(members.size(), 0);
    std::vector<std::vector<std::size_t>> nodes;
    std::vector<double> w, lower;
    std::vector<double> x(ex.dim());
    for (std::size_t i = 0; i < ex.dim(); ++i) x[i] = ex.measure()[i].mean();
    for (;;) {
      for (std::size_t c = 0; c < members.size(); ++c) x[members[c]] = grids[c][idx[c]];
      const auto table = ex.effect_table(z, x);
      double sum_lower = 0.0;
      for (std::size_t k = 0; k + 1 < table.size(); ++k) sum_lower += table[k].second;
      nodes.push_back(idx);
      w.push_back(sum_lower + table.back().second);
      lower.push_back(sum_lower);
      std::size_t c = 0;
      while (c < members.size() && ++idx[c] == grids[c].size()) idx[c++] = 0;
      if (c == members.size()) break;
    }
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      for (std::size_t b = 0; b < nodes.size(); ++b) {
        if (a == b) continue;
        bool le = true;
        for (std::size_t c = 0; c < members.size(); ++c) le = le && nodes[a][c] <= nodes[b][c];
        if (le) increments.push_back({w[b] - w[a], lower[b] - lower[a]});
      }
    }
  }
  return mixture_monotonicity_condition(increments, tol);
}

}  // namespace rgsa
