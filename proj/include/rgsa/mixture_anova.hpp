#pragma once

// ANOVA under a prior over a finite measure set. Mixture effects are the
// prior-weighted per-measure effects, each counted only on its own support.
// The second route mixes conditional expectations and applies inclusion-
// exclusion; both coincide where every component with positive weight
// supports the point.

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rgsa/anova.hpp"
#include "rgsa/error.hpp"
#include "rgsa/measures.hpp"
#include "rgsa/model.hpp"
#include "rgsa/subset.hpp"

namespace rgsa {

struct MixtureEffectValue {
  double value = 0.0;
  bool outside_all_supports = false;
};

template <ScalarModel M>
class MixtureAnova {
 public:
  MixtureAnova(const M& model, MeasureSet set, QuadratureOptions opts = {})
      : set_(std::move(set)), prior_(set_.prior()) {
    parts_.reserve(set_.size());
    for (const auto& m : set_.measures()) parts_.emplace_back(model, m, opts);
  }

  const MeasureSet& set() const { return set_; }
  std::size_t dim() const { return set_.dim(); }
  const AnovaExpansion<M>& component(std::size_t m) const { return parts_.at(m); }

  /// E[G] under the mixture: sum_m p_m g_0^m.
  double constant() const {
    double acc = 0.0;
    for (std::size_t m = 0; m < parts_.size(); ++m) acc += prior_[m] * parts_[m].constant();
    return acc;
  }

  /// sum_m p_m I_m(x_z) g_z^m(x_z). Points outside every support give 0 and
  /// set the flag.
  MixtureEffectValue evaluate(SubsetIndex z, std::span<const double> x) const {
    MixtureEffectValue out{0.0, true};
    for (std::size_t m = 0; m < parts_.size(); ++m) {
      if (!set_[m].in_support(z, x)) continue;
      out.outside_all_supports = false;
      if (prior_[m] == 0.0) continue;
      out.value += prior_[m] * parts_[m].effect(z, x);
    }
    return out;
  }

  double route1(SubsetIndex z, std::span<const double> x) const { return evaluate(z, x).value; }

  /// sum_{v subset z} (-1)^{|z|-|v|} sum_m p_m E_m[G | X_v = x_v]: the
  /// conditional expectation against the mixture marginal of the complement,
  /// with lower-order mixture effects removed.
  double route2(SubsetIndex z, std::span<const double> x) const {
    double acc = 0.0;
    for (auto v : subsets_of(z)) {
      double w = 0.0;
      for (std::size_t m = 0; m < parts_.size(); ++m) {
        if (prior_[m] != 0.0) w += prior_[m] * parts_[m].conditional_expectation(v, x);
      }
      acc += ((z.size() - v.size()) % 2 ? -w : w);
    }
    return acc;
  }

  /// route1 for every subset at once, indexed by subset mask.
  std::vector<double> route1_all(std::span<const double> x) const {
    std::vector<double> out(std::size_t{1} << dim(), 0.0);
    for (std::size_t m = 0; m < parts_.size(); ++m) {
      if (prior_[m] == 0.0) continue;
      const auto eff = parts_[m].effects_at(x);
      for (std::uint32_t mask = 0; mask < out.size(); ++mask) {
        if (set_[m].in_support(SubsetIndex(mask), x)) out[mask] += prior_[m] * eff[mask];
      }
    }
    return out;
  }

  /// route2 for every subset at once: mixed conditional expectations followed
  /// by an in-place subset Moebius transform.
  std::vector<double> route2_all(std::span<const double> x) const {
    const std::size_t n = dim();
    std::vector<double> w(std::size_t{1} << n, 0.0);
    for (std::size_t m = 0; m < parts_.size(); ++m) {
      if (prior_[m] == 0.0) continue;
      for (std::uint32_t mask = 0; mask < w.size(); ++mask) {
        w[mask] += prior_[m] * parts_[m].conditional_expectation(SubsetIndex(mask), x);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t bit = 1u << i;
      for (std::uint32_t mask = 0; mask < w.size(); ++mask) {
        if (mask & bit) w[mask] -= w[mask ^ bit];
      }
    }
    return w;
  }

  /// Integral of the mixture effect against the mixture marginal of X_z.
  /// Zero for a single measure; generally nonzero when supports differ.
  /// Each component marginal is integrated with rules split at all support
  /// endpoints, so the indicator jumps fall on segment boundaries.
  double orthogonality_defect(SubsetIndex z, std::size_t points = 64) const {
    if (z.empty()) throw std::invalid_argument("orthogonality_defect: empty subset");
    const auto members = z.members();
    std::vector<std::vector<double>> breaks;
    for (auto i : members) breaks.push_back(support_breakpoints(set_, i));
    std::vector<double> x(dim());
    for (std::size_t i = 0; i < dim(); ++i) x[i] = set_[0][i].mean();
    double total = 0.0;
    for (std::size_t k = 0; k < parts_.size(); ++k) {
      if (prior_[k] == 0.0) continue;
      std::vector<Rule> rules;
      for (std::size_t c = 0; c < members.size(); ++c) {
        rules.push_back(set_[k][members[c]].piecewise_rule(breaks[c], points));
      }
      std::vector<std::size_t> idx(members.size(), 0);
      double acc = 0.0;
      for (;;) {
        double w = 1.0;
        for (std::size_t c = 0; c < members.size(); ++c) {
          x[members[c]] = rules[c].nodes[idx[c]];
          w *= rules[c].weights[idx[c]];
        }
        if (w != 0.0) acc += w * route1(z, x);
        std::size_t c = 0;
        while (c < members.size() && ++idx[c] == rules[c].size()) idx[c++] = 0;
        if (c == members.size()) break;
      }
      total += prior_[k] * acc;
    }
    return total;
  }

  /// First-order mixture effect of input i on `grid`.
  EffectCurve first_order_curve(std::size_t i, std::vector<double> grid) const {
    std::vector<double> x(dim());
    for (std::size_t k = 0; k < dim(); ++k) x[k] = set_[0][k].mean();
    EffectCurve curve{SubsetIndex::singleton(i), std::move(grid), {}, "mixture"};
    for (double g : curve.grid) {
      x[i] = g;
      curve.values.push_back(route1(curve.subset, x));
    }
    curve.validate();
    return curve;
  }

 private:
  MeasureSet set_;
  std::vector<double> prior_;
  std::vector<AnovaExpansion<M>> parts_;
};

// ---------------------------------------------------------------------------
// Two-term variance split

struct MixtureVarianceReport {
  std::map<SubsetIndex, double> structural_terms;  // B_z = sum_m p_m V_z^m (raw)
  double structural = 0.0;                         // sum_z B_z
  double variability = 0.0;                        // sum_m p_m (g_0^m - mean)^2
  double mean = 0.0;                               // sum_m p_m g_0^m
  double total = 0.0;                              // V[G] under the mixture
  double residual = 0.0;                           // prior-weighted unlisted orders

  double share() const { return total > 0.0 ? structural / total : 0.0; }
  double term(SubsetIndex z) const {
    const auto it = structural_terms.find(z);
    return it == structural_terms.end() ? 0.0 : std::max(0.0, it->second);
  }
};

inline MixtureVarianceReport mixture_variance_decomposition(const MeasureSet& set,
                                                            std::span<const VarianceDecomposition> vds) {
  const auto& prior = set.prior();
  if (vds.size() != set.size()) throw std::invalid_argument("one decomposition per measure is required");
  MixtureVarianceReport rep;
  for (std::size_t m = 0; m < set.size(); ++m) rep.mean += prior[m] * vds[m].mean;
  for (std::size_t m = 0; m < set.size(); ++m) {
    const double d = vds[m].mean - rep.mean;
    rep.variability += prior[m] * d * d;
    rep.total += prior[m] * (vds[m].total + d * d);
    rep.residual += prior[m] * vds[m].residual();
    for (const auto& [z, v] : vds[m].terms) rep.structural_terms[z] += prior[m] * v;
  }
  for (const auto& [z, b] : rep.structural_terms) rep.structural += b;
  return rep;
}

template <ScalarModel M>
MixtureVarianceReport mixture_variance_decomposition(const M& model, const MeasureSet& set,
                                                     std::size_t max_order = 0, QuadratureOptions opts = {}) {
  set.prior();
  std::vector<VarianceDecomposition> vds;
  for (std::size_t m = 0; m < set.size(); ++m) {
    vds.push_back(variance_decomposition(model, set[m], max_order, opts, set.name(m)));
  }
  return mixture_variance_decomposition(set, vds);
}

}  // namespace rgsa
