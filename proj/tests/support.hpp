#pragma once

// Shared generators and oracles for the unit and acceptance suites.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <limits>
#include <numbers>
#include <vector>

#include "rgsa/measures.hpp"
#include "rgsa/rng.hpp"
#include "rgsa/subset.hpp"
#include "rgsa/testbed.hpp"

namespace rgsa::fixtures {

/// A random composite-multilinear model on n inputs: each factor is a
/// quadratic, a scaled sine or a mild exponential; 3 distinct nonempty terms.
inline CompositeMultilinearModel random_multilinear(RandomStream& rng, std::size_t n = 3) {
  std::vector<Factor> factors;
  for (std::size_t i = 0; i < n; ++i) {
    switch (rng.below(3)) {
      case 0:
        factors.push_back(Factor::polynomial({rng.uniform() * 2 - 1, rng.uniform() * 2 - 1, rng.uniform() * 2 - 1}));
        break;
      case 1: factors.push_back(Factor::sine(0.5 + 2 * rng.uniform())); break;
      default: factors.push_back(Factor::exponential(0.5 + rng.uniform(), rng.uniform() - 0.5)); break;
    }
  }
  const std::uint32_t full = (1u << n) - 1;
  std::vector<SubsetIndex> terms;
  while (terms.size() < 3) {
    const SubsetIndex u(static_cast<std::uint32_t>(1 + rng.below(full)));
    bool fresh = true;
    for (auto t : terms) fresh = fresh && !(t == u);
    if (fresh) terms.push_back(u);
  }
  return CompositeMultilinearModel(std::move(factors), std::move(terms));
}

/// Three product measures on n inputs whose supports all contain [0, 1]:
/// two uniform families with random endpoints and one normal family.
inline MeasureSet random_overlapping_set(RandomStream& rng, std::size_t n = 3) {
  std::vector<ProductMeasure> ms;
  for (int m = 0; m < 2; ++m) {
    std::vector<UnivariateMeasure> c;
    for (std::size_t i = 0; i < n; ++i) {
      c.push_back(UnivariateMeasure::uniform(-rng.uniform(), 1.0 + rng.uniform()));
    }
    ms.emplace_back(std::move(c));
  }
  std::vector<UnivariateMeasure> c;
  for (std::size_t i = 0; i < n; ++i) {
    c.push_back(UnivariateMeasure::normal(rng.uniform(), 0.5 + 0.5 * rng.uniform()));
  }
  ms.emplace_back(std::move(c));
  const double p0 = 0.2 + 0.3 * rng.uniform(), p1 = 0.2 + 0.3 * rng.uniform();
  return MeasureSet(std::move(ms), {}, std::vector{p0, p1, 1.0 - p0 - p1});
}

/// Integral of the Ishigami first-order mixture effect of x_{i+1} against the
/// mixture marginal of x_{i+1}, computed from the closed-form effects with
/// adaptive Gauss-Kronrod on the pieces between support endpoints.
inline double ishigami_mixture_defect_oracle(std::size_t i, std::span<const double> prior) {
  using boost::math::quadrature::gauss_kronrod;
  using std::numbers::pi;
  const Ishigami g{};
  const auto set = ishigami_measure_set(std::vector<double>(prior.begin(), prior.end()));
  const auto z = SubsetIndex::singleton(i);
  auto integrand = [&](double t) {
    std::vector<double> x{0.0, 0.0, 0.0};
    x[i] = t;
    double marginal = 0.0;
    for (std::size_t m = 0; m < 3; ++m) marginal += prior[m] * set[m][i].density(t);
    return marginal * ishigami_mixture_effect(g, prior, z, x);
  };
  const double inf = std::numeric_limits<double>::infinity();
  const double cuts[] = {-inf, -pi, 0.0, pi, inf};
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    total += gauss_kronrod<double, 61>::integrate(integrand, cuts[k], cuts[k + 1], 15, 1e-14);
  }
  return total;
}

// Closed variances Var(E[G | X_u]) by exhaustive enumeration of a finite grid,
// then V_z by inclusion-exclusion over u subset of z.
inline std::map<SubsetIndex, double> enumerate_terms(const std::function<double(std::span<const double>)>& g,
                                                     const std::vector<std::vector<double>>& levels) {
  const std::size_t n = levels.size();
  std::vector<std::vector<double>> points;
  std::vector<std::size_t> idx(n, 0);
  for (;;) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = levels[i][idx[i]];
    points.push_back(x);
    std::size_t i = 0;
    while (i < n && ++idx[i] == levels[i].size()) idx[i++] = 0;
    if (i == n) break;
  }
  const double count = static_cast<double>(points.size());
  double mean = 0.0;
  for (const auto& p : points) mean += g(p);
  mean /= count;
  std::map<SubsetIndex, double> closed;
  for (auto u : all_subsets(n, n)) {
    std::map<std::vector<double>, std::pair<double, double>> groups;  // key -> (sum, count)
    for (const auto& p : points) {
      std::vector<double> key;
      for (auto i : u.members()) key.push_back(p[i]);
      auto& cell = groups[key];
      cell.first += g(p);
      cell.second += 1.0;
    }
    double v = 0.0;
    for (const auto& [key, cell] : groups) {
      const double cm = cell.first / cell.second;
      v += cell.second / count * (cm - mean) * (cm - mean);
    }
    closed[u] = v;
  }
  std::map<SubsetIndex, double> terms;
  for (auto z : all_subsets(n, n)) {
    double v = 0.0;
    for (auto u : subsets_of(z, false)) v += ((z.size() - u.size()) % 2 ? -1.0 : 1.0) * closed.at(u);
    terms[z] = v;
  }
  return terms;
}

/// x^T a x + b^T x on three inputs.
struct Quadratic {
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  double operator()(std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      acc += b[i] * x[i];
      for (std::size_t j = 0; j < x.size(); ++j) acc += a[i][j] * x[i] * x[j];
    }
    return acc;
  }
};

// Diagonally dominant, hence positive semidefinite. With `negative_cross` one
// off-diagonal pair is made negative.
inline Quadratic dominant_quadratic(RandomStream& rng, bool negative_cross) {
  Quadratic q{std::vector<std::vector<double>>(3, std::vector<double>(3, 0.0)), {}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) q.a[i][j] = q.a[j][i] = 0.1 + rng.uniform();
  if (negative_cross) {
    const std::size_t i = rng.below(3), j = (i + 1 + rng.below(2)) % 3;
    q.a[i][j] = q.a[j][i] = -q.a[i][j];
  }
  for (std::size_t i = 0; i < 3; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 3; ++j) row += i == j ? 0.0 : std::abs(q.a[i][j]);
    q.a[i][i] = row + rng.uniform();
  }
  for (int i = 0; i < 3; ++i) q.b.push_back(rng.uniform() * 2 - 1);
  return q;
}

inline bool analytic_ultramodular(const Quadratic& q) {
  for (const auto& row : q.a)
    for (double v : row)
      if (v < 0.0) return false;
  return true;
}

}  // namespace rgsa::fixtures
