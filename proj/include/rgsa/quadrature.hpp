#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/random/sobol.hpp>

#include "rgsa/matrix.hpp"
#include "rgsa/rng.hpp"

namespace rgsa {

/// A one-dimensional quadrature rule. Nodes are ascending.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) acc += weights[k] * f(nodes[k]);
    return acc;
  }
};

/// Gauss-Legendre nodes and weights on [-1, 1] (weights sum to 2).
inline Rule gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  Rule rule{std::vector<double>(n), std::vector<double>(n)};
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
      }
      pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Gauss-Legendre rule mapped to [lo, hi] with Lebesgue weights.
inline Rule gauss_legendre(std::size_t n, double lo, double hi) {
  Rule rule = gauss_legendre(n);
  const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  for (std::size_t k = 0; k < n; ++k) {
    rule.nodes[k] = mid + half * rule.nodes[k];
    rule.weights[k] *= half;
  }
  return rule;
}

/// Gauss-Hermite rule for the standard normal density: integrates
/// E[f(Z)], Z ~ N(0,1). Weights sum to 1.
inline Rule gauss_hermite(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_hermite: n must be positive");
  // Newton iteration on orthonormal Hermite functions (physicists' weight).
  const double pim4 = 0.7511255444649425;  // pi^(-1/4)
  std::vector<double> x(n), w(n);
  const std::size_t half = (n + 1) / 2;
  const double dn = static_cast<double>(n);
  double z = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * dn + 1.0) - 1.85575 * std::pow(2.0 * dn + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(dn, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      double p1 = pim4, p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double dj = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / (dj + 1.0)) * p2 - std::sqrt(dj / (dj + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * dn) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  Rule rule{std::vector<double>(n), std::vector<double>(n)};
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  for (std::size_t k = 0; k < n; ++k) {
    // x[] is descending; store ascending.
    rule.nodes[k] = std::numbers::sqrt2 * x[n - 1 - k];
    rule.weights[k] = w[n - 1 - k] * inv_sqrt_pi;
  }
  return rule;
}

/// `count` points of a digitally shifted Sobol sequence in `dim` dimensions,
/// mapped to the open unit cube. The shift is drawn from `seed`.
inline Matrix scrambled_sobol(std::size_t count, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("scrambled_sobol: dim must be positive");
  boost::random::sobol engine(static_cast<unsigned>(dim));
  RandomStream shifts(seed, "sobol-shift");
  std::vector<std::uint64_t> shift(dim);
  for (auto& s : shift) s = shifts.bits();
  Matrix points(count, dim);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const std::uint64_t v = static_cast<std::uint64_t>(engine()) ^ shift[j];
      points(i, j) = (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
    }
  }
  return points;
}

}  // namespace rgsa
