#pragma once

// Monte Carlo estimators of first-order and total Sobol indices from model
// runs: brute-force double loop, pick-and-freeze, given-data binning, and
// importance reweighting of one sample towards another product measure.
//
// All sampling goes through per-block RandomStreams keyed by (seed, tag,
// block), so estimates do not depend on the number of workers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rgsa/error.hpp"
#include "rgsa/matrix.hpp"
#include "rgsa/measures.hpp"
#include "rgsa/model.hpp"
#include "rgsa/rng.hpp"

namespace rgsa {

/// Upper clamp for reported index estimates; raw values are kept alongside.
inline constexpr double index_clamp_max = 1.05;

inline double clamp_index(double v) { return std::clamp(v, 0.0, index_clamp_max); }

struct EvaluatedSample {
  Matrix inputs;
  std::vector<double> outputs;
  std::string measure_tag;
  std::uint64_t seed = 0;

  std::size_t size() const { return outputs.size(); }
  std::size_t dim() const { return inputs.cols; }

  void validate() const {
    if (outputs.size() < 2) throw DataError("sample needs at least 2 runs");
    if (inputs.rows != outputs.size()) throw DataError("sample inputs and outputs differ in length");
    for (double y : outputs) {
      if (!std::isfinite(y)) throw DataError("sample contains a non-finite output");
    }
  }
};

struct WeightedSample {
  EvaluatedSample sample;
  std::vector<double> weights;
  bool low_ess = false;

  double effective_size() const {
    double s = 0.0, s2 = 0.0;
    for (double w : weights) {
      s += w;
      s2 += w * w;
    }
    return s2 > 0.0 ? s * s / s2 : 0.0;
  }

  void validate() const {
    sample.validate();
    if (weights.size() != sample.size()) throw DataError("one weight per run is required");
    double s = 0.0;
    for (double w : weights) {
      if (!std::isfinite(w) || w < 0.0) throw DataError("weights must be finite and non-negative");
      s += w;
    }
    if (!(s > 0.0)) throw DataError("all weights are zero");
  }
};

inline WeightedSample unit_weights(EvaluatedSample s) {
  std::vector<double> w(s.size(), 1.0);
  return {std::move(s), std::move(w), false};
}

/// Runs the model on `count` draws from `measure`.
template <ScalarModel M>
EvaluatedSample evaluate(const M& model, const ProductMeasure& measure, std::size_t count,
                         std::uint64_t seed, unsigned workers = 1, std::string tag = {}) {
  EvaluatedSample out{sample(measure, count, seed, workers), std::vector<double>(count), std::move(tag), seed};
  const std::size_t blocks = (count + stream_block - 1) / stream_block;
  parallel_for(blocks, workers, [&](std::size_t b) {
    const std::size_t end = std::min(count, (b + 1) * stream_block);
    for (std::size_t r = b * stream_block; r < end; ++r) out.outputs[r] = model(out.inputs.row(r));
  });
  for (double y : out.outputs) {
    if (!std::isfinite(y)) throw NumericError("model returned a non-finite value");
  }
  return out;
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Self-normalized weighted mean and variance about it.
inline Moments weighted_moments(const WeightedSample& ws) {
  const auto& y = ws.sample.outputs;
  if (ws.weights.size() != y.size()) throw DataError("one weight per run is required");
  double sw = 0.0, swy = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    sw += ws.weights[k];
    swy += ws.weights[k] * y[k];
  }
  if (!(sw > 0.0)) throw DataError("all weights are zero");
  Moments m{swy / sw, 0.0};
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (ws.weights[k] == 0.0) continue;
    const double d = y[k] - m.mean;
    m.variance += ws.weights[k] * d * d;
  }
  m.variance /= sw;
  return m;
}

struct IndexEstimate {
  double first = 0.0;                 // raw
  double first_se = 0.0;
  std::optional<double> total;        // raw
  std::optional<double> total_se;
};

struct EstimateReport {
  std::string method;
  std::vector<IndexEstimate> indices;
  double mean = 0.0;
  double variance = 0.0;
  std::size_t evaluations = 0;
  std::optional<double> effective_size;
  std::vector<std::string> warnings;
};

namespace detail {

inline void require_variance(double variance, double mean, std::string_view what) {
  if (!(variance > 1e-12 * std::max(1.0, mean * mean))) {
    throw ZeroVarianceError(std::string(what) + ": output variance is zero, indices are undefined");
  }
}

inline double sample_mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Brute force

/// First-order indices by the double loop: for each input i, `n_outer` values
/// of X_i, each paired with `n_inner` draws of the other inputs. S_i is the
/// variance of the inner means over the variance of the same n_outer * n_inner
/// runs (both without small-sample correction). Cost is n * n_outer * n_inner
/// evaluations.
template <ScalarModel M>
EstimateReport brute_force_indices(const M& model, const ProductMeasure& measure, std::size_t n_outer,
                                   std::size_t n_inner, std::uint64_t seed, unsigned workers = 1) {
  if (n_outer < 2 || n_inner < 2) throw std::invalid_argument("brute force needs n_outer, n_inner >= 2");
  const std::size_t n = measure.dim();
  EstimateReport rep;
  rep.method = "bruteforce";
  rep.evaluations = n * n_outer * n_inner;
  // Per outer draw: inner mean and inner sum of squared deviations.
  std::vector<double> cond(n * n_outer), spread(n * n_outer);
  parallel_for(n * n_outer, workers, [&](std::size_t job) {
    const std::size_t i = job / n_outer;
    RandomStream rng(seed, "bruteforce", job);
    std::vector<double> x(n), y(n_inner);
    const double xi = measure[i].quantile(rng.uniform());
    for (std::size_t k = 0; k < n_inner; ++k) {
      for (std::size_t j = 0; j < n; ++j) x[j] = j == i ? xi : measure[j].quantile(rng.uniform());
      y[k] = model(std::span<const double>(x));
      if (!std::isfinite(y[k])) throw NumericError("model returned a non-finite value");
    }
    const double m = detail::sample_mean(y);
    double ss = 0.0;
    for (double v : y) ss += (v - m) * (v - m);
    cond[job] = m;
    spread[job] = ss;
  });
  const double no = static_cast<double>(n_outer), ni = static_cast<double>(n_inner);
  double pooled_mean = 0.0, pooled_second = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> c(cond.data() + i * n_outer, n_outer);
    const double cm = detail::sample_mean(c);
    double between = 0.0, m4 = 0.0, within = 0.0;
    for (std::size_t o = 0; o < n_outer; ++o) {
      const double d = (c[o] - cm) * (c[o] - cm);
      between += d;
      m4 += d * d;
      within += spread[i * n_outer + o];
    }
    between /= no;
    m4 /= no;
    const double total = between + within / (no * ni);
    pooled_mean += cm / static_cast<double>(n);
    pooled_second += (total + cm * cm) / static_cast<double>(n);
    detail::require_variance(total, cm, "brute force");
    IndexEstimate e;
    e.first = between / total;
    e.first_se = std::sqrt(std::max(0.0, m4 - between * between) / no) / total;
    rep.indices.push_back(e);
  }
  rep.mean = pooled_mean;
  rep.variance = std::max(0.0, pooled_second - pooled_mean * pooled_mean);
  return rep;
}

// ---------------------------------------------------------------------------
// Pick and freeze

/// First and total indices from base matrices A, B and the n hybrids A_B^i
/// (A with column i taken from B): N(n+2) evaluations.
/// S_i = Cov(f(B), f(A_B^i)) / V, ST_i = mean((f(A) - f(A_B^i))^2) / (2V).
template <ScalarModel M>
EstimateReport pick_freeze_indices(const M& model, const ProductMeasure& measure, std::size_t count,
                                   std::uint64_t seed, unsigned workers = 1) {
  if (count < 16) throw std::invalid_argument("pick-and-freeze needs N >= 16");
  const std::size_t n = measure.dim();
  const Matrix a = sample(measure, count, seed ^ 0xa5a5'0001ull, workers);
  const Matrix b = sample(measure, count, seed ^ 0x5a5a'0002ull, workers);
  std::vector<double> fa(count), fb(count);
  std::vector<double> fab(n * count);
  const std::size_t blocks = (count + stream_block - 1) / stream_block;
  parallel_for(blocks, workers, [&](std::size_t blk) {
    std::vector<double> x(n);
    const std::size_t end = std::min(count, (blk + 1) * stream_block);
    for (std::size_t r = blk * stream_block; r < end; ++r) {
      fa[r] = model(a.row(r));
      fb[r] = model(b.row(r));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) x[j] = j == i ? b(r, j) : a(r, j);
        fab[i * count + r] = model(std::span<const double>(x));
      }
    }
  });
  for (double y : fa) if (!std::isfinite(y)) throw NumericError("model returned a non-finite value");
  for (double y : fb) if (!std::isfinite(y)) throw NumericError("model returned a non-finite value");
  for (double y : fab) if (!std::isfinite(y)) throw NumericError("model returned a non-finite value");

  EstimateReport rep;
  rep.method = "pickfreeze";
  rep.evaluations = count * (n + 2);
  const double N = static_cast<double>(count);
  double mean = 0.0;
  for (std::size_t r = 0; r < count; ++r) mean += fa[r] + fb[r];
  mean /= 2.0 * N;
  double var = 0.0;
  for (std::size_t r = 0; r < count; ++r) {
    var += (fa[r] - mean) * (fa[r] - mean) + (fb[r] - mean) * (fb[r] - mean);
  }
  var /= 2.0 * N - 1.0;
  rep.mean = mean;
  rep.variance = var;
  detail::require_variance(var, mean, "pick-and-freeze");

  const double mb = detail::sample_mean(fb);
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> h(fab.data() + i * count, count);
    const double mh = detail::sample_mean(h);
    double s1 = 0.0, s1sq = 0.0, st = 0.0, stsq = 0.0;
    for (std::size_t r = 0; r < count; ++r) {
      const double c = (fb[r] - mb) * (h[r] - mh);
      s1 += c;
      s1sq += c * c;
      const double d = 0.5 * (fa[r] - h[r]) * (fa[r] - h[r]);
      st += d;
      stsq += d * d;
    }
    const double c_mean = s1 / N, d_mean = st / N;
    IndexEstimate e;
    e.first = s1 / (N - 1.0) / var;
    e.first_se = std::sqrt(std::max(0.0, s1sq / N - c_mean * c_mean) / N) / var;
    e.total = d_mean / var;
    e.total_se = std::sqrt(std::max(0.0, stsq / N - d_mean * d_mean) / N) / var;
    rep.indices.push_back(e);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Given data

inline std::size_t default_bins(const WeightedSample& ws) {
  return static_cast<std::size_t>(std::floor(std::sqrt(ws.effective_size())));
}

namespace detail {

// Bin assignment by weighted quantiles of column i. Runs with tied x values
// form one group, placed by the weighted mid-rank of the group.
inline std::vector<std::size_t> quantile_bins(const WeightedSample& ws, std::size_t i, std::size_t bins) {
  const auto& x = ws.sample.inputs;
  const std::size_t N = ws.sample.size();
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) { return x(p, i) < x(q, i); });
  if (x(order.front(), i) == x(order.back(), i)) {
    throw DataError("given-data: input x" + std::to_string(i + 1) + " takes a single value");
  }
  const double total = std::accumulate(ws.weights.begin(), ws.weights.end(), 0.0);
  std::vector<std::size_t> bin(N);
  double before = 0.0;
  for (std::size_t k = 0; k < N;) {
    std::size_t end = k;
    double group = 0.0;
    while (end < N && x(order[end], i) == x(order[k], i)) group += ws.weights[order[end++]];
    const double mid = (before + 0.5 * group) / total * static_cast<double>(bins);
    const auto b = std::min(bins - 1, static_cast<std::size_t>(mid));
    for (; k < end; ++k) bin[order[k]] = b;
    before += group;
  }
  return bin;
}

inline double binned_first_order(const WeightedSample& ws, std::span<const double> weights,
                                 std::span<const std::size_t> bin, std::size_t bins) {
  const auto& y = ws.sample.outputs;
  std::vector<double> bw(bins, 0.0), by(bins, 0.0);
  double sw = 0.0, swy = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    bw[bin[r]] += weights[r];
    by[bin[r]] += weights[r] * y[r];
    sw += weights[r];
    swy += weights[r] * y[r];
  }
  const double mean = swy / sw;
  double var = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) var += weights[r] * (y[r] - mean) * (y[r] - mean);
  var /= sw;
  require_variance(var, mean, "given-data");
  double between = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (bw[b] > 0.0) {
      const double d = by[b] / bw[b] - mean;
      between += bw[b] * d * d;
    }
  }
  return between / sw / var;
}

}  // namespace detail

/// S_i as the between-bin variance of weighted conditional means over the
/// weighted total variance, with `bins` weighted-quantile bins of X_i.
inline double given_data_first_order(const WeightedSample& ws, std::size_t i, std::size_t bins = 0) {
  ws.validate();
  if (i >= ws.sample.dim()) throw std::out_of_range("given-data: input index");
  if (bins == 0) bins = default_bins(ws);
  if (bins < 2) throw ConfigError("given-data: at least 2 bins are required");
  if (ws.sample.size() < 5 * bins) throw ConfigError("given-data: need at least 5 runs per bin");
  const auto bin = detail::quantile_bins(ws, i, bins);
  return detail::binned_first_order(ws, ws.weights, bin, bins);
}

inline double given_data_first_order(const EvaluatedSample& s, std::size_t i, std::size_t bins = 0) {
  return given_data_first_order(unit_weights(s), i, bins);
}

/// Given-data S_i for every input with bootstrap standard errors. Bins are
/// fixed from the full sample; replicates resample runs with replacement.
inline EstimateReport given_data_indices(const WeightedSample& ws, std::size_t bins = 0,
                                         std::size_t replicates = 200, std::uint64_t seed = 0) {
  ws.validate();
  if (bins == 0) bins = default_bins(ws);
  if (bins < 2) throw ConfigError("given-data: at least 2 bins are required");
  if (ws.sample.size() < 5 * bins) throw ConfigError("given-data: need at least 5 runs per bin");
  EstimateReport rep;
  rep.method = "givendata";
  rep.evaluations = ws.sample.size();
  const auto mom = weighted_moments(ws);
  rep.mean = mom.mean;
  rep.variance = mom.variance;
  const double ess = ws.effective_size();
  rep.effective_size = ess;
  const std::size_t N = ws.sample.size();
  std::vector<std::vector<double>> boot_weights(replicates, std::vector<double>(N, 0.0));
  for (std::size_t b = 0; b < replicates; ++b) {
    RandomStream rng(seed, "givendata-bootstrap", b);
    for (std::size_t k = 0; k < N; ++k) boot_weights[b][rng.below(N)] += 1.0;
    for (std::size_t k = 0; k < N; ++k) boot_weights[b][k] *= ws.weights[k];
  }
  for (std::size_t i = 0; i < ws.sample.dim(); ++i) {
    const auto bin = detail::quantile_bins(ws, i, bins);
    IndexEstimate e;
    e.first = detail::binned_first_order(ws, ws.weights, bin, bins);
    if (replicates >= 2) {
      double s = 0.0, s2 = 0.0;
      std::size_t used = 0;
      for (const auto& w : boot_weights) {
        double v;
        try {
          v = detail::binned_first_order(ws, w, bin, bins);
        } catch (const ZeroVarianceError&) {
          continue;
        }
        s += v;
        s2 += v * v;
        ++used;
      }
      if (used >= 2) {
        const double m = s / static_cast<double>(used);
        e.first_se = std::sqrt(std::max(0.0, (s2 - used * m * m) / static_cast<double>(used - 1)));
      }
    }
    rep.indices.push_back(e);
  }
  if (ws.low_ess) {
    rep.warnings.push_back("effective sample size " + std::to_string(ess) + " is below the floor");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Reweighting

inline constexpr double default_ess_floor = 50.0;

/// Importance weights w = f_target(x) / f_base(x) for a sample drawn under
/// `base`. Weights are left unnormalized.
inline WeightedSample reweight(const EvaluatedSample& s, const ProductMeasure& base, const ProductMeasure& target,
                               double ess_floor = default_ess_floor, std::string target_tag = {}) {
  s.validate();
  if (base.dim() != s.dim() || target.dim() != s.dim()) throw ConfigError("reweight: dimension mismatch");
  WeightedSample out{s, std::vector<double>(s.size()), false};
  if (!target_tag.empty()) out.sample.measure_tag = std::move(target_tag);
  for (std::size_t r = 0; r < s.size(); ++r) {
    const auto x = s.inputs.row(r);
    const double fb = base.density(x);
    if (!(fb > 0.0)) {
      throw DataError("reweight: base density is zero at run " + std::to_string(r + 1));
    }
    out.weights[r] = target.density(x) / fb;
  }
  double sum = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
  if (!(sum > 0.0)) throw DataError("reweight: target gives zero weight to every run");
  out.low_ess = out.effective_size() < ess_floor;
  return out;
}

/// Whether every component of `target` is supported inside the matching
/// component of `base`, so that reweighting a base sample loses no mass.
inline bool absolutely_continuous(const ProductMeasure& target, const ProductMeasure& base) {
  if (target.dim() != base.dim()) return false;
  for (std::size_t i = 0; i < target.dim(); ++i) {
    const auto& t = target[i];
    const auto& b = base[i];
    if (const auto* td = std::get_if<Discrete>(&t.params())) {
      for (double a : td->atoms) {
        if (!(b.density(a) > 0.0)) return false;
      }
      continue;
    }
    if (b.family() == "discrete") return false;
    const auto ts = t.support(), bs = b.support();
    if (ts.lo < bs.lo || ts.hi > bs.hi) return false;
  }
  return true;
}

}  // namespace rgsa
