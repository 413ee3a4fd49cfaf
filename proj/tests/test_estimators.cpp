#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "rgsa/anova.hpp"
#include "rgsa/estimators.hpp"
#include "rgsa/sample_io.hpp"
#include "rgsa/testbed.hpp"

using namespace rgsa;
using std::numbers::pi;

namespace {

const Ishigami ishi{};

struct Additive {
  double operator()(std::span<const double> x) const { return x[0] + x[1]; }
};
struct OnlyFirst {
  double operator()(std::span<const double> x) const { return x[0]; }
};
struct IgnoresThird {
  double operator()(std::span<const double> x) const { return x[0] + 2 * x[1] * x[1] + x[0] * x[1]; }
};

std::vector<double> quadrature_first(int which) {
  std::vector<double> out;
  for (const auto& p : first_and_total_indices(variance_decomposition(ishi, ishigami_measure(which)))) {
    out.push_back(p.first);
  }
  return out;
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "rgsa_estimator_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Evaluate, DeterministicAcrossWorkers) {
  const auto a = evaluate(ishi, ishigami_measure(1), 3000, 5, 1, "mu1");
  const auto b = evaluate(ishi, ishigami_measure(1), 3000, 5, 8, "mu1");
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.outputs, b.outputs);
  EXPECT_EQ(a.measure_tag, "mu1");
  for (std::size_t r = 0; r < a.size(); ++r) ASSERT_EQ(a.outputs[r], ishi(a.inputs.row(r)));
}

TEST(WeightedMoments, Examples) {
  const auto s = evaluate(ishi, ishigami_measure(2), 500, 1);
  const auto m = weighted_moments(unit_weights(s));
  double mean = 0.0;
  for (double y : s.outputs) mean += y;
  mean /= 500.0;
  double var = 0.0;
  for (double y : s.outputs) var += (y - mean) * (y - mean);
  var /= 500.0;
  EXPECT_NEAR(m.mean, mean, 1e-12);
  EXPECT_NEAR(m.variance, var, 1e-10);

  WeightedSample single = unit_weights(s);
  std::fill(single.weights.begin(), single.weights.end(), 0.0);
  single.weights[17] = 3.0;
  const auto one = weighted_moments(single);
  EXPECT_EQ(one.mean, s.outputs[17]);
  EXPECT_EQ(one.variance, 0.0);
  single.weights[17] = 0.0;
  EXPECT_THROW(weighted_moments(single), DataError);
}

TEST(WeightedMoments, ReweightedNormalMean) {
  const auto base = ProductMeasure::iid(UnivariateMeasure::normal(0, 1), 1);
  const auto target = ProductMeasure::iid(UnivariateMeasure::normal(1, 1), 1);
  const Model identity("id", 1, [](std::span<const double> x) { return x[0]; });
  const auto s = evaluate(identity, base, 10000, 77);
  EXPECT_NEAR(weighted_moments(reweight(s, base, target)).mean, 1.0, 0.05);
  const auto direct = evaluate(identity, target, 10000, 78);
  EXPECT_NEAR(weighted_moments(unit_weights(direct)).mean, 1.0, 0.05);
}

TEST(Reweight, IdentityTargetGivesUnitWeights) {
  const auto s = evaluate(ishi, ishigami_measure(1), 2000, 3);
  const auto w = reweight(s, ishigami_measure(1), ishigami_measure(1));
  for (double v : w.weights) ASSERT_EQ(v, 1.0);
  EXPECT_EQ(w.weights, unit_weights(s).weights);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(given_data_first_order(w, i), given_data_first_order(s, i));
  }
  const auto a = given_data_indices(w, 0, 20, 9), b = given_data_indices(unit_weights(s), 0, 20, 9);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.indices[i].first, b.indices[i].first);
    EXPECT_EQ(a.indices[i].first_se, b.indices[i].first_se);
  }
}

TEST(Reweight, NarrowerTargetZeroesOutsidePoints) {
  const auto s = evaluate(ishi, ishigami_measure(1), 4000, 4);
  const auto w = reweight(s, ishigami_measure(1), ishigami_measure(3));
  for (std::size_t r = 0; r < s.size(); ++r) {
    const bool inside = ishigami_measure(3).in_support(s.inputs.row(r));
    ASSERT_EQ(w.weights[r] > 0.0, inside);
    if (inside) ASSERT_NEAR(w.weights[r], 8.0, 1e-12);
  }
  EXPECT_NEAR(w.effective_size(), 500.0, 60.0);
  EXPECT_FALSE(w.low_ess);
}

TEST(Reweight, ErrorsAndLowEssFlag) {
  const auto s = evaluate(ishi, ishigami_measure(2), 500, 4);
  EXPECT_THROW(reweight(s, ishigami_measure(3), ishigami_measure(1)), DataError);
  const auto narrow = ProductMeasure::iid(UnivariateMeasure::normal(3, 0.2), 3);
  const auto w = reweight(s, ishigami_measure(2), narrow);
  EXPECT_TRUE(w.low_ess);
  const auto rep = given_data_indices(unit_weights(s), 5, 10, 1);
  EXPECT_TRUE(rep.warnings.empty());
}

TEST(Reweight, AbsoluteContinuity) {
  EXPECT_TRUE(absolutely_continuous(ishigami_measure(3), ishigami_measure(1)));
  EXPECT_TRUE(absolutely_continuous(ishigami_measure(1), ishigami_measure(2)));
  EXPECT_FALSE(absolutely_continuous(ishigami_measure(2), ishigami_measure(1)));
  EXPECT_FALSE(absolutely_continuous(ishigami_measure(1), ishigami_measure(3)));
}

TEST(BruteForce, Examples) {
  const auto add = brute_force_indices(Additive{}, ProductMeasure::iid(UnivariateMeasure::normal(0, 1), 2), 200, 200, 1);
  EXPECT_EQ(add.evaluations, 2u * 200 * 200);
  for (const auto& e : add.indices) EXPECT_NEAR(e.first, 0.5, 0.05);

  const auto rep = brute_force_indices(ishi, ishigami_measure(1), 500, 500, 2);
  EXPECT_NEAR(rep.indices[0].first, 0.31, 0.03);
  EXPECT_NEAR(rep.indices[1].first, 0.44, 0.03);
  EXPECT_NEAR(rep.indices[2].first, 0.00, 0.03);
  for (const auto& e : rep.indices) EXPECT_GT(e.first_se, 0.0);

  const auto one = brute_force_indices(OnlyFirst{}, ishigami_measure(1), 300, 300, 3);
  EXPECT_NEAR(one.indices[0].first, 1.0, 0.02);
  EXPECT_NEAR(one.indices[1].first, 0.0, 0.02);
  EXPECT_NEAR(one.indices[2].first, 0.0, 0.02);

  EXPECT_THROW(brute_force_indices(ishi, ishigami_measure(1), 1, 10, 1), std::invalid_argument);
  const Model flat("flat", 2, [](std::span<const double>) { return 1.0; });
  EXPECT_THROW(brute_force_indices(flat, ProductMeasure::iid(UnivariateMeasure::uniform(0, 1), 2), 10, 10, 1),
               ZeroVarianceError);
}

TEST(PickFreeze, Examples) {
  const auto r1 = pick_freeze_indices(ishi, ishigami_measure(1), 1 << 14, 11);
  EXPECT_EQ(r1.evaluations, (1u << 14) * 5);
  EXPECT_NEAR(r1.indices[0].first, 0.31, 0.03);
  EXPECT_NEAR(r1.indices[1].first, 0.44, 0.03);
  EXPECT_NEAR(r1.indices[2].first, 0.00, 0.03);
  double ds = 0.0;
  for (const auto& e : r1.indices) ds += *e.total;
  EXPECT_NEAR(ds, 1.24, 0.03);

  const auto r2 = pick_freeze_indices(ishi, ishigami_measure(2), 1 << 14, 12);
  EXPECT_NEAR(r2.indices[0].first, 0.10, 0.03);
  EXPECT_NEAR(r2.indices[1].first, 0.84, 0.03);
  EXPECT_NEAR(r2.indices[2].first, 0.00, 0.03);

  const auto r3 = pick_freeze_indices(IgnoresThird{}, ProductMeasure::iid(UnivariateMeasure::uniform(0, 1), 3), 4096, 13);
  EXPECT_NEAR(*r3.indices[2].total, 0.0, 0.02);
  EXPECT_THROW(pick_freeze_indices(ishi, ishigami_measure(1), 8, 1), std::invalid_argument);
}

TEST(GivenData, ReproducesReweightingExample) {
  const auto s = evaluate(ishi, ishigami_measure(1), 10000, 2024, 1, "mu1");
  const std::vector<double> mu1{0.33, 0.45, 0.00};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(given_data_first_order(s, i), mu1[i], 0.02) << i;
  const auto w = reweight(s, ishigami_measure(1), ishigami_measure(2));
  const std::vector<double> mu2{0.11, 0.83, 0.01};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(given_data_first_order(w, i), mu2[i], 0.03) << i;
}

TEST(GivenData, EdgeCases) {
  const auto flat_model = Model("flat", 2, [](std::span<const double>) { return 2.0; });
  const auto box = ProductMeasure::iid(UnivariateMeasure::uniform(0, 1), 2);
  EXPECT_THROW(given_data_first_order(evaluate(flat_model, box, 1000, 1), 0), ZeroVarianceError);

  const auto lin = evaluate(OnlyFirst{}, box, 10000, 2);
  EXPECT_GE(given_data_first_order(lin, 0, 100), 0.95);
  EXPECT_EQ(default_bins(unit_weights(lin)), 100u);

  EXPECT_THROW(given_data_first_order(lin, 0, 1), ConfigError);
  EXPECT_THROW(given_data_first_order(lin, 0, 2001), ConfigError);

  auto tied = lin;
  for (std::size_t r = 0; r < tied.size(); ++r) tied.inputs(r, 1) = 0.5;
  EXPECT_THROW(given_data_first_order(tied, 1, 10), DataError);
}

TEST(GivenData, TiedValuesShareABin) {
  // Discrete input with 4 levels: binning by level is exact.
  const ProductMeasure m({UnivariateMeasure::discrete({0, 1, 2, 3}), UnivariateMeasure::uniform(0, 1)});
  const Model g("g", 2, [](std::span<const double> x) { return x[0] + x[1]; });
  const auto s = evaluate(g, m, 8000, 3);
  const double s1 = given_data_first_order(s, 0, 4);
  EXPECT_NEAR(s1, 1.25 / (1.25 + 1.0 / 12), 0.02);
}

TEST(Estimators, ConsistentWithQuadrature) {
  const std::size_t N = 1 << 14;
  const auto base = evaluate(ishi, ishigami_measure(1), N, 99, 1, "mu1");
  for (int which : {1, 2, 3}) {
    const auto exact = quadrature_first(which);
    const auto m = ishigami_measure(which);
    const auto bf = brute_force_indices(ishi, m, 1 << 12, 1 << 7, 100 + which);
    const auto pf = pick_freeze_indices(ishi, m, N, 200 + which);
    const auto gd = given_data_indices(unit_weights(evaluate(ishi, m, N, 300 + which)), 0, 0);
    const auto rw = given_data_indices(reweight(base, ishigami_measure(1), m), 0, 0);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(bf.indices[i].first, exact[i], 0.03) << "bruteforce mu" << which << " x" << i + 1;
      EXPECT_NEAR(pf.indices[i].first, exact[i], 0.03) << "pickfreeze mu" << which << " x" << i + 1;
      EXPECT_NEAR(gd.indices[i].first, exact[i], 0.03) << "givendata mu" << which << " x" << i + 1;
      EXPECT_NEAR(rw.indices[i].first, exact[i], 0.03) << "reweight mu" << which << " x" << i + 1;
      EXPECT_GE(*pf.indices[i].total, pf.indices[i].first - 0.02);
    }
  }
}

TEST(Estimators, DeterministicAcrossWorkers) {
  const auto a = pick_freeze_indices(ishi, ishigami_measure(1), 3000, 4, 1);
  const auto b = pick_freeze_indices(ishi, ishigami_measure(1), 3000, 4, 8);
  const auto c = brute_force_indices(ishi, ishigami_measure(1), 50, 50, 4, 1);
  const auto d = brute_force_indices(ishi, ishigami_measure(1), 50, 50, 4, 8);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.indices[i].first, b.indices[i].first);
    EXPECT_EQ(*a.indices[i].total, *b.indices[i].total);
    EXPECT_EQ(c.indices[i].first, d.indices[i].first);
  }
}

TEST(Estimators, ClampKeepsRawValues) {
  EXPECT_EQ(clamp_index(-0.01), 0.0);
  EXPECT_EQ(clamp_index(1.2), index_clamp_max);
  EXPECT_EQ(clamp_index(0.4), 0.4);
}

TEST(SampleIo, RoundTripIsBitExact) {
  const auto s = evaluate(ishi, ishigami_measure(2), 777, 42, 1, "mu2");
  const auto path = (temp_dir() / "roundtrip.csv").string();
  write_sample(s, path);
  const auto back = read_sample(path);
  EXPECT_EQ(back.inputs, s.inputs);
  EXPECT_EQ(back.outputs, s.outputs);
  EXPECT_EQ(back.measure_tag, "mu2");
  EXPECT_EQ(back.seed, 42u);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x1,x2,x3,g");
}

TEST(SampleIo, RejectsMalformedFiles) {
  const auto dir = temp_dir();
  const std::pair<const char*, const char*> cases[] = {
      {"bad_header.csv", "a,b,g\n1,2,3\n"},
      {"no_g.csv", "x1,x2\n1,2\n"},
      {"short_row.csv", "x1,x2,g\n1,2\n"},
      {"text.csv", "x1,x2,g\n1,abc,3\n"},
      {"one_row.csv", "x1,g\n1,2\n"},
      {"nan.csv", "x1,g\n1,2\n2,nan\n"},
  };
  for (const auto& [name, text] : cases) {
    const auto path = (dir / name).string();
    std::ofstream(path) << text;
    EXPECT_THROW(read_sample(path), DataError) << name;
  }
  EXPECT_THROW(read_sample((dir / "missing.csv").string()), DataError);
}
