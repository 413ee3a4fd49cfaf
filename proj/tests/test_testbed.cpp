#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rgsa/testbed.hpp"

using namespace rgsa;
using std::numbers::pi;

namespace {

const Ishigami ishi{};
const std::vector<double> third{1.0 / 3, 1.0 / 3, 1.0 / 3};

std::vector<double> random_point(RandomStream& rng, double lo, double hi) {
  return {lo + (hi - lo) * rng.uniform(), lo + (hi - lo) * rng.uniform(), lo + (hi - lo) * rng.uniform()};
}

// E over one coordinate of a closed-form effect, by quadrature on that marginal.
double marginal_integral(IshigamiMeasure m, SubsetIndex z, std::vector<double> x, std::size_t i) {
  return ishigami_measure(m)[i].rule(64).integrate([&](double t) {
    x[i] = t;
    return ishigami_effect(ishi, m, z, x);
  });
}

}  // namespace

TEST(Ishigami, Evaluation) {
  EXPECT_NEAR(ishi(std::vector{pi / 2, 0.0, 0.0}), 1.0, 1e-15);
  EXPECT_NEAR(ishi(std::vector{0.0, pi / 2, 0.0}), 7.0, 1e-15);
  EXPECT_NEAR(ishi(std::vector{pi / 2, pi / 2, pi}), 1 + 0.1 * std::pow(pi, 4) + 7, 1e-12);
  EXPECT_NEAR(ishi(std::vector{pi / 2, pi / 2, pi}), 17.7409, 1e-4);
}

TEST(Ishigami, ClosedFormEffects) {
  const auto mid = std::vector{pi / 2, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(ishigami_effect(ishi, IshigamiMeasure::mu1, {}, mid), 3.5);
  EXPECT_NEAR(ishigami_effect(ishi, IshigamiMeasure::mu2, SubsetIndex::singleton(0), mid), 1.3, 1e-15);
  EXPECT_NEAR(ishigami_effect(ishi, IshigamiMeasure::mu3, SubsetIndex::singleton(2), std::vector{0.0, 0.0, 0.0}),
              -1.2402, 1e-4);
  EXPECT_NEAR(ishigami_effect(ishi, IshigamiMeasure::mu1, SubsetIndex::singleton(0), mid),
              1 + 0.1 * std::pow(pi, 4) / 5, 1e-14);
  EXPECT_EQ(ishigami_effect(ishi, IshigamiMeasure::mu1, SubsetIndex::singleton(2), mid), 0.0);
  EXPECT_EQ(ishigami_effect(ishi, IshigamiMeasure::mu1, SubsetIndex::of({0, 1}), mid), 0.0);
  EXPECT_THROW(ishigami_effect(ishi, IshigamiMeasure::mu3, SubsetIndex::singleton(0), std::vector{-1.0, 0.0, 0.0}),
               std::domain_error);
}

TEST(Ishigami, ReconstructionPerMeasure) {
  RandomStream rng(1, "recon");
  for (auto m : {IshigamiMeasure::mu1, IshigamiMeasure::mu2, IshigamiMeasure::mu3}) {
    const double lo = m == IshigamiMeasure::mu3 ? 0.0 : -pi;
    for (int k = 0; k < 200; ++k) {
      const auto x = random_point(rng, lo, pi);
      double sum = 0.0;
      for (auto z : subsets_of(SubsetIndex::full(3))) sum += ishigami_effect(ishi, m, z, x);
      ASSERT_NEAR(sum, ishi(x), 1e-10);
    }
  }
}

TEST(Ishigami, EffectsAnnihilateAndAreOrthogonal) {
  RandomStream rng(2, "annih");
  for (auto m : {IshigamiMeasure::mu1, IshigamiMeasure::mu2, IshigamiMeasure::mu3}) {
    const double lo = m == IshigamiMeasure::mu3 ? 0.0 : -pi;
    const auto x = random_point(rng, lo, pi);
    for (auto z : all_subsets(3, 3)) {
      for (auto i : z.members()) EXPECT_NEAR(marginal_integral(m, z, x, i), 0.0, 1e-8) << z.label();
    }
    // E[g_z g_z'] = 0 for z != z' by tensor quadrature
    const auto measure = ishigami_measure(m);
    const Rule r0 = measure[0].rule(64), r1 = measure[1].rule(64), r2 = measure[2].rule(64);
    const auto subsets = all_subsets(3, 3);
    for (std::size_t a = 0; a < subsets.size(); ++a) {
      for (std::size_t b = a + 1; b < subsets.size(); ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < 64; ++i)
          for (std::size_t j = 0; j < 64; ++j)
            for (std::size_t k = 0; k < 64; ++k) {
              const std::vector p{r0.nodes[i], r1.nodes[j], r2.nodes[k]};
              acc += r0.weights[i] * r1.weights[j] * r2.weights[k] * ishigami_effect(ishi, m, subsets[a], p) *
                     ishigami_effect(ishi, m, subsets[b], p);
            }
        EXPECT_NEAR(acc, 0.0, 1e-8) << subsets[a].label() << " vs " << subsets[b].label();
      }
    }
  }
}

TEST(Ishigami, MixtureEffects) {
  const double c = 1 + 0.1 * std::pow(pi, 4) / 5;
  const double g0 = 3.5 + (1.0 / 3) * (2 / pi) * c - (7.0 / 6) * std::exp(-2.0);
  EXPECT_NEAR(ishigami_mixture_effect(ishi, third, {}, std::vector{0.0, 0.0, 0.0}), g0, 1e-14);
  EXPECT_NEAR(g0, 3.9677, 1e-4);
  EXPECT_NEAR(ishigami_mixture_effect(ishi, third, SubsetIndex::singleton(1), std::vector{0.0, 0.0, 0.0}),
              -3.5 * (1 - std::exp(-2.0) / 3), 1e-14);
  EXPECT_NEAR(-3.5 * (1 - std::exp(-2.0) / 3), -3.3421, 1e-4);
  // z={3} on [0, pi]: only mu3 carries a g_3 term
  for (double x3 : {0.0, 1.0, 2.5}) {
    EXPECT_NEAR(ishigami_mixture_effect(ishi, third, SubsetIndex::singleton(2), std::vector{0.0, 0.0, x3}),
                (1.0 / 3) * (2 * 0.1 / pi) * (std::pow(x3, 4) - std::pow(pi, 4) / 5), 1e-14);
  }
  // Outside [-pi, pi] only the Normal component contributes.
  EXPECT_NEAR(ishigami_mixture_effect(ishi, third, SubsetIndex::singleton(0), std::vector{4.0, 0.0, 0.0}),
              (1.0 / 3) * std::sin(4.0) * 1.3, 1e-14);
}

TEST(Ishigami, MixtureReconstructionOnCommonSupport) {
  RandomStream rng(3, "mix-recon");
  for (int k = 0; k < 200; ++k) {
    const auto x = random_point(rng, 0.0, pi);
    double sum = 0.0;
    for (auto z : subsets_of(SubsetIndex::full(3))) sum += ishigami_mixture_effect(ishi, third, z, x);
    ASSERT_NEAR(sum, ishi(x), 1e-10);
  }
}

TEST(Ishigami, DegeneratePriorGivesComponentEffect) {
  const std::vector<double> only2{0.0, 1.0, 0.0};
  const std::vector x{0.4, -1.1, 2.0};
  for (auto z : subsets_of(SubsetIndex::full(3))) {
    EXPECT_EQ(ishigami_mixture_effect(ishi, only2, z, x), ishigami_effect(ishi, IshigamiMeasure::mu2, z, x));
  }
}

TEST(Multilinear, EvaluatesSumOfProducts) {
  const auto ml = ishigami_multilinear();
  RandomStream rng(4, "ml");
  for (int k = 0; k < 100; ++k) {
    const auto x = random_point(rng, -pi, pi);
    ASSERT_NEAR(ml(x), ishi(x), 1e-12);
  }
  const CompositeMultilinearModel poly({Factor::polynomial({1, 2}), Factor::exponential(2, 0.5)},
                                       {SubsetIndex{}, SubsetIndex::of({0, 1}), SubsetIndex::singleton(1)});
  const std::vector x{0.5, 1.0};
  EXPECT_NEAR(poly(x), 1 + 2 * 2 * std::exp(0.5) + 2 * std::exp(0.5), 1e-14);
}

TEST(Multilinear, ClosedFormMatchesIshigamiEffects) {
  const auto ml = ishigami_multilinear();
  RandomStream rng(5, "ml-eff");
  for (auto m : {IshigamiMeasure::mu1, IshigamiMeasure::mu2, IshigamiMeasure::mu3}) {
    const auto means = ml.factor_means(ishigami_measure(m));
    const double lo = m == IshigamiMeasure::mu3 ? 0.0 : -pi;
    for (int k = 0; k < 20; ++k) {
      const auto x = random_point(rng, lo, pi);
      for (auto z : subsets_of(SubsetIndex::full(3))) {
        ASSERT_NEAR(ml.effect(means, z, x), ishigami_effect(ishi, m, z, x), 1e-10) << z.label();
      }
    }
  }
}

TEST(Cores, SameCoreExamples) {
  const auto ml = ishigami_multilinear();
  EXPECT_TRUE(same_core(ml, ishigami_measure(1), ishigami_measure(5)));
  EXPECT_TRUE(same_core(ml, ishigami_measure(1), ishigami_measure(4)));
  EXPECT_TRUE(same_core(ml, ishigami_measure(3), ishigami_measure(3)));
  EXPECT_FALSE(same_core(ml, ishigami_measure(1), ishigami_measure(3)));
}

TEST(Cores, PartitionExamples) {
  const auto ml = ishigami_multilinear();
  const MeasureSet a({ishigami_measure(1), ishigami_measure(4), ishigami_measure(5)});
  EXPECT_EQ(partition_into_cores(ml, a), (std::vector<std::vector<std::size_t>>{{0, 1, 2}}));
  const MeasureSet b({ishigami_measure(1), ishigami_measure(3)});
  EXPECT_EQ(partition_into_cores(ml, b), (std::vector<std::vector<std::size_t>>{{0}, {1}}));
  const MeasureSet c({ishigami_measure(2)});
  EXPECT_EQ(partition_into_cores(ml, c), (std::vector<std::vector<std::size_t>>{{0}}));
  const MeasureSet d({ishigami_measure(3), ishigami_measure(1), ishigami_measure(2), ishigami_measure(5)});
  EXPECT_EQ(partition_into_cores(ml, d), (std::vector<std::vector<std::size_t>>{{0}, {1, 3}, {2}}));
}

TEST(Cores, EffectsCoincideWithinCoreOnCommonSupport) {
  const auto ml = ishigami_multilinear();
  const auto m1 = ml.factor_means(ishigami_measure(1));
  const auto m5 = ml.factor_means(ishigami_measure(5));
  RandomStream rng(6, "core");
  for (int k = 0; k < 200; ++k) {
    const auto x = random_point(rng, -pi / 2, pi / 2);
    for (auto z : subsets_of(SubsetIndex::full(3))) {
      ASSERT_NEAR(ml.effect(m1, z, x), ml.effect(m5, z, x), 1e-9);
    }
  }
}

TEST(Cores, PartitionIsAPartitionForRandomSets) {
  const auto ml = ishigami_multilinear();
  RandomStream rng(7, "cores");
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ProductMeasure> ms;
    for (int k = 0; k < 6; ++k) ms.push_back(ishigami_measure(1 + static_cast<int>(rng.below(5))));
    const MeasureSet set(ms);
    const auto groups = partition_into_cores(ml, set);
    std::vector<int> seen(ms.size(), 0);
    for (const auto& g : groups) {
      for (auto i : g) seen[i]++;
      for (auto i : g)
        for (auto j : g) EXPECT_TRUE(same_core(ml, set[i], set[j]));
    }
    for (int s : seen) EXPECT_EQ(s, 1);
    for (std::size_t a = 0; a < groups.size(); ++a)
      for (std::size_t b = a + 1; b < groups.size(); ++b)
        EXPECT_FALSE(same_core(ml, set[groups[a][0]], set[groups[b][0]]));
  }
}

TEST(Registry, ResolvesBuiltinsAndParsesFiles) {
  auto b = make_builtin_model("ishigami");
  EXPECT_EQ(b.model.dim(), 3u);
  EXPECT_NEAR(b.model(std::vector{0.0, pi / 2, 0.0}), 7.0, 1e-15);
  EXPECT_THROW(make_builtin_model("rosenbrock"), ConfigError);
  EXPECT_THROW(make_builtin_model("multilinear:/nonexistent.json"), DataError);
  const auto ml = make_builtin_model(std::string("multilinear:") + RGSA_DATA_DIR + "/multilinear_example.json");
  ASSERT_TRUE(ml.multilinear);
  EXPECT_EQ(ml.model.dim(), ml.multilinear->dim());
}

TEST(Registry, RejectsMalformedMultilinear) {
  const char* bad[] = {
      R"({"n": 1, "factors": [{"kind": "sin"}], "terms": [[1]], "x": 1})",
      R"({"n": 1, "factors": [{"kind": "cos"}], "terms": [[1]]})",
      R"({"n": 1, "factors": [{"kind": "sin", "power": 2}], "terms": [[1]]})",
      R"({"n": 2, "factors": [{"kind": "sin"}], "terms": [[1]]})",
      R"({"n": 1, "factors": [{"kind": "sin"}], "terms": [[2]]})",
      R"({"n": 1, "factors": [{"kind": "poly"}], "terms": [[1]]})",
  };
  for (const char* text : bad) EXPECT_THROW(parse_multilinear(nlohmann::json::parse(text)), ConfigError) << text;
}
