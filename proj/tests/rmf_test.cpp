#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "schoenbat/error.hpp"
#include "schoenbat/harness/stats.hpp"
#include "schoenbat/kernels.hpp"
#include "schoenbat/rmf.hpp"
#include "schoenbat/rng.hpp"

using namespace schoenbat;

namespace {

RmfParams params(std::size_t features, std::size_t d, KernelId k = KernelId::kExp, double p = 2.0) {
  RmfParams r;
  r.features = features;
  r.input_dim = d;
  r.kernel = k;
  r.base = p;
  r.seed = 17;
  return r;
}

}  // namespace

TEST(RmfParams, Validation) {
  EXPECT_THROW(params(0, 3).validate(), InvalidArgument);
  EXPECT_THROW(params(3, 0).validate(), InvalidArgument);
  EXPECT_THROW(params(3, 3, KernelId::kExp, 1.0).validate(), InvalidArgument);
  EXPECT_NO_THROW(params(3, 3, KernelId::kExp, 1.5).validate());
}

TEST(DegreeLaw, ProbabilityAtBaseTwo) {
  for (std::size_t n = 0; n < 10; ++n) EXPECT_DOUBLE_EQ(degree_probability(2.0, n), std::ldexp(1.0, -int(n) - 1));
  double total = 0.0;
  for (std::size_t n = 0; n < 400; ++n) total += degree_probability(3.0, n);
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(DegreeLaw, HalfOfDegreesAreZero) {
  const RmfFeatureMap map = sample_feature_map(params(100000, 1));
  const auto zeros = std::count(map.degrees().begin(), map.degrees().end(), 0u);
  EXPECT_NEAR(static_cast<double>(zeros) / 100000.0, 0.5, 0.01);
}

TEST(DegreeLaw, ChiSquareGoodnessOfFit) {
  const std::size_t m = 100000;
  RngStream rng(2718);
  const RmfFeatureMap map = sample_feature_map(params(m, 1), rng);
  // Cells 0..11 and a merged tail N >= 12.
  std::vector<double> observed(13, 0.0);
  std::vector<double> expected(13, 0.0);
  for (std::size_t n : map.degrees()) observed[std::min<std::size_t>(n, 12)] += 1.0;
  for (int n = 0; n < 12; ++n) expected[n] = m * std::ldexp(1.0, -(n + 1));
  expected[12] = m * std::ldexp(1.0, -12);
  const auto r = harness::chi_square_gof(observed, expected);
  EXPECT_GT(r.p_value, 0.001) << "chi2 = " << r.statistic;
}

TEST(SampleFeatureMap, Structure) {
  const RmfFeatureMap map = sample_feature_map(params(8, 5));
  ASSERT_EQ(map.degrees().size(), 8u);
  const std::size_t total = std::accumulate(map.degrees().begin(), map.degrees().end(), std::size_t{0});
  EXPECT_EQ(map.total_omegas(), total);
  EXPECT_EQ(map.omegas().cols(), 5u);
  for (double s : map.omegas().values()) ASSERT_TRUE(s == 1.0 || s == -1.0);
  for (std::size_t t = 0; t < 8; ++t) {
    const double a = coefficient(KernelId::kExp, map.degree(t));
    EXPECT_DOUBLE_EQ(map.scale_coeffs()[t], std::sqrt(a / degree_probability(2.0, map.degree(t))));
  }
}

TEST(SampleFeatureMap, Deterministic) {
  EXPECT_EQ(sample_feature_map(params(16, 4)), sample_feature_map(params(16, 4)));
  RmfParams other = params(16, 4);
  other.seed = 18;
  EXPECT_NE(sample_feature_map(params(16, 4)), sample_feature_map(other));
}

TEST(SampleFeatureMap, DegreeCapResamples) {
  // p close to 1 makes degrees above the cap common.
  const RmfFeatureMap map = sample_feature_map(params(2000, 2, KernelId::kExp, 1.01));
  EXPECT_GT(map.resampled_degrees(), 0u);
  for (std::size_t n : map.degrees()) ASSERT_LE(n, kMaxDegree);
}

TEST(ApplyFeatureMap, HandExample) {
  // d=2, N=1, omega=[1,-1], x=[0.3,0.1], a_1=1 (inv), p=2, D=1:
  // sqrt(1) * sqrt(1 * 4) * 0.2 = 0.4
  const RmfFeatureMap map(params(1, 2, KernelId::kInv), {1}, Matrix::from_rows({{1, -1}}));
  const auto phi = apply_feature_map(map, std::vector<double>{0.3, 0.1});
  ASSERT_EQ(phi.size(), 1u);
  EXPECT_NEAR(phi[0], 0.4, 1e-15);
}

TEST(ApplyFeatureMap, ZeroRow) {
  const RmfFeatureMap map = sample_feature_map(params(32, 3));
  const auto phi = apply_feature_map(map, std::vector<double>(3, 0.0));
  for (std::size_t t = 0; t < 32; ++t) {
    const double want = map.degree(t) == 0 ? std::sqrt(1.0 * 2.0 / 32.0) : 0.0;
    EXPECT_DOUBLE_EQ(phi[t], want);
  }
}

TEST(ApplyFeatureMap, Homogeneity) {
  RngStream rng(8);
  const RmfFeatureMap map = sample_feature_map(params(64, 6), rng);
  const Matrix x = gaussian_matrix(rng, 5, 6);
  const double c = -1.7;
  const Matrix a = apply_feature_map(map, x);
  const Matrix b = apply_feature_map(map, scaled(x, c));
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t t = 0; t < 64; ++t) {
      const double want = std::pow(c, static_cast<double>(map.degree(t))) * a(i, t);
      EXPECT_NEAR(b(i, t), want, 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST(ApplyFeatureMap, DimensionMismatch) {
  const RmfFeatureMap map = sample_feature_map(params(4, 3));
  EXPECT_THROW(apply_feature_map(map, Matrix(2, 4)), ShapeError);
  EXPECT_THROW(kernel_estimate(map, std::vector<double>(3), std::vector<double>(2)), ShapeError);
}

TEST(KernelEstimate, ZeroInputSingleMap) {
  const RmfFeatureMap map = sample_feature_map(params(10, 4));
  const std::vector<double> zero(4, 0.0);
  const auto zeros = std::count(map.degrees().begin(), map.degrees().end(), 0u);
  EXPECT_NEAR(kernel_estimate(map, zero, zero), 2.0 / 10.0 * static_cast<double>(zeros), 1e-15);
  EXPECT_EQ(kernel_estimate(map, zero, zero), kernel_estimate(map, zero, zero));
}

TEST(KernelEstimate, CountsInputsOutsideBall) {
  const RmfFeatureMap map = sample_feature_map(params(4, 2, KernelId::kInv));
  std::size_t outside = 0;
  kernel_estimate(map, std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 1.0}, &outside);
  EXPECT_EQ(outside, 1u);
}

TEST(KernelEstimate, UnbiasedAtBaseTwoAndThree) {
  RngStream pair_rng(31);
  const auto x = uniform_unit_ball(pair_rng, 5);
  const auto y = uniform_unit_ball(pair_rng, 5);
  for (KernelId k : {KernelId::kExp, KernelId::kSqrt}) {
    for (double p : {2.0, 3.0}) {
      RngStream rng(RngStream(5, static_cast<std::uint64_t>(k) * 10 + static_cast<std::uint64_t>(p)));
      std::vector<double> est(100000);
      for (double& e : est) e = kernel_estimate(sample_feature_map(params(1, 5, k, p), rng), x, y);
      const auto s = harness::summarize(est);
      const double truth = evaluate_closed_form(k, dot(x, y));
      EXPECT_LE(std::abs(s.mean - truth), 4.0 * s.se) << kernel_name(k) << " p=" << p;
    }
  }
}

TEST(KernelEstimate, FeaturesIndependent) {
  // E[Phi_1 Phi_2] = E[Phi_1] E[Phi_2] = a_0 P[N=0] / D when features are independent.
  RngStream rng(77);
  const std::vector<double> x{0.4, -0.2, 0.5};
  std::vector<double> prod(50000);
  for (double& v : prod) {
    const auto phi = apply_feature_map(sample_feature_map(params(2, 3), rng), x);
    v = phi[0] * phi[1];
  }
  const auto s = harness::summarize(prod);
  EXPECT_LE(std::abs(s.mean - 0.5 / 2.0), 4.0 * s.se);
}

TEST(Serialization, RoundTrip) {
  for (std::size_t d : {1u, 7u, 64u, 65u}) {
    RngStream rng(d);
    const RmfFeatureMap map = sample_feature_map(params(40, d, KernelId::kLogi, 2.5), rng);
    const std::string text = feature_map_to_json(map);
    const RmfFeatureMap back = feature_map_from_json(text);
    EXPECT_EQ(back, map);
    EXPECT_EQ(feature_map_to_json(back), text);
  }
}

TEST(Serialization, RejectsMalformed) {
  EXPECT_THROW(feature_map_from_json("{"), InvalidArgument);
  EXPECT_THROW(feature_map_from_json(R"({"format":"other","version":1})"), InvalidArgument);
}
