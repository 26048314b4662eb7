#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "schoenbat/attention.hpp"
#include "schoenbat/error.hpp"
#include "schoenbat/harness/stats.hpp"
#include "schoenbat/ppsbn.hpp"
#include "schoenbat/rmf.hpp"
#include "schoenbat/rng.hpp"

using namespace schoenbat;

namespace {

double max_row_norm(const Matrix& m) {
  double r = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) r = std::max(r, l2_norm(m.row(i)));
  return r;
}

Matrix unit_ball_rows(RngStream& rng, std::size_t n, std::size_t d) {
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = uniform_unit_ball(rng, d);
    std::copy(r.begin(), r.end(), m.row(i).begin());
  }
  return m;
}

RmfFeatureMap map_for(KernelId k, std::size_t features, std::size_t d, RngStream& rng) {
  RmfParams p;
  p.features = features;
  p.input_dim = d;
  p.kernel = k;
  return sample_feature_map(p, rng);
}

}  // namespace

TEST(PreSbn, IdenticalRowsGiveZero) {
  const Matrix x = Matrix::from_rows({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  for (SbnNorm norm : {SbnNorm::kSpectral, SbnNorm::kFrobenius}) {
    const PreSbnResult r = pre_sbn(x, kDefaultSbnEpsilon, norm);
    EXPECT_EQ(r.normalized, Matrix(3, 3));
    EXPECT_EQ(r.stats.scalar_norm, 0.0);
  }
}

TEST(PreSbn, HandExample) {
  const Matrix x = Matrix::from_rows({{1, 0}, {-1, 0}});
  for (SbnNorm norm : {SbnNorm::kSpectral, SbnNorm::kFrobenius}) {
    const PreSbnResult r = pre_sbn(x, 1e-13, norm);
    EXPECT_EQ(r.stats.mean, (std::vector<double>{0, 0}));
    EXPECT_EQ(r.stats.variance, (std::vector<double>{1, 0}));
    EXPECT_NEAR(r.stats.scalar_norm, std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(r.normalized(0, 0), 0.70710678118654752, 1e-12);
    EXPECT_NEAR(r.normalized(1, 0), -0.70710678118654752, 1e-12);
    EXPECT_EQ(r.normalized(0, 1), 0.0);
    EXPECT_EQ(r.normalized(1, 1), 0.0);
  }
}

TEST(PreSbn, RowsInUnitBall) {
  RngStream rng(12);
  for (SbnNorm norm : {SbnNorm::kSpectral, SbnNorm::kFrobenius}) {
    const Matrix x = gaussian_matrix(rng, 64, 16);
    const PreSbnResult r = pre_sbn(x, kDefaultSbnEpsilon, norm);
    EXPECT_LE(max_row_norm(r.normalized), 1.0 + 1e-12);
    EXPECT_EQ(r.normalized.rows(), 64u);
    EXPECT_EQ(r.normalized.cols(), 16u);
    EXPECT_EQ(r.stats.mean.size(), 16u);
    EXPECT_EQ(r.stats.variance.size(), 16u);
  }
  // Rank one input: the spectral norm equals the only nonzero row norm.
  Matrix spike(5, 3);
  spike(2, 1) = 1e8;
  EXPECT_LE(max_row_norm(pre_sbn(spike).normalized), 1.0 + 1e-12);
}

TEST(PreSbn, FrobeniusBoundsSpectral) {
  RngStream rng(13);
  const Matrix x = gaussian_matrix(rng, 20, 6);
  const double spectral = pre_sbn(x, 1e-13, SbnNorm::kSpectral).stats.scalar_norm;
  const double frob = pre_sbn(x, 1e-13, SbnNorm::kFrobenius).stats.scalar_norm;
  EXPECT_LE(spectral, frob);
  EXPECT_GE(spectral, frob / std::sqrt(6.0));
}

TEST(PreSbn, RejectsBadArguments) {
  EXPECT_THROW(pre_sbn(Matrix()), InvalidArgument);
  EXPECT_THROW(pre_sbn(Matrix(2, 2), 0.0), InvalidArgument);
}

TEST(PostSbn, Examples) {
  const Matrix x = Matrix::from_rows({{0.5, -0.5}, {2, 0}});
  EXPECT_EQ(post_sbn(x, {1, 1}), x);
  EXPECT_EQ(post_sbn(x, {2, 1}), scaled(x, 2));
  EXPECT_EQ(post_sbn(x, {1, 2})(0, 1), -0.25);
  EXPECT_THROW(post_sbn(x, {0, 1}), InvalidArgument);
  EXPECT_THROW(post_sbn(x, {1, -1}), InvalidArgument);
}

TEST(PostSbn, GroupLaw) {
  RngStream rng(14);
  const Matrix x = gaussian_matrix(rng, 6, 5);
  const PostSbnParams p1{1.7, 0.6};
  const PostSbnParams p2{0.8, 1.9};
  const Matrix twice = post_sbn(post_sbn(x, p1), p2);
  const Matrix once = post_sbn(x, {p2.gamma * std::pow(p1.gamma, p2.beta), p1.beta * p2.beta});
  EXPECT_LE(max_abs_difference(twice, once), 1e-10);
}

TEST(FitPostParams, Examples) {
  RngStream rng(15);
  const Matrix x = gaussian_matrix(rng, 8, 4);
  const PostSbnParams same = fit_post_params(x, x);
  EXPECT_NEAR(same.gamma, 1.0, 1e-9);
  EXPECT_NEAR(same.beta, 1.0, 1e-9);
  const PostSbnParams triple = fit_post_params(x, scaled(x, 3.0));
  EXPECT_NEAR(triple.gamma, 3.0, 1e-9);
  EXPECT_NEAR(triple.beta, 1.0, 1e-9);
  Matrix y = x;
  for (double& v : y.values()) v = signed_pow(v, 1.5);
  const PostSbnParams power = fit_post_params(x, y);
  EXPECT_NEAR(power.gamma, 1.0, 1e-9);
  EXPECT_NEAR(power.beta, 1.5, 1e-9);
}

TEST(FitPostParams, RecoversPlantedGrid) {
  RngStream rng(16);
  const Matrix x = gaussian_matrix(rng, 16, 8);
  for (double gamma : {0.5, 1.0, 1.75, 3.0}) {
    for (double beta : {0.5, 1.25, 2.0}) {
      const PostSbnParams fit = fit_post_params(x, post_sbn(x, {gamma, beta}));
      EXPECT_NEAR(fit.gamma, gamma, 1e-6);
      EXPECT_NEAR(fit.beta, beta, 1e-6);
    }
  }
}

TEST(FitPostParams, Degenerate) {
  EXPECT_THROW(fit_post_params(Matrix(2, 2), Matrix(2, 2, 1.0)), FitError);
  EXPECT_THROW(fit_post_params(Matrix::from_rows({{0.5, 0}}), Matrix::from_rows({{1, 1}})), FitError);
  EXPECT_THROW(fit_post_params(Matrix(2, 2), Matrix(2, 3)), ShapeError);
}

TEST(Restoration, UnitStatisticsGiveUnitScale) {
  // mu = 0, sigma + eps = 1, unit norms
  SbnStats s;
  s.mean = {0, 0, 0};
  s.variance = {0.75, 0.75, 0.75};
  s.epsilon = 0.25;
  s.scalar_norm = 1.0;
  EXPECT_EQ(restoration_scale(s, s), 1.0);
}

TEST(Restoration, SingleRow) {
  RngStream rng(17);
  const AttentionInput in{gaussian_matrix(rng, 1, 3), gaussian_matrix(rng, 1, 3), gaussian_matrix(rng, 1, 3)};
  const RestorationParams p = ideal_restoration_params(in);
  ASSERT_EQ(p.t.rows(), 1u);
  EXPECT_EQ(p.t(0, 0), 1.0);
  EXPECT_GT(p.r, 0.0);
}

TEST(Restoration, RandomInstanceFinite) {
  RngStream rng(18);
  const AttentionInput in{gaussian_matrix(rng, 4, 3), gaussian_matrix(rng, 4, 3), gaussian_matrix(rng, 4, 3)};
  const RestorationParams p = ideal_restoration_params(in);
  EXPECT_TRUE(std::isfinite(p.r));
  EXPECT_GT(p.r, 0.0);
  EXPECT_EQ(p.r_columns.size(), 3u);
  EXPECT_TRUE(p.s.all_finite());
  EXPECT_TRUE(p.t.all_finite());
  const RestorationResidual res = restoration_residual(in, p);
  EXPECT_TRUE(res.finite);
  EXPECT_GE(res.max_abs, res.mean_abs);
  EXPECT_TRUE(restoration_residual(in, p, true).finite);
}

TEST(Restoration, OverflowReported) {
  RngStream rng(19);
  const AttentionInput in{scaled(gaussian_matrix(rng, 4, 3), 1e3), scaled(gaussian_matrix(rng, 4, 3), 1e3),
                          gaussian_matrix(rng, 4, 3)};
  EXPECT_THROW(ideal_restoration_params(in), NumericalError);
}

TEST(Schoenbat, SingleRowReturnsValue) {
  RngStream rng(20);
  for (int rep = 0; rep < 20; ++rep) {
    const AttentionInput in{gaussian_matrix(rng, 1, 4), gaussian_matrix(rng, 1, 4), gaussian_matrix(rng, 1, 4)};
    const SchoenbatResult r = schoenbat::schoenbat(KernelId::kExp, in, map_for(KernelId::kExp, 8, 4, rng));
    if (r.degenerate_rows) continue;
    EXPECT_LE(max_abs_difference(r.output, in.v), 1e-12);
  }
}

TEST(Schoenbat, EqualsManualChain) {
  RngStream rng(21);
  const AttentionInput in{gaussian_matrix(rng, 10, 5), gaussian_matrix(rng, 10, 5), gaussian_matrix(rng, 10, 5)};
  const RmfFeatureMap map = map_for(KernelId::kTrigh, 24, 5, rng);
  const PostSbnParams post{1.3, 0.8};
  const SchoenbatResult r = schoenbat::schoenbat(KernelId::kTrigh, in, map, post);
  const AttentionInput normed{pre_sbn(in.q).normalized, pre_sbn(in.k).normalized, in.v};
  const RmfaResult a = rmfa(map, normed);
  EXPECT_EQ(r.output, post_sbn(a.output, post));
  EXPECT_EQ(r.degenerate_rows, a.degenerate_rows);
  EXPECT_THROW(schoenbat::schoenbat(KernelId::kExp, in, map), InvalidArgument);
}

TEST(Schoenbat, FittedErrorShrinksWithFeatures) {
  const std::size_t n = 32, d = 10;
  double err8 = 0.0, err128 = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RngStream rng(seed);
    const AttentionInput in{gaussian_matrix(rng, n, d), gaussian_matrix(rng, n, d), gaussian_matrix(rng, n, d)};
    const AttentionInput normed{pre_sbn(in.q).normalized, pre_sbn(in.k).normalized, in.v};
    const Matrix exact = exact_kernelized_attention(KernelId::kExp, normed);
    for (std::size_t features : {8u, 128u}) {
      const Matrix approx = schoenbat::schoenbat(KernelId::kExp, in, map_for(KernelId::kExp, features, d, rng)).output;
      // A poor approximation can yield a non-positive slope; keep gamma = beta = 1 then.
      PostSbnParams post;
      try {
        post = fit_post_params(approx, exact);
      } catch (const FitError&) {
      }
      const Matrix fitted = post_sbn(approx, post);
      (features == 8 ? err8 : err128) += mean_abs_difference(fitted, exact);
    }
  }
  EXPECT_LT(err128, err8);
}

TEST(Schoenbat, NumeratorAndNormalizerUnbiased) {
  const std::size_t n = 8, d = 6, features = 8, maps = 5000;
  for (KernelId k : kAllKernels) {
    RngStream rng(100 + static_cast<std::uint64_t>(k));
    const AttentionInput in{unit_ball_rows(rng, n, d), unit_ball_rows(rng, n, d), gaussian_matrix(rng, n, d)};
    const AttentionParts exact = exact_parts(k, in);
    std::vector<std::vector<double>> num(n * d);
    std::vector<std::vector<double>> den(n);
    for (std::size_t m = 0; m < maps; ++m) {
      const AttentionParts a = rmfa_parts(map_for(k, features, d, rng), in);
      for (std::size_t e = 0; e < n * d; ++e) num[e].push_back(a.numerator.values()[e]);
      for (std::size_t i = 0; i < n; ++i) den[i].push_back(a.denominator[i]);
    }
    for (std::size_t e = 0; e < n * d; ++e) {
      const auto s = harness::summarize(num[e]);
      EXPECT_LE(std::abs(s.mean - exact.numerator.values()[e]), 4.0 * s.se) << kernel_name(k) << " entry " << e;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = harness::summarize(den[i]);
      EXPECT_LE(std::abs(s.mean - exact.denominator[i]), 4.0 * s.se) << kernel_name(k) << " row " << i;
    }
  }
}

TEST(PreSbnFlops, Counts) {
  // 9nd elementwise work plus the Gram product 2 n d^2 and 4 d^3 for the eigenvalues
  EXPECT_DOUBLE_EQ(pre_sbn_flops(100, 10), 9000 + 2e4 + 4000);
  EXPECT_DOUBLE_EQ(pre_sbn_flops(100, 10, SbnNorm::kFrobenius), 9000 + 2000);
  EXPECT_DOUBLE_EQ(pre_sbn_flops(3, 10), 270 + 2.0 * 10 * 9 + 4.0 * 27);
  EXPECT_THROW(pre_sbn_flops(0, 1), InvalidArgument);
}
