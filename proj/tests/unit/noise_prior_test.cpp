#include "vfxopt/noise_prior.hpp"

#include "dense_svd_oracle.hpp"
#include "test_support.hpp"
#include "unfold.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace vfxopt {
namespace {

TEST(RankSelection, RemovedHandCases) {
  const std::vector<double> a{3, 1};
  EXPECT_EQ(select_rank_removed(a, 0.1), 1u);
  EXPECT_EQ(select_rank_removed(a, 0.0), 0u);
  const std::vector<double> flat{1, 1, 1, 1};
  EXPECT_EQ(select_rank_removed(flat, 0.5), 2u);
}

TEST(RankSelection, RetainedHandCases) {
  EXPECT_EQ(select_rank_retained(std::vector<double>{3, 1}, 0.9), 1u);
  EXPECT_EQ(select_rank_retained(std::vector<double>{2, 2}, 1.0), 2u);
  EXPECT_EQ(select_rank_retained(std::vector<double>{1, 1, 1, 1}, 0.6), 3u);
  EXPECT_EQ(select_rank_retained(std::vector<double>{1, 1, 1, 1}, 0.0), 1u);
}

TEST(RankSelection, RejectsBadSpectra) {
  EXPECT_THROW(effective_rank(std::vector<double>{0, 0}), DegenerateSpectrumError);
  EXPECT_THROW(effective_rank(std::vector<double>{}), DegenerateSpectrumError);
  EXPECT_THROW(effective_rank(std::vector<double>{1, 2}), Error);
  EXPECT_THROW(effective_rank(std::vector<double>{1, -1}), Error);
  EXPECT_THROW(select_rank_removed(std::vector<double>{1}, 1.5), Error);
  EXPECT_EQ(effective_rank(std::vector<double>{1, 1e-6, 1e-8}), 2u);
}

TEST(RankSelection, MatchesEnumerationOnRandomSpectra) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<double> sigma(n);
    for (auto &s : sigma) {
      s = std::pow(u(rng), 3.0) * 10.0 + 1e-3;
    }
    std::sort(sigma.rbegin(), sigma.rend());
    const double rho = u(rng);
    const std::size_t rank = oracle::count_above_floor(sigma, kSingularValueFloor);
    EXPECT_EQ(select_rank_removed(sigma, rho), oracle::enumerate_rank(sigma, rank, rho, 0));
    EXPECT_EQ(select_rank_retained(sigma, rho), oracle::enumerate_rank(sigma, rank, rho, 1));
  }
}

TEST(SpatialProjection, ZeroThresholdIsIdentity) {
  const auto x = gaussian_noise({2, 4, 4, 4}, 3);
  EXPECT_LT(relative_frobenius_error(suppress_spatial(x, 0.0), x), 1e-5);
}

TEST(SpatialProjection, RankOneInputVanishes) {
  // Every (channel, frame) row is a multiple of one spatial pattern.
  std::vector<float> v;
  for (int r = 0; r < 6; ++r) {
    for (int p = 0; p < 9; ++p) {
      v.push_back(static_cast<float>((r + 1) * (p - 4)));
    }
  }
  const LatentTensor x({2, 3, 3, 3}, v);
  const auto out = project_spatial(x, 0.1);
  EXPECT_EQ(out.rank, 1u);
  EXPECT_EQ(out.components, 1u);
  EXPECT_EQ(out.tensor, LatentTensor::zeros(x.shape()));
}

TEST(SpatialProjection, RemovedEnergyMatchesSmallTensorOracle) {
  const auto x = gaussian_noise({2, 2, 2, 2}, 11);
  const auto result = project_spatial(x, 0.1);
  double removed = 0.0;
  for (std::size_t i = 0; i < result.components; ++i) {
    removed += result.singular_values[i] * result.singular_values[i];
  }
  const double residual = squared_distance(x, result.tensor);
  EXPECT_NEAR(removed, residual, 1e-4 * removed);
}

TEST(SpatialProjection, DegenerateShapesAreRejected) {
  EXPECT_THROW(suppress_spatial(LatentTensor::filled({1, 1, 4, 4}, 1.0f), 0.1), Error);
  EXPECT_THROW(suppress_spatial(gaussian_noise({2, 2, 1, 1}, 1), 0.1), Error);
  EXPECT_THROW(suppress_spatial(LatentTensor::zeros({2, 2, 2, 2}), 0.1),
               DegenerateSpectrumError);
}

TEST(TemporalProjection, FullRetentionIsIdentity) {
  const auto x = gaussian_noise({2, 5, 3, 3}, 5);
  EXPECT_LT(relative_frobenius_error(retain_temporal(x, 1.0), x), 1e-5);
}

TEST(TemporalProjection, IdenticalFramesArePreserved) {
  const auto frame = gaussian_noise({2, 1, 3, 3}, 8);
  std::vector<float> v;
  for (std::size_t c = 0; c < 2; ++c) {
    for (int f = 0; f < 4; ++f) {
      for (std::size_t p = 0; p < 9; ++p) {
        v.push_back(frame[c * 9 + p]);
      }
    }
  }
  const LatentTensor x({2, 4, 3, 3}, v);
  const auto result = project_temporal(x, 0.9);
  EXPECT_EQ(result.rank, 1u);
  EXPECT_EQ(result.components, 1u);
  EXPECT_LT(relative_frobenius_error(result.tensor, x), 1e-5);
}

TEST(TemporalProjection, RetainedFractionAndRankAgainstOracle) {
  const auto x = gaussian_noise({2, 4, 2, 2}, 21);
  const auto result = project_temporal(x, 0.9);
  double kept = 0.0, total = 0.0;
  for (std::size_t i = 0; i < result.singular_values.size(); ++i) {
    const double e = result.singular_values[i] * result.singular_values[i];
    total += e;
    if (i < result.components) {
      kept += e;
    }
  }
  EXPECT_GE(kept / total, 0.9);
  const auto out_svd = oracle::svd(oracle::unfold_temporal(result.tensor));
  EXPECT_LE(oracle::count_above_floor(out_svd.sigma, 1e-5), result.components);
}

TEST(TemporalProjection, SingleFrameIsRejected) {
  EXPECT_THROW(retain_temporal(gaussian_noise({2, 1, 3, 3}, 1), 0.9), Error);
}

TEST(EnhanceNoise, PassThroughSettingsAreIdentity) {
  const auto x = gaussian_noise({3, 6, 5, 5}, 4);
  EXPECT_LT(relative_frobenius_error(enhance_noise(x, {0.0, 1.0}), x), 1e-5);
}

TEST(EnhanceNoise, DefaultsAreNonExpansive) {
  const auto x = gaussian_noise({4, 8, 8, 8}, 99);
  const auto y = enhance_noise(x, {0.1, 0.9});
  EXPECT_LE(tensor_stats(y).frobenius_norm, tensor_stats(x).frobenius_norm);
}

TEST(EnhanceNoise, RankOneSpatialInputHitsDegenerateSecondStage) {
  std::vector<float> v;
  for (int r = 0; r < 8; ++r) {
    for (int p = 0; p < 4; ++p) {
      v.push_back(static_cast<float>((r % 3 + 1) * (p + 1)));
    }
  }
  const LatentTensor x({2, 4, 2, 2}, v);
  EXPECT_EQ(suppress_spatial(x, 0.1), LatentTensor::zeros(x.shape()));
  EXPECT_THROW(enhance_noise(x, {0.1, 0.9}), DegenerateSpectrumError);
}

TEST(EnhanceNoise, AgreesWithOracleComposition) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto shape = testing_support::random_shape(rng, 2, 5, 3, 3);
    const auto x = gaussian_noise(shape, 500 + trial);
    // Stage 1 by oracle.
    const auto s1 = oracle::svd(oracle::unfold_spatial(x));
    const auto r1 = oracle::count_above_floor(s1.sigma, kSingularValueFloor);
    const auto k_s = oracle::enumerate_rank(s1.sigma, r1, 0.1, 0);
    const auto kept = oracle::reconstruct(s1, k_s, r1);
    const auto production_stage1 = suppress_spatial(x, 0.1);
    EXPECT_LT(oracle::relative_error(oracle::unfold_spatial(production_stage1), kept), 1e-4)
        << shape.to_string();
  }
}

TEST(Blend, EndpointsAreExact) {
  const auto t = gaussian_noise({1, 2, 3, 4}, 1);
  const auto n = gaussian_noise({1, 2, 3, 4}, 2);
  EXPECT_EQ(blend(t, n, BlendWeight(0.0)), n);
  EXPECT_EQ(blend(t, n, BlendWeight(1.0)), t);
}

TEST(Blend, DirectSubstitution) {
  const auto out = blend(LatentTensor::filled({1, 1, 2, 2}, 1.0f),
                         LatentTensor::zeros({1, 1, 2, 2}), BlendWeight(0.001));
  for (float v : out.values()) {
    EXPECT_NEAR(v, 0.0316228, 1e-6);
  }
}

TEST(Blend, RejectsBadInputs) {
  EXPECT_THROW(BlendWeight(-0.1), Error);
  EXPECT_THROW(BlendWeight(1.1), Error);
  EXPECT_THROW(BlendWeight(std::nan("")), Error);
  EXPECT_THROW(blend(LatentTensor::zeros({1, 1, 2, 2}), LatentTensor::zeros({1, 1, 1, 4}),
                     BlendWeight(0.5)),
               Error);
}

TEST(Blend, PreservesUnitVarianceForIndependentInputs) {
  for (double alpha : {0.001, 0.01, 0.5}) {
    const auto out = blend(gaussian_noise({4, 16, 16, 16}, 1), gaussian_noise({4, 16, 16, 16}, 2),
                           BlendWeight(alpha));
    EXPECT_NEAR(tensor_stats(out).variance, 1.0, 0.05) << alpha;
  }
}

TEST(Thresholds, Validation) {
  EXPECT_THROW((ProjectionThresholds{-0.1, 0.9}.validate()), Error);
  EXPECT_THROW((ProjectionThresholds{0.1, 1.5}.validate()), Error);
  EXPECT_NO_THROW((ProjectionThresholds{0.0, 1.0}.validate()));
}

} // namespace
} // namespace vfxopt
