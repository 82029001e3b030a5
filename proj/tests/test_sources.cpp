#include <array>
#include <cmath>

#include <gtest/gtest.h>

#include "cvbell/sources.hpp"

using namespace cvbell;
using L = ModeLayout;

namespace {

double cov_at(const GaussianState& st, std::size_t mi, int qi, std::size_t mj, int qj) {
    return st.cov()(static_cast<Eigen::Index>(2 * mi + qi - 1), static_cast<Eigen::Index>(2 * mj + qj - 1));
}

}  // namespace

TEST(DownConverter, UnitGainIsVacuum) {
    EXPECT_TRUE(down_converter(1.0).cov().isApprox(Matrix::Identity(8, 8)));
    EXPECT_TRUE(four_opa_network(1.0).cov().isApprox(Matrix::Identity(8, 8)));
}

TEST(DownConverter, LowGainCrossCorrelation) {
    const auto st = down_converter(1.0001);
    EXPECT_NEAR(cov_at(st, L::kAh, 1, L::kBh, 1), 0.020000999975001250, 1e-14);
    EXPECT_EQ(cov_at(st, L::kAh, 1, L::kBv, 1), 0.0);
}

TEST(DownConverter, GainTwo) {
    const auto st = down_converter(2.0);
    EXPECT_TRUE(st.satisfies_uncertainty());
    EXPECT_NEAR(cov_at(st, L::kAh, 1, L::kAh, 1), 3.0, 1e-12);
    EXPECT_NEAR(cov_at(st, L::kAh, 1, L::kBh, 1), 2.8284271247461901, 1e-12);
}

TEST(DownConverter, RejectsSubUnitGain) {
    EXPECT_THROW(down_converter(0.5), InvalidArgument);
    EXPECT_THROW(four_opa_network(0.999), InvalidArgument);
    EXPECT_THROW(make_source({SourceKind::FourOpaNetwork, -1.0}), InvalidArgument);
}

TEST(FourOpaNetwork, CrossCorrelationAtGainOnePointOne) {
    const auto st = four_opa_network(1.1);
    EXPECT_NEAR(cov_at(st, L::kAh, 1, L::kBh, 1), 0.66332495807107997, 1e-10);
    EXPECT_NEAR(cov_at(st, L::kAv, 2, L::kBv, 2), -0.66332495807107997, 1e-10);
}

TEST(FourOpaNetwork, EqualsDownConverter) {
    for (double g : {1.0, 1.01, 1.1, 1.5, 2.0, 2.7, 4.0}) {
        const Matrix diff = four_opa_network(g).cov() - down_converter(g).cov();
        EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-10) << "G=" << g;
    }
}

TEST(Sources, PolarizationSwapSymmetryAndBlockStructure) {
    // Permutation exchanging (A_h, B_h) with (A_v, B_v).
    const std::array<std::size_t, 4> perm{L::kAv, L::kAh, L::kBv, L::kBh};
    for (auto kind : {SourceKind::DownConverter, SourceKind::FourOpaNetwork}) {
        for (double g : {1.01, 1.5, 3.0}) {
            const auto st = make_source({kind, g});
            for (std::size_t i = 0; i < 4; ++i) {
                for (std::size_t j = 0; j < 4; ++j) {
                    for (int qi = 1; qi <= 2; ++qi) {
                        for (int qj = 1; qj <= 2; ++qj) {
                            EXPECT_NEAR(cov_at(st, i, qi, j, qj), cov_at(st, perm[i], qi, perm[j], qj), 1e-12);
                        }
                    }
                }
            }
            for (int q = 1; q <= 2; ++q) {
                for (int r = 1; r <= 2; ++r) {
                    EXPECT_NEAR(cov_at(st, L::kAh, q, L::kAv, r), 0.0, 1e-12);
                    EXPECT_NEAR(cov_at(st, L::kAh, q, L::kBv, r), 0.0, 1e-12);
                    EXPECT_NEAR(cov_at(st, L::kBh, q, L::kAv, r), 0.0, 1e-12);
                }
            }
            if (kind == SourceKind::DownConverter) {
                EXPECT_EQ(cov_at(st, L::kAh, 1, L::kBv, 1), 0.0);
                EXPECT_EQ(cov_at(st, L::kAh, 1, L::kAv, 2), 0.0);
            }
        }
    }
}

TEST(PercentSqueezing, KnownValues) {
    // V_min = 1 - p/100 gives G = 1 + (1/V_min - 2 + V_min)/4; at 10% that is 1 + 1/360.
    EXPECT_NEAR(gain_from_percent_squeezing(10.0), 1.0 + 1.0 / 360.0, 1e-14);
    EXPECT_NEAR(gain_from_percent_squeezing(0.0), 1.0, 1e-15);
    EXPECT_NEAR(squeezed_variance(2.0), std::pow(std::sqrt(2.0) - 1.0, 2), 1e-15);
    EXPECT_THROW(gain_from_percent_squeezing(100.0), InvalidArgument);
    EXPECT_THROW(gain_from_percent_squeezing(-1.0), InvalidArgument);
}

TEST(PercentSqueezing, RoundTrip) {
    for (double p : {0.01, 1.0, 10.0, 50.0, 62.0, 95.0, 99.9}) {
        EXPECT_NEAR(percent_squeezing_from_gain(gain_from_percent_squeezing(p)), p, 1e-9) << p;
    }
}

TEST(PercentSqueezing, MatchesSingleOpaVariance) {
    // The squeezed quadrature of one OPA acting on vacuum.
    const double g = gain_from_percent_squeezing(37.0);
    const auto st = apply(vacuum(1), single_mode_squeeze(1, 0, g));
    EXPECT_NEAR(st.cov()(1, 1), 0.63, 1e-12);
}
