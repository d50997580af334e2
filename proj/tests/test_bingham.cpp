#include <gtest/gtest.h>

#include "qtensor/bingham.hpp"

#include <numbers>
#include <random>

using namespace qtensor;

namespace {
Diag3 moments_of(const Diag3& mu, const QuadratureOrder& o = {}) { return partition_and_moments(mu, o).m; }

double ln_gap_slope(const std::vector<double>& gaps, const std::vector<double>& vals) {
    // least squares of vals against -ln(gap)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(gaps.size());
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        const double x = -std::log(gaps[i]);
        sx += x;
        sy += vals[i];
        sxx += x * x;
        sxy += x * vals[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
}  // namespace

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
    const auto [x, w] = detail::gauss_legendre(10);
    for (int k = 0; k <= 19; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], k);
        EXPECT_NEAR(s, k % 2 ? 0.0 : 2.0 / (k + 1), 1e-14) << k;
    }
}

TEST(Bingham, UniformDensity) {
    const auto mo = partition_and_moments({0.0, 0.0, 0.0});
    EXPECT_NEAR(std::exp(mo.log_z), 4.0 * std::numbers::pi, 1e-12);
    for (double m : mo.m) EXPECT_NEAR(m, 0.0, 1e-14);
    // <m_1^4> = 1/5, <m_1^2 m_2^2> = 1/15 on the sphere
    EXPECT_NEAR(mo.second[0][0], 0.2, 1e-14);
    EXPECT_NEAR(mo.second[0][1], 1.0 / 15.0, 1e-14);
}

TEST(Bingham, GaugeInvariance) {
    const auto a = partition_and_moments({3.0, -1.0, -2.0});
    const auto b = partition_and_moments({10.0, 6.0, 5.0});
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(a.m[i], b.m[i], 1e-13);
    EXPECT_NEAR(b.log_z - a.log_z, 7.0, 1e-12);
}

TEST(Bingham, AxialSymmetry) {
    const auto m = moments_of({2.5, 2.5, -5.0});
    EXPECT_NEAR(m[0], m[1], 1e-14);
    const SymTraceless3 u = uniaxial(0.8, Vec3::UnitZ());
    const auto st = solve_b(Diag3{u[0], u[1], -u[0] - u[1]});
    EXPECT_NEAR(st.mu[0], st.mu[1], 1e-9);
    EXPECT_GT(st.mu[2], st.mu[0]);
}

TEST(Bingham, RefinementAgreement) {
    for (const Diag3 mu : {Diag3{10.0, 0.0, -10.0}, Diag3{60.0, -10.0, -50.0}, Diag3{-30.0, 45.0, -15.0}}) {
        const auto coarse = partition_and_moments(mu);
        const auto fine = partition_and_moments(mu, {256, 512});
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(coarse.m[i], fine.m[i], 1e-10);
        EXPECT_NEAR(coarse.log_z, fine.log_z, 1e-10 * std::abs(fine.log_z));
    }
}

TEST(Bingham, NoOverflowForLargeMu) {
    const auto mo = partition_and_moments({700.0, -300.0, -400.0});
    EXPECT_TRUE(std::isfinite(mo.log_z));
    EXPECT_GT(mo.log_z, 690.0);
    for (double m : mo.m) EXPECT_TRUE(std::isfinite(m));
}

TEST(Bingham, ZeroQGivesZeroMu) {
    const auto st = solve_b({0.0, 0.0, 0.0});
    for (double m : st.mu) EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(psi(Diag3{0.0, 0.0, 0.0}), -std::log(4.0 * std::numbers::pi), 1e-10);
}

TEST(Bingham, RoundTrip) {
    const Diag3 mu0{5.0, -1.0, -4.0};
    const auto st = solve_b(moments_of(mu0));
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(st.mu[i], mu0[i], 1e-8);
}

TEST(Bingham, RoundTripRandom) {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        const double a = 40.0 * u(rng), b = 40.0 * u(rng);
        const double c = -a - b;
        if (std::abs(c) > 40.0) continue;
        const Diag3 mu0{a, b, c};
        const auto st = solve_b(moments_of(mu0));
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(st.mu[i], mu0[i], 1e-8) << a << " " << b;
    }
}

TEST(Bingham, MuOrderFollowsLambdaOrder) {
    const auto st = solve_b({0.3, -0.05, -0.25});
    EXPECT_GT(st.mu[0], st.mu[1]);
    EXPECT_GT(st.mu[1], st.mu[2]);
}

TEST(Bingham, MidpointConvexity) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-0.3, 0.6);
    int checked = 0;
    while (checked < 20) {
        const double a0 = u(rng), a1 = u(rng), b0 = u(rng), b1 = u(rng);
        const Diag3 a{a0, a1, -a0 - a1}, b{b0, b1, -b0 - b1};
        auto ok = [](const Diag3& d) {
            for (double l : d)
                if (!(l > -1.0 / 3.0 + 1e-3 && l < 2.0 / 3.0 - 1e-3)) return false;
            return true;
        };
        if (!ok(a) || !ok(b)) continue;
        const Diag3 mid{0.5 * (a0 + b0), 0.5 * (a1 + b1), -0.5 * (a0 + a1 + b0 + b1)};
        EXPECT_LE(psi(mid), 0.5 * (psi(a) + psi(b)) + 1e-10);
        ++checked;
    }
}

TEST(Bingham, GeneralEntryPointIsRotationInvariant) {
    const SymTraceless3 d = SymTraceless3::diag(0.25, -0.1);
    const Eigen::Matrix3d r = Eigen::AngleAxisd(0.7, Vec3(1.0, 2.0, -0.5).normalized()).toRotationMatrix();
    const SymTraceless3 rot = project(r * d.matrix() * r.transpose());
    EXPECT_NEAR(psi(rot), psi(Diag3{0.25, -0.1, -0.15}), 1e-9);
}

TEST(Bingham, RejectsUnsupportedInput) {
    EXPECT_THROW(solve_b({0.5, 0.0, 0.0}), std::invalid_argument);
    EXPECT_THROW(solve_b({0.7, -0.35, -0.35}), std::domain_error);
    EXPECT_THROW(solve_b(prolate_diag(1e-7)), BinghamError);
    EXPECT_THROW(partition_and_moments({std::nan(""), 0.0, 0.0}), std::invalid_argument);
}

TEST(Bingham, SharesLogarithmicRateWithQuasiEntropy) {
    std::vector<double> gaps, ps, qs;
    Diag3 guess{};
    for (double g = 1e-2; g >= 1e-5 * 0.999; g /= std::sqrt(10.0)) {
        const Diag3 lam = prolate_diag(g);
        const auto st = solve_b(lam, {}, guess);
        guess = st.mu;
        gaps.push_back(g);
        ps.push_back(st.mu[0] * lam[0] + st.mu[1] * lam[1] + st.mu[2] * lam[2] - st.log_z);
        qs.push_back(q_value(SymTraceless3::diag(lam[0], lam[1])));
    }
    ASSERT_GE(gaps.size(), 7u);
    // both diverge: positive slope against -ln(gap)
    const std::vector<double> tail_g(gaps.end() - 4, gaps.end());
    const std::vector<double> tail_p(ps.end() - 4, ps.end()), tail_q(qs.end() - 4, qs.end());
    const double sp = ln_gap_slope(tail_g, tail_p), sq = ln_gap_slope(tail_g, tail_q);
    EXPECT_NEAR(sp, 1.0, 0.05);  // two-dimensional Gaussian cap
    EXPECT_NEAR(sq, 4.0, 0.05);  // -2 ln from each determinant
    // the pointwise ratio stays bounded along the path
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        const double ratio = qs[i] / ps[i];
        EXPECT_TRUE(std::isfinite(ratio));
        if (gaps[i] <= 1e-3) EXPECT_LT(ratio, 10.0);
    }
}
