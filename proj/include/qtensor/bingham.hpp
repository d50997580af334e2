#pragma once
/**
 * @file bingham.hpp
 * @brief Bingham entropy psi(Q) = B.Q - ln Z by spherical quadrature.
 *
 * Only used as an oracle for the asymptotics of the quasi-entropy; nothing on
 * the flow path depends on it. Everything works with the diagonal of Q and of
 * B (rotation invariance takes care of the rest).
 *
 * The sphere is parametrized with the polar axis along the largest mu, so
 * the exponent is mu_k - (1 - x^2)(d_a cos^2 phi + d_b sin^2 phi) with
 * d >= 0. The mu_k factor is kept out of the sum (log-sum-exp). In x the rule
 * is Gauss-Legendre, split into geometrically graded panels near the pole once
 * the density becomes sharper than a single panel can resolve. In phi it is
 * the periodic trapezoid rule.
 */

#include "qtensor/entropy.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace qtensor {

using Diag3 = std::array<double, 3>;

struct QuadratureOrder {
    int theta = 64;  ///< Gauss-Legendre nodes per panel in cos(theta)
    int phi = 128;   ///< trapezoid nodes on [0, 2 pi)
};

struct BinghamMoments {
    double log_z = 0.0;
    Diag3 m{};                      ///< <m_i^2> - 1/3
    std::array<Diag3, 3> second{};  ///< <m_i^2 m_j^2>
};

struct BinghamState {
    Diag3 mu{};
    double z = 0.0;
    double log_z = 0.0;
    int iters = 0;
};

class BinghamError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute the derivative at the converged node
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

inline const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre_cached(int n) {
    // Only a handful of orders are ever used; a small table avoids recomputation.
    static thread_local std::vector<std::pair<int, std::pair<std::vector<double>, std::vector<double>>>> table;
    for (const auto& [k, v] : table)
        if (k == n) return v;
    table.emplace_back(n, gauss_legendre(n));
    return table.back().second;
}

/// Panel edges in t = 1 - x, from 1 down to 0.
inline std::vector<double> pole_panels(double d_max) {
    std::vector<double> edges{1.0};
    if (d_max > 64.0) {
        double a = 1.0;
        while (a * d_max > 1.0 / 64.0) {
            a /= 8.0;
            edges.push_back(a);
        }
    }
    edges.push_back(0.0);
    return edges;
}

}  // namespace detail

/// Z and second moments of rho(m) ~ exp(sum_i mu_i m_i^2). Any gauge of mu is accepted.
inline BinghamMoments partition_and_moments(const Diag3& mu, const QuadratureOrder& order = {}) {
    for (double v : mu)
        if (!std::isfinite(v)) throw std::invalid_argument("partition_and_moments: non-finite mu");
    if (order.theta < 2 || order.phi < 4) throw std::invalid_argument("partition_and_moments: order too small");

    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (mu[i] > mu[k]) k = i;
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    const double da = mu[k] - mu[a], db = mu[k] - mu[b];

    const auto& [gx, gw] = detail::gauss_legendre_cached(order.theta);
    const auto edges = detail::pole_panels(std::max(da, db));
    std::vector<double> c2(order.phi), s2(order.phi);
    for (int j = 0; j < order.phi; ++j) {
        const double ph = 2.0 * std::numbers::pi * j / order.phi;
        c2[j] = std::cos(ph) * std::cos(ph);
        s2[j] = 1.0 - c2[j];
    }
    const double wphi = 2.0 * std::numbers::pi / order.phi;

    // integrals of 1, m_k^2, m_a^2, m_b^2 and products, over the upper hemisphere
    double i0 = 0.0;
    Diag3 i1{};
    std::array<Diag3, 3> i2{};
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double hi = edges[p], lo = edges[p + 1];
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        for (std::size_t n = 0; n < gx.size(); ++n) {
            const double t = mid + half * gx[n];
            const double u = t * (2.0 - t);  // 1 - x^2 without cancellation
            const double x2 = (1.0 - t) * (1.0 - t);
            for (int j = 0; j < order.phi; ++j) {
                const double e = std::exp(-u * (da * c2[j] + db * s2[j]));
                const double w = gw[n] * half * wphi * e;
                const double ma = u * c2[j], mb = u * s2[j];
                const Diag3 mm{x2, ma, mb};
                i0 += w;
                for (int r = 0; r < 3; ++r) {
                    i1[r] += w * mm[r];
                    for (int s = r; s < 3; ++s) i2[r][s] += w * mm[r] * mm[s];
                }
            }
        }
    }
    // local index 0 -> k, 1 -> a, 2 -> b
    const std::array<int, 3> glob{k, a, b};
    BinghamMoments out;
    out.log_z = mu[k] + std::log(2.0 * i0);
    for (int r = 0; r < 3; ++r) {
        out.m[glob[r]] = i1[r] / i0 - 1.0 / 3.0;
        for (int s = r; s < 3; ++s) out.second[glob[r]][glob[s]] = out.second[glob[s]][glob[r]] = i2[r][s] / i0;
    }
    // The pole moment is formed from the other two, which carry full relative accuracy.
    out.m[k] = -(out.m[a] + out.m[b]);
    return out;
}

namespace detail {
inline Diag3 require_diag_physical(const Diag3& lambda) {
    const double tr = lambda[0] + lambda[1] + lambda[2];
    if (std::abs(tr) > 1e-12) throw std::invalid_argument("solve_b: diagonal must be traceless");
    for (double l : lambda)
        if (!(l > -1.0 / 3.0 && l < 2.0 / 3.0)) throw std::domain_error("solve_b: diagonal outside the physical range");
    return lambda;
}

inline double objective(const Diag3& mu, const Diag3& lambda, const QuadratureOrder& order) {
    return partition_and_moments(mu, order).log_z - (mu[0] * lambda[0] + mu[1] * lambda[1] + mu[2] * lambda[2]);
}
}  // namespace detail

/// Smallest lambda_min + 1/3 for which solve_b is supported.
inline constexpr double kBinghamMinGap = 1e-6;

/// Newton on the concave dual: the returned mu (traceless) reproduces diag(Q) as moments.
inline BinghamState solve_b(const Diag3& lambda, const QuadratureOrder& order = {}, Diag3 guess = {}) {
    detail::require_diag_physical(lambda);
    const double gap = std::min({lambda[0], lambda[1], lambda[2]}) + 1.0 / 3.0;
    if (gap < kBinghamMinGap * (1.0 - 1e-9)) throw BinghamError("solve_b: lambda_min + 1/3 below the supported range");

    // unknowns (mu0, mu1), mu2 = -mu0 - mu1
    Eigen::Vector2d v(guess[0] - (guess[0] + guess[1] + guess[2]) / 3.0,
                      guess[1] - (guess[0] + guess[1] + guess[2]) / 3.0);
    auto full = [](const Eigen::Vector2d& y) { return Diag3{y[0], y[1], -y[0] - y[1]}; };
    for (int it = 0; it < 200; ++it) {
        const Diag3 mu = full(v);
        const auto mo = partition_and_moments(mu, order);
        Eigen::Vector2d g;
        for (int j = 0; j < 2; ++j) g[j] = (mo.m[j] - mo.m[2]) - (lambda[j] - lambda[2]);
        bool done = true;
        for (int i = 0; i < 3; ++i) {
            const double err = std::abs(mo.m[i] - lambda[i]);
            done = done && err <= 1e-12 + 1e-10 * (lambda[i] + 1.0 / 3.0);
        }
        if (done) return {mu, std::exp(mo.log_z), mo.log_z, it};

        Eigen::Matrix2d h;
        const auto cov = [&](int r, int s) { return mo.second[r][s] - (mo.m[r] + 1.0 / 3.0) * (mo.m[s] + 1.0 / 3.0); };
        for (int r = 0; r < 2; ++r)
            for (int s = 0; s < 2; ++s) h(r, s) = cov(r, s) - cov(r, 2) - cov(2, s) + cov(2, 2);
        const Eigen::Vector2d dir = -h.ldlt().solve(g);
        const double f0 = mo.log_z - (mu[0] * lambda[0] + mu[1] * lambda[1] + mu[2] * lambda[2]);
        double step = 1.0;
        bool accepted = false;
        for (int k = 0; k < 60; ++k, step *= 0.5) {
            const Eigen::Vector2d trial = v + step * dir;
            if (detail::objective(full(trial), lambda, order) <= f0 + 1e-4 * step * g.dot(dir) + 1e-13 * (1.0 + std::abs(f0))) {
                v = trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) throw BinghamError("solve_b: line search failed");
    }
    throw BinghamError("solve_b: no convergence");
}

/// psi(Q) = sum_i mu_i lambda_i - ln Z for diagonal Q.
inline double psi(const Diag3& lambda, const QuadratureOrder& order = {}, const Diag3& guess = {}) {
    const auto st = solve_b(lambda, order, guess);
    return st.mu[0] * lambda[0] + st.mu[1] * lambda[1] + st.mu[2] * lambda[2] - st.log_z;
}

/// General entry point: diagonalizes Q first.
inline double psi(const SymTraceless3& q, const QuadratureOrder& order = {}) {
    const auto ev = eigenvalues(q);
    return psi(Diag3{ev.lambda[0], ev.lambda[1], -ev.lambda[0] - ev.lambda[1]}, order);
}

/// Prolate uniaxial diagonal with lambda_min + 1/3 = gap.
inline Diag3 prolate_diag(double gap) {
    const double lo = -1.0 / 3.0 + gap;
    return {-2.0 * lo, lo, lo};
}

}  // namespace qtensor
