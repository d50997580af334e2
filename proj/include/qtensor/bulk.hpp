#pragma once
/**
 * @file bulk.hpp
 * @brief Bulk energy f_b(Q) = q(Q) - c02/2 |Q|^2, its uniaxial reduction and
 *        the classification of uniaxial stationary points.
 */

#include "qtensor/entropy.hpp"

#include <string>
#include <vector>

namespace qtensor {

struct ModelParams {
    double c02 = 20.0;
    double c21 = 6.0;
    double c22 = 2.0;
    double L = 1.0;
    int N = 16;
    double dt = 1e-3;

    double h() const { return L / N; }

    /// Throws std::invalid_argument when coefficients break positivity.
    void validate() const {
        if (!(c02 > 0.0)) throw std::invalid_argument("c02 must be positive");
        if (!(c21 > 0.0)) throw std::invalid_argument("c21 must be positive");
        if (!(c21 + c22 > 0.0)) throw std::invalid_argument("c21 + c22 must be positive");
        if (!(L > 0.0)) throw std::invalid_argument("domain length must be positive");
        if (N < 2) throw std::invalid_argument("need at least 2 cells per edge");
        if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    }
};

inline ExtendedScalar f_bulk(const SymTraceless3& q, double c02) {
    const ExtendedScalar e = q_value(q);
    if (!e.is_finite()) return e;
    return e.value() - 0.5 * c02 * norm_sq(q);
}

struct UniaxialEnergy {
    double value;
    double d1;
    double d2;
};

/// f_b(s (n n - I/3)) as a function of s, with first and second derivatives.
inline UniaxialEnergy uniaxial_energy(double s, double c02) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (!(s > -0.5 && s < 1.0)) return {inf, inf, inf};
    const double a = 1.0 + 2.0 * s, b = 1.0 - s, c = 2.0 + s;
    const double value = -std::log(a / 3.0) - 4.0 * std::log(b / 3.0) - 4.0 * std::log(c / 6.0) -
                         c02 / 3.0 * s * s;
    const double d1 = -2.0 / a + 4.0 / b - 4.0 / c - 2.0 * c02 / 3.0 * s;
    const double d2 = 4.0 / (a * a) + 4.0 / (b * b) + 4.0 / (c * c) - 2.0 * c02 / 3.0;
    return {value, d1, d2};
}

/// Critical coupling where s = 0 changes stability.
inline constexpr double kChiDoubleStar = 13.5;

enum class Regime { single, metastable, swapped, degenerate };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::single: return "single";
        case Regime::metastable: return "metastable";
        case Regime::swapped: return "swapped";
        case Regime::degenerate: return "degenerate";
    }
    return "?";
}

struct StationaryRoot {
    double s;
    bool stable;
};

struct StationaryReport {
    std::vector<StationaryRoot> roots;  // ascending in s
    Regime regime = Regime::single;
};

namespace detail {

// d/ds f_b = s * (18 (1+s) / ((1+2s)(1-s)(2+s)) - 2 c02 / 3); this is the bracket.
inline double reduced_slope(double s, double c02) {
    return 18.0 * (1.0 + s) / ((1.0 + 2.0 * s) * (1.0 - s) * (2.0 + s)) - 2.0 * c02 / 3.0;
}

template <class F>
double bisect(F&& f, double lo, double hi, double tol = 1e-12) {
    double flo = f(lo);
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline double compute_chi_star() {
    // For given s > 0 the coupling that makes s stationary (inner bisection on
    // the linear-in-c02 slope), then bisect on s for a vanishing curvature.
    auto coupling_for = [](double s) {
        return bisect([s](double c) { return uniaxial_energy(s, c).d1; }, 0.0, 1e7, 1e-13);
    };
    auto curvature = [&](double s) { return uniaxial_energy(s, coupling_for(s)).d2; };
    const double s_star = bisect(curvature, 1e-6, 1.0 - 1e-6, 1e-13);
    return coupling_for(s_star);
}

}  // namespace detail

/// Smallest c02 admitting a positive double root of d/ds f_b (saddle-node threshold).
inline double chi_star() {
    static const double value = detail::compute_chi_star();
    return value;
}

/// All stationary points of the uniaxial reduction in (-1/2, 1).
inline StationaryReport stationary_points(double c02) {
    if (!(c02 > 0.0)) throw std::invalid_argument("stationary_points: c02 must be positive");
    StationaryReport rep;
    const double lo = -0.5 + 1e-9, hi = 1.0 - 1e-9;

    std::vector<double> roots{0.0};
    constexpr int kScan = 4000;
    auto g = [c02](double s) { return detail::reduced_slope(s, c02); };
    double prev_s = lo, prev_g = g(lo);
    for (int k = 1; k <= kScan; ++k) {
        const double s = lo + (hi - lo) * k / kScan;
        const double gs = g(s);
        if ((gs < 0.0) != (prev_g < 0.0)) roots.push_back(detail::bisect(g, prev_s, s));
        prev_s = s;
        prev_g = gs;
    }
    std::sort(roots.begin(), roots.end());
    for (double s : roots) rep.roots.push_back({s, uniaxial_energy(s, c02).d2 > 0.0});

    const double cs = chi_star();
    if (std::abs(c02 - cs) < 1e-8 || std::abs(c02 - kChiDoubleStar) < 1e-8) {
        rep.regime = Regime::degenerate;
    } else if (c02 < cs) {
        rep.regime = Regime::single;
    } else if (c02 < kChiDoubleStar) {
        rep.regime = Regime::metastable;
    } else {
        rep.regime = Regime::swapped;
    }
    return rep;
}

/// Largest stationary s: the nematic bulk minimizer for c02 > chi*.
inline double nematic_order(double c02) {
    const auto rep = stationary_points(c02);
    if (rep.roots.back().s <= 0.0)
        throw std::domain_error("nematic_order: no positive stationary point for this c02");
    return rep.roots.back().s;
}

}  // namespace qtensor
