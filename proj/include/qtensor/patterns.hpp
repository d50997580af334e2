#pragma once
// Classifiers for steady patterns in the square, read off the principal
// eigenvector and biaxiality fields.

#include "qtensor/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace qtensor {

struct WorsReport {
    /// Share of off-diagonal interior nodes aligned with their triangle's axis,
    /// in the order left, right, bottom, top.
    std::array<double, 4> aligned{};
    /// Peak biaxiality on each centre-to-wall half-midline and its relative position.
    std::array<double, 4> peak{};
    std::array<double, 4> peak_position{};
    double diagonal_median_biaxiality = 0.0;
    bool is_wors = false;
};

struct DiagonalReport {
    double centre_aligned = 0.0;  ///< share of central nodes within the angle band of the diagonal
    double centre_angle_deg = 0.0;
    bool is_diagonal = false;
};

namespace detail {
inline double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// In-plane director angle in [0, 180) degrees.
inline double planar_angle(const SymTraceless3& q) {
    const Vec3 n = principal_director(q);
    const double a = std::atan2(n[1], n[0]) * 180.0 / std::numbers::pi;
    return a < 0.0 ? a + 180.0 : (a >= 180.0 ? a - 180.0 : a);
}
}  // namespace detail

/// Well order-reconstruction test: the diagonals split the square into four
/// triangles; the director follows e1 in the left and right ones and e2 in the
/// bottom and top ones, the diagonals themselves stay nearly uniaxial and the
/// biaxiality peaks strictly inside each half-midline.
inline WorsReport classify_wors(const QField& q, double max_angle_deg = 30.0, double min_share = 0.9,
                                double min_peak = 0.5) {
    const auto& g = q.grid();
    const int n = g.N;
    if (n % 2 != 0 || n < 4) throw std::invalid_argument("classify_wors: needs an even grid with N >= 4");
    WorsReport r;
    const double cos_max = std::cos(max_angle_deg * std::numbers::pi / 180.0);
    std::array<int, 4> hit{}, total{};
    std::vector<double> diag_biax;
    for (int l = 1; l < n; ++l)
        for (int m = 1; m < n; ++m) {
            const auto t = q.at(l, m);
            if (l == m || l + m == n) {
                diag_biax.push_back(biaxiality(t));
                continue;
            }
            int tri;
            if (l < m) tri = l + m < n ? 0 : 3;
            else tri = l + m > n ? 1 : 2;
            const Vec3 axis = tri < 2 ? Vec3::UnitX() : Vec3::UnitY();
            ++total[tri];
            if (std::abs(principal_director(t).dot(axis)) >= cos_max) ++hit[tri];
        }
    const int c = n / 2;
    // walks from the centre towards x = 0, x = L, y = 0, y = L
    const std::array<std::array<int, 2>, 4> dir{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
    bool ok = true;
    for (int k = 0; k < 4; ++k) {
        r.aligned[k] = total[k] ? static_cast<double>(hit[k]) / total[k] : 0.0;
        double best = -1.0;
        int at = 0;
        for (int s = 0; s <= c; ++s) {
            const double b = biaxiality(q.at(c + s * dir[k][0], c + s * dir[k][1]));
            if (b > best) {
                best = b;
                at = s;
            }
        }
        r.peak[k] = best;
        r.peak_position[k] = static_cast<double>(at) / c;
        ok = ok && r.aligned[k] >= min_share && best >= min_peak && r.peak_position[k] >= 0.2 &&
             r.peak_position[k] <= 0.8;
    }
    r.diagonal_median_biaxiality = detail::median(diag_biax);
    r.is_wors = ok && r.diagonal_median_biaxiality < 0.1;
    return r;
}

/// Diagonal state test: in the central square of side L/4 the in-plane
/// director lies within `band_deg` of one common diagonal.
inline DiagonalReport classify_diagonal(const QField& q, double band_deg = 15.0, double min_share = 0.9) {
    const auto& g = q.grid();
    DiagonalReport r;
    const double half = 0.125 * g.L;
    int in45 = 0, in135 = 0, total = 0;
    for (int l = 1; l < g.N; ++l)
        for (int m = 1; m < g.N; ++m) {
            if (std::abs(g.x(l) - 0.5 * g.L) > half + 1e-12 || std::abs(g.y(m) - 0.5 * g.L) > half + 1e-12) continue;
            const auto t = q.at(l, m);
            const Vec3 n = principal_director(t);
            ++total;
            if (std::abs(n[2]) > std::sin(band_deg * std::numbers::pi / 180.0)) continue;
            const double a = detail::planar_angle(t);
            if (std::abs(a - 45.0) <= band_deg) ++in45;
            if (std::abs(a - 135.0) <= band_deg) ++in135;
        }
    if (total == 0) throw std::invalid_argument("classify_diagonal: grid too coarse");
    r.centre_aligned = static_cast<double>(std::max(in45, in135)) / total;
    r.centre_angle_deg = detail::planar_angle(q.at(g.N / 2, g.N / 2));
    r.is_diagonal = r.centre_aligned >= min_share;
    return r;
}

/// Share of interior nodes whose biaxiality exceeds `threshold`.
inline double biaxial_area(const QField& q, double threshold) {
    const auto& g = q.grid();
    int hit = 0, total = 0;
    for (int l = 1; l < g.N; ++l)
        for (int m = 1; m < g.N; ++m) {
            ++total;
            if (biaxiality(q.at(l, m)) > threshold) ++hit;
        }
    return total ? static_cast<double>(hit) / total : 0.0;
}

}  // namespace qtensor
