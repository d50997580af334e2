#pragma once
/**
 * @file tensor.hpp
 * @brief Symmetric traceless 3x3 tensors stored in a 5-component chart.
 *
 * The chart is (Q11, Q22, Q12, Q13, Q23) with Q33 = -Q11 - Q22. Every
 * derivative elsewhere in the library is taken in these coordinates.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qtensor {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

/// Symmetric traceless tensor, 5 independent components.
class SymTraceless3 {
public:
    static constexpr int kDim = 5;

    constexpr SymTraceless3() = default;
    constexpr SymTraceless3(double q11, double q22, double q12, double q13, double q23)
        : c_{q11, q22, q12, q13, q23} {}
    explicit SymTraceless3(const Vec5& v) : c_{v[0], v[1], v[2], v[3], v[4]} {}

    static SymTraceless3 diag(double d1, double d2) { return {d1, d2, 0.0, 0.0, 0.0}; }

    constexpr double operator[](int a) const { return c_[static_cast<std::size_t>(a)]; }
    constexpr double& operator[](int a) { return c_[static_cast<std::size_t>(a)]; }

    constexpr double q11() const { return c_[0]; }
    constexpr double q22() const { return c_[1]; }
    constexpr double q33() const { return -c_[0] - c_[1]; }
    constexpr double q12() const { return c_[2]; }
    constexpr double q13() const { return c_[3]; }
    constexpr double q23() const { return c_[4]; }

    Mat3 matrix() const {
        Mat3 m;
        m << c_[0], c_[2], c_[3],
             c_[2], c_[1], c_[4],
             c_[3], c_[4], q33();
        return m;
    }

    Vec5 coords() const { return Vec5(c_[0], c_[1], c_[2], c_[3], c_[4]); }
    const std::array<double, 5>& components() const { return c_; }

    bool is_finite() const {
        return std::all_of(c_.begin(), c_.end(), [](double x) { return std::isfinite(x); });
    }

    SymTraceless3& operator+=(const SymTraceless3& o) {
        for (int a = 0; a < kDim; ++a) (*this)[a] += o[a];
        return *this;
    }
    SymTraceless3& operator-=(const SymTraceless3& o) {
        for (int a = 0; a < kDim; ++a) (*this)[a] -= o[a];
        return *this;
    }
    SymTraceless3& operator*=(double s) {
        for (auto& x : c_) x *= s;
        return *this;
    }
    friend SymTraceless3 operator+(SymTraceless3 a, const SymTraceless3& b) { return a += b; }
    friend SymTraceless3 operator-(SymTraceless3 a, const SymTraceless3& b) { return a -= b; }
    friend SymTraceless3 operator*(double s, SymTraceless3 a) { return a *= s; }
    friend SymTraceless3 operator*(SymTraceless3 a, double s) { return a *= s; }
    friend SymTraceless3 operator-(SymTraceless3 a) { return a *= -1.0; }
    friend bool operator==(const SymTraceless3&, const SymTraceless3&) = default;

private:
    std::array<double, 5> c_{};
};

/// Eigenvalues sorted descending.
struct EigenTriple {
    std::array<double, 3> lambda{};
    double max() const { return lambda[0]; }
    double min() const { return lambda[2]; }
};

/// Basis matrices E_a = dQ/dc_a of the chart.
inline const std::array<Mat3, 5>& chart_basis() {
    static const std::array<Mat3, 5> basis = [] {
        std::array<Mat3, 5> e;
        for (auto& m : e) m.setZero();
        e[0](0, 0) = 1.0; e[0](2, 2) = -1.0;
        e[1](1, 1) = 1.0; e[1](2, 2) = -1.0;
        e[2](0, 1) = e[2](1, 0) = 1.0;
        e[3](0, 2) = e[3](2, 0) = 1.0;
        e[4](1, 2) = e[4](2, 1) = 1.0;
        return e;
    }();
    return basis;
}

/// Metric of the full double contraction in chart coordinates: A.B = a^T G b.
inline const Mat5& chart_metric() {
    static const Mat5 g = [] {
        Mat5 m = Mat5::Zero();
        m(0, 0) = 2.0; m(0, 1) = 1.0;
        m(1, 0) = 1.0; m(1, 1) = 2.0;
        m(2, 2) = m(3, 3) = m(4, 4) = 2.0;
        return m;
    }();
    return g;
}

/// Orthogonal projection of an arbitrary 3x3 matrix onto the traceless symmetric space.
inline SymTraceless3 project(const Mat3& a) {
    const double third_tr = a.trace() / 3.0;
    return {a(0, 0) - third_tr,
            a(1, 1) - third_tr,
            0.5 * (a(0, 1) + a(1, 0)),
            0.5 * (a(0, 2) + a(2, 0)),
            0.5 * (a(1, 2) + a(2, 1))};
}

inline SymTraceless3 uniaxial(double s, const Vec3& n) {
    if (!(std::abs(n.squaredNorm() - 1.0) <= 2e-12))
        throw std::invalid_argument("uniaxial: director must be a unit vector");
    return project(s * (n * n.transpose()));
}

inline double dot(const SymTraceless3& a, const SymTraceless3& b) {
    return a[0] * b[0] + a[1] * b[1] + (a[0] + a[1]) * (b[0] + b[1]) +
           2.0 * (a[2] * b[2] + a[3] * b[3] + a[4] * b[4]);
}

inline double norm_sq(const SymTraceless3& a) { return dot(a, a); }

inline double det(const SymTraceless3& q) { return q.matrix().determinant(); }

/// Closed-form (trigonometric) eigenvalues of a symmetric 3x3 matrix, descending.
inline EigenTriple eigenvalues(const Mat3& a) {
    const double third_tr = a.trace() / 3.0;
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double d0 = a(0, 0) - third_tr, d1 = a(1, 1) - third_tr, d2 = a(2, 2) - third_tr;
    const double p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
    EigenTriple out;
    if (p2 < 1e-300) {
        out.lambda = {third_tr, third_tr, third_tr};
        return out;
    }
    if (p1 == 0.0) {
        out.lambda = {a(0, 0), a(1, 1), a(2, 2)};
        std::sort(out.lambda.begin(), out.lambda.end(), std::greater<>());
        return out;
    }
    const double p = std::sqrt(p2 / 6.0);
    Mat3 b = (a - third_tr * Mat3::Identity()) / p;
    const double r = std::clamp(0.5 * b.determinant(), -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    double l1 = third_tr + 2.0 * p * std::cos(phi);
    double l3 = third_tr + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    // Near a double root only the simple eigenvalue is well conditioned from
    // the angle; deflate the pair from the trace instead.
    if (r > 1.0 - 1e-12) {
        l3 = 0.5 * (3.0 * third_tr - l1);
    } else if (r < -1.0 + 1e-12) {
        l1 = 0.5 * (3.0 * third_tr - l3);
    }
    const double l2 = 3.0 * third_tr - l1 - l3;
    out.lambda = {l1, l2, l3};
    std::sort(out.lambda.begin(), out.lambda.end(), std::greater<>());
    return out;
}

inline EigenTriple eigenvalues(const SymTraceless3& q) { return eigenvalues(q.matrix()); }

/// Unit eigenvector of a symmetric matrix for eigenvalue `lambda`.
inline Vec3 eigenvector(const Mat3& a, double lambda) {
    const Mat3 s = a - lambda * Mat3::Identity();
    const std::array<Vec3, 3> cand{s.row(0).cross(s.row(1)).transpose(),
                                   s.row(0).cross(s.row(2)).transpose(),
                                   s.row(1).cross(s.row(2)).transpose()};
    const auto best = std::max_element(cand.begin(), cand.end(), [](const Vec3& x, const Vec3& y) {
        return x.squaredNorm() < y.squaredNorm();
    });
    if (best->squaredNorm() > 1e-28) return best->normalized();
    // Rank <= 1: any vector orthogonal to the nonzero row works.
    for (int i = 0; i < 3; ++i) {
        const Vec3 row = s.row(i).transpose();
        if (row.squaredNorm() > 1e-28) {
            Vec3 t = std::abs(row[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
            return row.cross(t).normalized();
        }
    }
    return Vec3::UnitX();
}

/// Principal eigenvector with sign normalized so the first nonzero entry is positive.
inline Vec3 principal_director(const SymTraceless3& q) {
    const Mat3 m = q.matrix();
    Vec3 n = eigenvector(m, eigenvalues(m).max());
    for (int i = 0; i < 3; ++i) {
        if (std::abs(n[i]) > 1e-12) {
            if (n[i] < 0.0) n = -n;
            break;
        }
    }
    return n;
}

namespace detail {
inline bool leading_minors_positive(const Mat3& m) {
    return m(0, 0) > 0.0 &&
           m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) > 0.0 &&
           m.determinant() > 0.0;
}
}  // namespace detail

/// True iff all eigenvalues lie strictly inside (-1/3, 2/3); decided by Sylvester's criterion.
inline bool is_physical(const SymTraceless3& q) {
    if (!q.is_finite()) return false;
    const Mat3 m = q.matrix();
    const Mat3 lower = m + Mat3::Identity() / 3.0;
    const Mat3 upper = Mat3::Identity() / 3.0 - 0.5 * m;
    return detail::leading_minors_positive(lower) && detail::leading_minors_positive(upper);
}

/// 1 - 6 (tr Q^3)^2 / (tr Q^2)^3, zero for a vanishing tensor.
inline double biaxiality(const SymTraceless3& q) {
    const double tr2 = norm_sq(q);
    if (tr2 < 1e-14) return 0.0;
    const double tr3 = 3.0 * det(q);
    return std::clamp(1.0 - 6.0 * tr3 * tr3 / (tr2 * tr2 * tr2), 0.0, 1.0);
}

}  // namespace qtensor
