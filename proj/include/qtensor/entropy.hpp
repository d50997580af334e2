#pragma once
/**
 * @file entropy.hpp
 * @brief Quasi-entropy q(Q) = -ln det(Q + I/3) - 2 ln det(I/3 - Q/2).
 *
 * q is finite exactly on the physical set and +inf elsewhere. Gradients are
 * returned as traceless symmetric tensors (the projected matrix gradient);
 * Hessians are returned in chart coordinates. The chart Jacobian lives here
 * so that callers never handle matrix calculus directly.
 */

#include "qtensor/tensor.hpp"

#include <limits>
#include <stdexcept>

namespace qtensor {

/// A real value or +infinity.
class ExtendedScalar {
public:
    constexpr ExtendedScalar() = default;
    constexpr ExtendedScalar(double v) : v_(v) {}  // NOLINT: implicit by intent
    static constexpr ExtendedScalar infinity() { return {std::numeric_limits<double>::infinity()}; }

    constexpr bool is_finite() const { return v_ < std::numeric_limits<double>::infinity(); }
    constexpr double value() const { return v_; }
    constexpr operator double() const { return v_; }  // NOLINT

private:
    double v_ = 0.0;
};

/// Chart gradient of a scalar function whose projected matrix gradient is g.
inline Vec5 chart_gradient(const SymTraceless3& g) { return chart_metric() * g.coords(); }

/// Inverse of chart_gradient: the tensor whose chart gradient is v.
inline SymTraceless3 tensor_from_chart_gradient(const Vec5& v) {
    static const Mat5 inv = chart_metric().inverse();
    return SymTraceless3(Vec5(inv * v));
}

inline ExtendedScalar q_value(const SymTraceless3& q) {
    if (!is_physical(q)) return ExtendedScalar::infinity();
    const Mat3 m = q.matrix();
    const double det_lower = (m + Mat3::Identity() / 3.0).determinant();
    const double det_upper = (Mat3::Identity() / 3.0 - 0.5 * m).determinant();
    if (det_lower <= 0.0 || det_upper <= 0.0) return ExtendedScalar::infinity();
    return -std::log(det_lower) - 2.0 * std::log(det_upper);
}

namespace detail {
inline void require_physical(const SymTraceless3& q, const char* who) {
    if (!is_physical(q))
        throw std::domain_error(std::string(who) + ": tensor outside the physical range");
}

// ln det(I + X) through the characteristic coefficients, accurate for small X.
inline double log_det_identity_plus(const Mat3& x) {
    const double t = x.trace();
    const double c2 = 0.5 * (t * t - (x * x).trace());
    return std::log1p(t + c2 + x.determinant());
}

/// q(b) - q(a) for physical a, b without cancellation when b is close to a.
inline double log_barrier_change(const SymTraceless3& a, const SymTraceless3& b) {
    const Mat3 ma = a.matrix(), d = (b - a).matrix();
    const Mat3 lower_inv = (ma + Mat3::Identity() / 3.0).inverse();
    const Mat3 upper_inv = (Mat3::Identity() / 3.0 - 0.5 * ma).inverse();
    return -log_det_identity_plus(lower_inv * d) - 2.0 * log_det_identity_plus(-0.5 * upper_inv * d);
}
}  // namespace detail

/// Projected gradient P(-(Q + I/3)^{-1} + (I/3 - Q/2)^{-1}).
inline SymTraceless3 q_grad(const SymTraceless3& q) {
    detail::require_physical(q, "q_grad");
    const Mat3 m = q.matrix();
    const Mat3 lower_inv = (m + Mat3::Identity() / 3.0).inverse();
    const Mat3 upper_inv = (Mat3::Identity() / 3.0 - 0.5 * m).inverse();
    return project(upper_inv - lower_inv);
}

/// Hessian of q in chart coordinates:
/// H_ab = tr(A^-1 E_a A^-1 E_b) + 1/2 tr(B^-1 E_a B^-1 E_b), A = Q + I/3, B = I/3 - Q/2.
inline Mat5 q_hess(const SymTraceless3& q) {
    detail::require_physical(q, "q_hess");
    const Mat3 m = q.matrix();
    const Mat3 lower_inv = (m + Mat3::Identity() / 3.0).inverse();
    const Mat3 upper_inv = (Mat3::Identity() / 3.0 - 0.5 * m).inverse();
    const auto& basis = chart_basis();
    std::array<Mat3, 5> le, ue;
    for (int a = 0; a < 5; ++a) {
        le[a] = lower_inv * basis[a];
        ue[a] = upper_inv * basis[a];
    }
    Mat5 h;
    for (int a = 0; a < 5; ++a) {
        for (int b = a; b < 5; ++b) {
            // tr(XY) = sum_ij X_ij Y_ji
            const double v = (le[a].cwiseProduct(le[b].transpose())).sum() +
                             0.5 * (ue[a].cwiseProduct(ue[b].transpose())).sum();
            h(a, b) = h(b, a) = v;
        }
    }
    return h;
}

}  // namespace qtensor
