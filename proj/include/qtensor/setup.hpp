#pragma once
// Initial and boundary data for the square-domain experiments.

#include "qtensor/grid.hpp"

#include <numbers>
#include <random>

namespace qtensor {

enum class BoundaryKind {
    uniform,  ///< bulk minimizer with the configured director everywhere on the boundary
    wall      ///< e1 on x = 0, 1 and e2 on y = 0, 1 (x-rule at the corners)
};

enum class InitialKind {
    perturbed,  ///< Q0 + eps sin(2 pi x) sin(2 pi y) (n n - I/3)
    uniform     ///< Q0 with the configured director
};

struct SetupSpec {
    BoundaryKind boundary = BoundaryKind::uniform;
    InitialKind initial = InitialKind::perturbed;
    Vec3 director = Vec3::UnitX();
    double epsilon = 0.05;
    /// Amplitude of an optional seeded random interior perturbation.
    double noise = 0.0;
};

inline Vec3 wall_director(const Grid2D& g, int l, int m) {
    if (l == 0 || l == g.N) return Vec3::UnitX();
    if (m == 0 || m == g.N) return Vec3::UnitY();
    throw std::invalid_argument("wall_director: not a boundary node");
}

/// Builds the starting field on an N x N grid. Boundary nodes carry the
/// Dirichlet data; the result is feasible or an exception is thrown.
inline QField initial_field(const ModelParams& p, const SetupSpec& spec, std::uint64_t seed = 0) {
    const Grid2D g(p.N, p.L);
    const double s2 = nematic_order(p.c02);
    const Vec3 n = spec.director.normalized();
    const SymTraceless3 basis = uniaxial(1.0, n);
    QField q(g);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    constexpr double k = 2.0 * std::numbers::pi;
    for (int l = 0; l <= g.N; ++l)
        for (int m = 0; m <= g.N; ++m) {
            if (g.is_boundary(l, m)) {
                const Vec3 nb = spec.boundary == BoundaryKind::wall ? wall_director(g, l, m) : n;
                q.set(l, m, uniaxial(s2, nb));
                continue;
            }
            double amp = s2;
            if (spec.initial == InitialKind::perturbed)
                amp += spec.epsilon * std::sin(k * g.x(l) / p.L) * std::sin(k * g.y(m) / p.L);
            SymTraceless3 t = amp * basis;
            if (spec.noise > 0.0) {
                SymTraceless3 r;
                for (int a = 0; a < 5; ++a) r[a] = spec.noise * u(rng);
                t += r;
            }
            q.set(l, m, t);
        }
    if (!q.is_feasible()) throw std::invalid_argument("initial_field: data leaves the physical range");
    return q;
}

}  // namespace qtensor
