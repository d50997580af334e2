#pragma once
/**
 * @file grid.hpp
 * @brief Uniform square grid on [0, L]^2, nodal Q-tensor fields, the
 *        cell-based first-derivative operators, node-based second-derivative
 *        stencils and the discrete energies built from them.
 *
 * Nodes are (l, m) with 0 <= l, m <= N, located at (l h, m h); l runs along x.
 * Cell (l, m) has lower-left node (l, m). Derivative indices only range over
 * {1, 2}: fields are homogeneous along z.
 */

#include "qtensor/bulk.hpp"

#include <array>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace qtensor {

struct Grid2D {
    int N = 2;
    double L = 1.0;

    Grid2D() = default;
    Grid2D(int cells, double length) : N(cells), L(length) {
        if (N < 2) throw std::invalid_argument("Grid2D: need at least 2 cells per edge");
        if (!(L > 0.0)) throw std::invalid_argument("Grid2D: length must be positive");
    }

    double h() const { return L / N; }
    int nodes_per_edge() const { return N + 1; }
    std::size_t node_count() const { return static_cast<std::size_t>((N + 1) * (N + 1)); }
    std::size_t cell_count() const { return static_cast<std::size_t>(N * N); }
    int interior_per_edge() const { return N - 1; }
    std::size_t interior_count() const { return static_cast<std::size_t>((N - 1) * (N - 1)); }

    std::size_t node(int l, int m) const { return static_cast<std::size_t>(l * (N + 1) + m); }
    std::size_t cell(int l, int m) const { return static_cast<std::size_t>(l * N + m); }
    /// Interior nodes numbered 0 .. (N-1)^2 - 1, l-major.
    std::size_t interior(int l, int m) const { return static_cast<std::size_t>((l - 1) * (N - 1) + (m - 1)); }

    bool is_boundary(int l, int m) const { return l == 0 || m == 0 || l == N || m == N; }
    double x(int l) const { return l * h(); }
    double y(int m) const { return m * h(); }

    friend bool operator==(const Grid2D& a, const Grid2D& b) { return a.N == b.N && a.L == b.L; }
};

/// Node-indexed scalar array.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const Grid2D& g, double fill = 0.0) : grid_(g), v_(g.node_count(), fill) {}

    template <class F>
    static ScalarField sample(const Grid2D& g, F&& f) {
        ScalarField s(g);
        for (int l = 0; l <= g.N; ++l)
            for (int m = 0; m <= g.N; ++m) s(l, m) = f(g.x(l), g.y(m));
        return s;
    }

    double operator()(int l, int m) const { return v_[grid_.node(l, m)]; }
    double& operator()(int l, int m) { return v_[grid_.node(l, m)]; }
    const Grid2D& grid() const { return grid_; }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

private:
    Grid2D grid_;
    std::vector<double> v_;
};

/// Cell-indexed scalar array.
class CellField {
public:
    explicit CellField(const Grid2D& g) : grid_(g), v_(g.cell_count(), 0.0) {}
    double operator()(int l, int m) const { return v_[grid_.cell(l, m)]; }
    double& operator()(int l, int m) { return v_[grid_.cell(l, m)]; }
    const Grid2D& grid() const { return grid_; }

private:
    Grid2D grid_;
    std::vector<double> v_;
};

/// Nodal field of traceless symmetric tensors, stored as five component planes.
class QField {
public:
    QField() = default;
    explicit QField(const Grid2D& g) : grid_(g) {
        for (auto& p : planes_) p = ScalarField(g);
    }
    QField(const Grid2D& g, const SymTraceless3& fill) : QField(g) {
        for (int l = 0; l <= g.N; ++l)
            for (int m = 0; m <= g.N; ++m) set(l, m, fill);
    }

    const Grid2D& grid() const { return grid_; }
    const ScalarField& plane(int a) const { return planes_[static_cast<std::size_t>(a)]; }

    SymTraceless3 at(int l, int m) const {
        const std::size_t k = grid_.node(l, m);
        return {planes_[0].values()[k], planes_[1].values()[k], planes_[2].values()[k],
                planes_[3].values()[k], planes_[4].values()[k]};
    }

    /// Writes one node; boundary nodes are rejected once the boundary is frozen.
    void set(int l, int m, const SymTraceless3& q) {
        if (boundary_frozen_ && grid_.is_boundary(l, m))
            throw std::logic_error("QField: boundary data is immutable");
        const std::size_t k = grid_.node(l, m);
        for (int a = 0; a < 5; ++a) planes_[static_cast<std::size_t>(a)].values()[k] = q[a];
    }

    void freeze_boundary() { boundary_frozen_ = true; }
    bool boundary_frozen() const { return boundary_frozen_; }

    /// Feasible iff every node is physical.
    bool is_feasible() const {
        for (int l = 0; l <= grid_.N; ++l)
            for (int m = 0; m <= grid_.N; ++m)
                if (!is_physical(at(l, m))) return false;
        return true;
    }

    bool same_boundary(const QField& o, double tol = 0.0) const {
        if (!(grid_ == o.grid_)) return false;
        for (int l = 0; l <= grid_.N; ++l)
            for (int m = 0; m <= grid_.N; ++m)
                if (grid_.is_boundary(l, m))
                    for (int a = 0; a < 5; ++a)
                        if (std::abs(at(l, m)[a] - o.at(l, m)[a]) > tol) return false;
        return true;
    }

    /// Interior unknowns as a flat vector, 5 per interior node.
    Eigen::VectorXd interior_coords() const {
        Eigen::VectorXd x(static_cast<Eigen::Index>(5 * grid_.interior_count()));
        for (int l = 1; l < grid_.N; ++l)
            for (int m = 1; m < grid_.N; ++m) {
                const auto k = static_cast<Eigen::Index>(5 * grid_.interior(l, m));
                const auto q = at(l, m);
                for (int a = 0; a < 5; ++a) x[k + a] = q[a];
            }
        return x;
    }

    void set_interior_coords(const Eigen::VectorXd& x) {
        for (int l = 1; l < grid_.N; ++l)
            for (int m = 1; m < grid_.N; ++m) {
                const auto k = static_cast<Eigen::Index>(5 * grid_.interior(l, m));
                set(l, m, SymTraceless3(Vec5(x.segment<5>(k))));
            }
    }

private:
    Grid2D grid_;
    std::array<ScalarField, 5> planes_;
    bool boundary_frozen_ = false;
};

// ---------------------------------------------------------------------------
// Cell-based first derivatives
// ---------------------------------------------------------------------------

/// Local node order inside a cell: (l,m), (l,m+1), (l+1,m), (l+1,m+1).
inline constexpr std::array<std::array<int, 2>, 4> kCellCorners{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};
inline constexpr std::array<double, 4> kD1Weights{-0.5, -0.5, 0.5, 0.5};
inline constexpr std::array<double, 4> kD2Weights{-0.5, 0.5, -0.5, 0.5};

namespace detail {
template <class NodeValue>
double cell_derivative(const std::array<double, 4>& w, double h, int l, int m, NodeValue&& u) {
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) acc += w[k] * u(l + kCellCorners[k][0], m + kCellCorners[k][1]);
    return acc / h;
}
}  // namespace detail

inline CellField d1_cell(const ScalarField& u) {
    const auto& g = u.grid();
    CellField out(g);
    for (int l = 0; l < g.N; ++l)
        for (int m = 0; m < g.N; ++m) out(l, m) = detail::cell_derivative(kD1Weights, g.h(), l, m, u);
    return out;
}

inline CellField d2_cell(const ScalarField& u) {
    const auto& g = u.grid();
    CellField out(g);
    for (int l = 0; l < g.N; ++l)
        for (int m = 0; m < g.N; ++m) out(l, m) = detail::cell_derivative(kD2Weights, g.h(), l, m, u);
    return out;
}

// ---------------------------------------------------------------------------
// Node-based second derivatives (interior nodes; boundary entries are zero)
// ---------------------------------------------------------------------------

inline ScalarField d11_node(const ScalarField& v) {
    const auto& g = v.grid();
    const double ih2 = 1.0 / (g.h() * g.h());
    ScalarField out(g);
    for (int l = 1; l < g.N; ++l)
        for (int m = 1; m < g.N; ++m) {
            auto col = [&](int i) { return v(i, m) + 0.5 * v(i, m + 1) + 0.5 * v(i, m - 1); };
            out(l, m) = -ih2 * (col(l) - 0.5 * col(l + 1) - 0.5 * col(l - 1));
        }
    return out;
}

inline ScalarField d22_node(const ScalarField& v) {
    const auto& g = v.grid();
    const double ih2 = 1.0 / (g.h() * g.h());
    ScalarField out(g);
    for (int l = 1; l < g.N; ++l)
        for (int m = 1; m < g.N; ++m) {
            auto row = [&](int j) { return v(l, j) + 0.5 * v(l + 1, j) + 0.5 * v(l - 1, j); };
            out(l, m) = -ih2 * (row(m) - 0.5 * row(m + 1) - 0.5 * row(m - 1));
        }
    return out;
}

inline ScalarField d12_node(const ScalarField& v) {
    const auto& g = v.grid();
    const double c = 1.0 / (4.0 * g.h() * g.h());
    ScalarField out(g);
    for (int l = 1; l < g.N; ++l)
        for (int m = 1; m < g.N; ++m)
            out(l, m) = c * (v(l + 1, m + 1) - v(l + 1, m - 1) - v(l - 1, m + 1) + v(l - 1, m - 1));
    return out;
}

// ---------------------------------------------------------------------------
// Discrete energies
// ---------------------------------------------------------------------------

namespace detail {

/// Chart derivatives D_1 c, D_2 c of the five components on one cell.
inline std::array<Vec5, 2> cell_gradient(const QField& q, int l, int m) {
    const double h = q.grid().h();
    std::array<Vec5, 2> d{Vec5::Zero(), Vec5::Zero()};
    for (int k = 0; k < 4; ++k) {
        const Vec5 c = q.at(l + kCellCorners[k][0], m + kCellCorners[k][1]).coords();
        d[0] += kD1Weights[k] * c;
        d[1] += kD2Weights[k] * c;
    }
    d[0] /= h;
    d[1] /= h;
    return d;
}

/// div_j = sum_{i in {1,2}} D_i Q_ij, j = 1..3.
inline Vec3 cell_divergence(const std::array<Vec5, 2>& d) {
    return {d[0][0] + d[1][2], d[0][2] + d[1][1], d[0][3] + d[1][4]};
}

}  // namespace detail

/// h^2/2 sum_cells [c21 D_s Q_ij D_s Q_ij + c22 D_i Q_ij D_s Q_sj].
inline double discrete_elastic_energy(const QField& q, double c21, double c22) {
    const auto& g = q.grid();
    const Mat5& metric = chart_metric();
    double acc = 0.0;
    for (int l = 0; l < g.N; ++l)
        for (int m = 0; m < g.N; ++m) {
            const auto d = detail::cell_gradient(q, l, m);
            const double grad_sq = d[0].dot(metric * d[0]) + d[1].dot(metric * d[1]);
            acc += c21 * grad_sq + c22 * detail::cell_divergence(d).squaredNorm();
        }
    return 0.5 * g.h() * g.h() * acc;
}

inline double discrete_elastic_energy(const QField& q, const ModelParams& p) {
    return discrete_elastic_energy(q, p.c21, p.c22);
}

/// Same energy with the c22 term in the swapped form D_s Q_ij D_i Q_sj; the two
/// differ only by a boundary-determined constant.
inline double discrete_elastic_energy_swapped(const QField& q, double c21, double c22) {
    const auto& g = q.grid();
    const Mat5& metric = chart_metric();
    double acc = 0.0;
    for (int l = 0; l < g.N; ++l)
        for (int m = 0; m < g.N; ++m) {
            const auto d = detail::cell_gradient(q, l, m);
            const std::array<Mat3, 2> grad{SymTraceless3(d[0]).matrix(), SymTraceless3(d[1]).matrix()};
            double swapped = 0.0;
            for (int s = 0; s < 2; ++s)
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 3; ++j) swapped += grad[s](i, j) * grad[i](s, j);
            acc += c21 * (d[0].dot(metric * d[0]) + d[1].dot(metric * d[1])) + c22 * swapped;
        }
    return 0.5 * g.h() * g.h() * acc;
}

namespace detail {

/// E_e[to] - E_e[from] as a sum of per-cell differences of squares.
inline double elastic_energy_change(const QField& from, const QField& to, double c21, double c22) {
    const auto& g = from.grid();
    const Mat5& metric = chart_metric();
    double acc = 0.0;
    for (int l = 0; l < g.N; ++l)
        for (int m = 0; m < g.N; ++m) {
            const auto a = cell_gradient(from, l, m), b = cell_gradient(to, l, m);
            const std::array<Vec5, 2> diff{b[0] - a[0], b[1] - a[1]};
            if (diff[0].isZero(0.0) && diff[1].isZero(0.0)) continue;
            const double grad = diff[0].dot(metric * (a[0] + b[0])) + diff[1].dot(metric * (a[1] + b[1]));
            const Vec3 da = cell_divergence(a), db = cell_divergence(b);
            acc += c21 * grad + c22 * (db - da).dot(db + da);
        }
    return 0.5 * g.h() * g.h() * acc;
}

}  // namespace detail

/// h^2 sum over interior nodes of f_b; the boundary constant is omitted.
inline ExtendedScalar discrete_bulk_energy(const QField& q, double c02) {
    const auto& g = q.grid();
    double acc = 0.0;
    for (int l = 1; l < g.N; ++l)
        for (int m = 1; m < g.N; ++m) {
            const ExtendedScalar f = f_bulk(q.at(l, m), c02);
            if (!f.is_finite()) return ExtendedScalar::infinity();
            acc += f.value();
        }
    return g.h() * g.h() * acc;
}

inline ExtendedScalar discrete_energy(const QField& q, const ModelParams& p) {
    const ExtendedScalar eb = discrete_bulk_energy(q, p.c02);
    if (!eb.is_finite()) return eb;
    return eb.value() + discrete_elastic_energy(q, p);
}

/// P(-c21 D_kk Q_ij - c22 D_ik Q_kj) at interior nodes (zero on the boundary).
inline QField l_h(const QField& q, double c21, double c22) {
    const auto& g = q.grid();
    std::array<ScalarField, 5> d11, d22, d12;
    for (int a = 0; a < 5; ++a) {
        d11[a] = d11_node(q.plane(a));
        d22[a] = d22_node(q.plane(a));
        d12[a] = d12_node(q.plane(a));
    }
    // Rows 1 and 2 of Q: Q_1j = (c0, c2, c3), Q_2j = (c2, c1, c4).
    const std::array<int, 3> row1{0, 2, 3}, row2{2, 1, 4};
    QField out(g);
    for (int l = 1; l < g.N; ++l)
        for (int m = 1; m < g.N; ++m) {
            SymTraceless3 lap;
            for (int a = 0; a < 5; ++a) lap[a] = d11[a](l, m) + d22[a](l, m);
            Mat3 lm = -c21 * lap.matrix();
            for (int j = 0; j < 3; ++j) {
                // sum_k D_ik Q_kj for i = 1, 2
                const double r1 = d11[row1[j]](l, m) + d12[row2[j]](l, m);
                const double r2 = d12[row1[j]](l, m) + d22[row2[j]](l, m);
                lm(0, j) -= c22 * r1;
                lm(1, j) -= c22 * r2;
            }
            out.set(l, m, project(lm));
        }
    return out;
}

inline QField l_h(const QField& q, const ModelParams& p) { return l_h(q, p.c21, p.c22); }

// ---------------------------------------------------------------------------
// Elastic stiffness (cell route): sum_cells f_e = 1/2 x^T K x in chart coordinates
// ---------------------------------------------------------------------------

/// 20x20 stiffness of one cell over (corner k, component a) -> 5k + a, in units of 1/h^2.
inline Eigen::Matrix<double, 20, 20> cell_stiffness(double c21, double c22, double h) {
    using Mat20 = Eigen::Matrix<double, 20, 20>;
    using Vec20 = Eigen::Matrix<double, 20, 1>;
    Mat20 k = Mat20::Zero();
    const Mat5& metric = chart_metric();
    const std::array<const std::array<double, 4>*, 2> w{&kD1Weights, &kD2Weights};
    for (int s = 0; s < 2; ++s)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                k.block<5, 5>(5 * i, 5 * j) += c21 * (*w[s])[i] * (*w[s])[j] * metric;
    // divergence rows: (D1 c0 + D2 c2), (D1 c2 + D2 c1), (D1 c3 + D2 c4)
    const std::array<std::array<int, 2>, 3> div_comp{{{0, 2}, {2, 1}, {3, 4}}};
    for (const auto& dc : div_comp) {
        Vec20 r = Vec20::Zero();
        for (int i = 0; i < 4; ++i) {
            r[5 * i + dc[0]] += kD1Weights[i];
            r[5 * i + dc[1]] += kD2Weights[i];
        }
        k += c22 * r * r.transpose();
    }
    return k / (h * h);
}

/// Chart gradient of sum_cells f_e with respect to every nodal component (5 per node).
inline Eigen::VectorXd elastic_chart_gradient(const QField& q, double c21, double c22) {
    const auto& g = q.grid();
    const auto kc = cell_stiffness(c21, c22, g.h());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(5 * g.node_count()));
    Eigen::Matrix<double, 20, 1> x;
    for (int l = 0; l < g.N; ++l)
        for (int m = 0; m < g.N; ++m) {
            for (int k = 0; k < 4; ++k)
                x.segment<5>(5 * k) = q.at(l + kCellCorners[k][0], m + kCellCorners[k][1]).coords();
            const Eigen::Matrix<double, 20, 1> y = kc * x;
            for (int k = 0; k < 4; ++k) {
                const auto n = static_cast<Eigen::Index>(
                    5 * g.node(l + kCellCorners[k][0], m + kCellCorners[k][1]));
                out.segment<5>(n) += y.segment<5>(5 * k);
            }
        }
    return out;
}

// ---------------------------------------------------------------------------
// Snapshot I/O
// ---------------------------------------------------------------------------

inline constexpr const char* kSnapshotHeader =
    "l,m,Q11,Q22,Q12,Q13,Q23,lambda_max,lambda_min,biaxiality,n1,n2,n3";

/// One row per node, l-major; full round-trip precision.
inline void write_snapshot_csv(std::ostream& os, const QField& q) {
    const auto& g = q.grid();
    os << kSnapshotHeader << '\n';
    char buf[512];
    for (int l = 0; l <= g.N; ++l)
        for (int m = 0; m <= g.N; ++m) {
            const auto t = q.at(l, m);
            const auto ev = eigenvalues(t);
            const Vec3 n = principal_director(t);
            std::snprintf(buf, sizeof buf,
                          "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", l, m,
                          t[0], t[1], t[2], t[3], t[4], ev.max(), ev.min(), biaxiality(t), n[0], n[1], n[2]);
            os << buf;
        }
}

/// Reads the tensor columns of a snapshot written by write_snapshot_csv.
inline QField read_snapshot_csv(std::istream& is, double L) {
    std::string line;
    if (!std::getline(is, line) || line != kSnapshotHeader)
        throw std::runtime_error("snapshot: unexpected header");
    struct Row {
        int l, m;
        std::array<double, 5> c;
    };
    std::vector<Row> rows;
    int max_l = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        Row r{};
        std::getline(ss, tok, ',');
        r.l = std::stoi(tok);
        std::getline(ss, tok, ',');
        r.m = std::stoi(tok);
        for (auto& c : r.c) {
            std::getline(ss, tok, ',');
            c = std::stod(tok);
        }
        max_l = std::max(max_l, r.l);
        rows.push_back(r);
    }
    Grid2D g(max_l, L);
    if (rows.size() != g.node_count()) throw std::runtime_error("snapshot: node count mismatch");
    QField q(g);
    for (const auto& r : rows) q.set(r.l, r.m, {r.c[0], r.c[1], r.c[2], r.c[3], r.c[4]});
    return q;
}

}  // namespace qtensor
