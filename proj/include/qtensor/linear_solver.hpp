#pragma once
/**
 * @file linear_solver.hpp
 * @brief SPD solves for the Newton systems: block-Jacobi preconditioned CG with
 *        a sparse LDL^T fallback.
 */

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <stdexcept>
#include <vector>

namespace qtensor {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct LinearSolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    bool used_direct = false;
};

/// Inverse of every 5x5 diagonal block of an SPD matrix.
class BlockJacobi5 {
public:
    explicit BlockJacobi5(const SparseMatrix& a) {
        const Eigen::Index blocks = a.rows() / 5;
        inv_.resize(static_cast<std::size_t>(blocks));
        for (Eigen::Index b = 0; b < blocks; ++b) {
            Eigen::Matrix<double, 5, 5> blk = Eigen::Matrix<double, 5, 5>::Zero();
            for (int i = 0; i < 5; ++i)
                for (SparseMatrix::InnerIterator it(a, 5 * b + i); it; ++it) {
                    const Eigen::Index j = it.col() - 5 * b;
                    if (j >= 0 && j < 5) blk(i, j) = it.value();
                }
            inv_[static_cast<std::size_t>(b)] = blk.inverse();
        }
    }

    void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
        z.resize(r.size());
        for (std::size_t b = 0; b < inv_.size(); ++b) {
            const auto k = static_cast<Eigen::Index>(5 * b);
            z.segment<5>(k) = inv_[b] * r.segment<5>(k);
        }
    }

private:
    std::vector<Eigen::Matrix<double, 5, 5>> inv_;
};

/// Solves A x = b for SPD A (dimension a multiple of 5) to relative residual `rtol`.
inline Eigen::VectorXd solve_spd(const SparseMatrix& a, const Eigen::VectorXd& b, double rtol = 1e-12,
                                 LinearSolveReport* report = nullptr) {
    const double bnorm = b.norm();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    if (bnorm == 0.0) return x;

    const BlockJacobi5 precond(a);
    Eigen::VectorXd r = b, z, p, ap;
    precond.apply(r, z);
    p = z;
    double rz = r.dot(z);
    const int max_iters = static_cast<int>(std::max<Eigen::Index>(200, 2 * b.size()));
    int it = 0;
    for (; it < max_iters; ++it) {
        ap.noalias() = a * p;
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) break;
        const double alpha = rz / pap;
        x += alpha * p;
        r -= alpha * ap;
        if (r.norm() <= rtol * bnorm) {
            // recompute to guard against drift of the recursive residual
            r = b - a * x;
            if (r.norm() <= rtol * bnorm) {
                if (report) *report = {it + 1, r.norm() / bnorm, false};
                return x;
            }
        }
        precond.apply(r, z);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    ldlt.compute(Eigen::SparseMatrix<double>(a));
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("solve_spd: factorization failed");
    x = ldlt.solve(b);
    if (report) *report = {it, (b - a * x).norm() / bnorm, true};
    return x;
}

}  // namespace qtensor
