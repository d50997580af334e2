#pragma once
/**
 * @file stepper.hpp
 * @brief First-order and BDF2 fully discrete schemes for the Q-tensor gradient
 *        flow, solved as strictly convex minimizations by damped Newton.
 *
 * Both schemes minimize, over the interior nodal values,
 *
 *   F[Q] = h^2 ( a/2 sum_P |Q|^2 - sum_P G.Q + sum_P q(Q) + sum_cells f_e(Q) ) + const
 *
 * with a = 1/dt, G = Q^n/dt + c02 Q^n for the first-order scheme and
 * a = 3/(2 dt), G = (4Q^n - Q^{n-1})/(2 dt) + c02 (2Q^n - Q^{n-1}) for BDF2.
 * Its projected gradient at each node is the scheme residual.
 */

#include "qtensor/grid.hpp"
#include "qtensor/linear_solver.hpp"

#include <algorithm>
#include <concepts>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qtensor {

struct NewtonConfig {
    double tol_grad = 1e-10;
    int max_iters = 50;
    int max_halvings = 60;

    void validate() const {
        if (!(tol_grad > 0.0) || max_iters < 1 || max_halvings < 1)
            throw std::invalid_argument("NewtonConfig: all fields must be positive");
    }
};

enum class SolverErrorKind { max_iters_exceeded, damping_failed, energy_increased };

class SolverError : public std::runtime_error {
public:
    SolverError(SolverErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    SolverErrorKind kind() const { return kind_; }

private:
    SolverErrorKind kind_;
};

enum class Scheme { first, second };

struct FlowState {
    QField q_curr;
    std::optional<QField> q_prev;
    double t = 0.0;
    int step_index = 0;
};

struct StepDiagnostics {
    int step = 0;
    double t = 0.0;
    double energy = 0.0;
    /// Energy plus the BDF2 correction term; equals `energy` for first-order steps.
    double modified_energy = 0.0;
    bool energy_decrease_ok = true;
    int newton_iters = 1;
    double max_eig = 0.0;
    double min_eig = 0.0;
    double increment_norm = 0.0;
};

/// sqrt(h^2 sum_P |Q - Q_ref|^2). A finer reference is restricted by node subsampling.
inline double error_norm(const QField& q, const QField& q_ref) {
    const auto& g = q.grid();
    const auto& gr = q_ref.grid();
    if (g.L != gr.L || gr.N < g.N || gr.N % g.N != 0)
        throw std::invalid_argument("error_norm: incompatible grids");
    const int ratio = gr.N / g.N;
    if ((ratio & (ratio - 1)) != 0) throw std::invalid_argument("error_norm: grids must differ dyadically");
    double acc = 0.0;
    for (int l = 1; l < g.N; ++l)
        for (int m = 1; m < g.N; ++m) acc += norm_sq(q.at(l, m) - q_ref.at(ratio * l, ratio * m));
    return std::sqrt(g.h() * g.h() * acc);
}

/// h-weighted interior l2 norm of a difference on a common grid.
inline double increment_norm(const QField& a, const QField& b) { return error_norm(a, b); }

// ---------------------------------------------------------------------------
// The per-step convex problem
// ---------------------------------------------------------------------------

class ImplicitProblem {
public:
    ImplicitProblem(const ModelParams& p, double mass, QField drive, double offset, const QField& boundary)
        : p_(p), grid_(boundary.grid()), mass_(mass), drive_(std::move(drive)), offset_(offset),
          boundary_(boundary) {
        assemble_stiffness();
    }

    const Grid2D& grid() const { return grid_; }
    const QField& boundary_source() const { return boundary_; }

    /// The discrete functional; +inf if any interior node is unphysical.
    ExtendedScalar objective(const QField& q) const {
        check_boundary(q);
        double acc = offset_;
        for (int l = 1; l < grid_.N; ++l)
            for (int m = 1; m < grid_.N; ++m) {
                const auto t = q.at(l, m);
                const ExtendedScalar qv = q_value(t);
                if (!qv.is_finite()) return ExtendedScalar::infinity();
                acc += 0.5 * mass_ * norm_sq(t) - dot(drive_.at(l, m), t) + qv.value();
            }
        const double h2 = grid_.h() * grid_.h();
        return h2 * acc + discrete_elastic_energy(q, p_);
    }

    /// objective(to) - objective(from), summed from per-node and per-cell
    /// increments so that it stays accurate when the two fields are close.
    ExtendedScalar objective_change(const QField& from, const QField& to) const {
        check_boundary(to);
        double acc = 0.0;
        for (int l = 1; l < grid_.N; ++l)
            for (int m = 1; m < grid_.N; ++m) {
                const auto a = from.at(l, m), b = to.at(l, m);
                if (!is_physical(b)) return ExtendedScalar::infinity();
                const auto d = b - a;
                acc += 0.5 * mass_ * dot(d, a + b) - dot(drive_.at(l, m), d) + detail::log_barrier_change(a, b);
            }
        const double h2 = grid_.h() * grid_.h();
        return h2 * acc + detail::elastic_energy_change(from, to, p_.c21, p_.c22);
    }

    /// a Q - G + P dq/dQ + P L_h[Q] at interior nodes (boundary entries zero).
    QField residual(const QField& q) const {
        check_boundary(q);
        QField r = l_h(q, p_);
        for (int l = 1; l < grid_.N; ++l)
            for (int m = 1; m < grid_.N; ++m) {
                const auto t = q.at(l, m);
                r.set(l, m, r.at(l, m) + mass_ * t - drive_.at(l, m) + q_grad(t));
            }
        return r;
    }

    /// Newton direction in interior chart coordinates for the given residual.
    Eigen::VectorXd newton_direction(const QField& q, const QField& residual) const {
        SparseMatrix hess = stiffness_;
        const Mat5 mass_block = mass_ * chart_metric();
        Eigen::VectorXd rhs(hess.rows());
        for (int l = 1; l < grid_.N; ++l)
            for (int m = 1; m < grid_.N; ++m) {
                const std::size_t n = grid_.interior(l, m);
                const Mat5 blk = mass_block + q_hess(q.at(l, m));
                for (int a = 0; a < 5; ++a)
                    for (int b = 0; b < 5; ++b) hess.valuePtr()[block_slots_[25 * n + 5 * a + b]] += blk(a, b);
                rhs.segment<5>(static_cast<Eigen::Index>(5 * n)) = -chart_gradient(residual.at(l, m));
            }
        return solve_spd(hess, rhs, 1e-12, &last_solve_);
    }

    const LinearSolveReport& last_linear_solve() const { return last_solve_; }

private:
    void check_boundary(const QField& q) const {
        if (!q.same_boundary(boundary_))
            throw std::invalid_argument("ImplicitProblem: boundary data mismatch");
    }

    // Elastic Hessian restricted to interior unknowns, with every diagonal 5x5
    // block present so barrier blocks can be added in place.
    void assemble_stiffness() {
        const auto kc = cell_stiffness(p_.c21, p_.c22, grid_.h());
        const auto dim = static_cast<Eigen::Index>(5 * grid_.interior_count());
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<std::size_t>(dim) * 45);
        for (int l = 1; l < grid_.N; ++l)
            for (int m = 1; m < grid_.N; ++m) {
                const auto n = static_cast<int>(5 * grid_.interior(l, m));
                for (int a = 0; a < 5; ++a)
                    for (int b = 0; b < 5; ++b) trips.emplace_back(n + a, n + b, 0.0);
            }
        for (int l = 0; l < grid_.N; ++l)
            for (int m = 0; m < grid_.N; ++m)
                for (int i = 0; i < 4; ++i) {
                    const int li = l + kCellCorners[i][0], mi = m + kCellCorners[i][1];
                    if (grid_.is_boundary(li, mi)) continue;
                    const auto ni = static_cast<int>(5 * grid_.interior(li, mi));
                    for (int j = 0; j < 4; ++j) {
                        const int lj = l + kCellCorners[j][0], mj = m + kCellCorners[j][1];
                        if (grid_.is_boundary(lj, mj)) continue;
                        const auto nj = static_cast<int>(5 * grid_.interior(lj, mj));
                        for (int a = 0; a < 5; ++a)
                            for (int b = 0; b < 5; ++b) {
                                const double v = kc(5 * i + a, 5 * j + b);
                                if (v != 0.0) trips.emplace_back(ni + a, nj + b, v);
                            }
                    }
                }
        stiffness_.resize(dim, dim);
        stiffness_.setFromTriplets(trips.begin(), trips.end());
        stiffness_.makeCompressed();

        block_slots_.resize(25 * grid_.interior_count());
        for (std::size_t n = 0; n < grid_.interior_count(); ++n)
            for (int a = 0; a < 5; ++a)
                for (int b = 0; b < 5; ++b) {
                    const auto row = static_cast<Eigen::Index>(5 * n + static_cast<std::size_t>(a));
                    const auto col = static_cast<Eigen::Index>(5 * n + static_cast<std::size_t>(b));
                    block_slots_[25 * n + 5 * a + b] =
                        static_cast<std::size_t>(&stiffness_.coeffRef(row, col) - stiffness_.valuePtr());
                }
    }

    ModelParams p_;
    Grid2D grid_;
    double mass_;
    QField drive_;
    double offset_;
    QField boundary_;
    SparseMatrix stiffness_;
    std::vector<std::size_t> block_slots_;
    mutable LinearSolveReport last_solve_;
};

inline ImplicitProblem first_order_problem(const QField& q_old, const ModelParams& p) {
    const auto& g = q_old.grid();
    QField drive(g);
    double offset = 0.0;
    for (int l = 1; l < g.N; ++l)
        for (int m = 1; m < g.N; ++m) {
            const auto t = q_old.at(l, m);
            drive.set(l, m, (1.0 / p.dt + p.c02) * t);
            offset += norm_sq(t) / (2.0 * p.dt);
        }
    return ImplicitProblem(p, 1.0 / p.dt, std::move(drive), offset, q_old);
}

inline ImplicitProblem second_order_problem(const QField& q_curr, const QField& q_prev, const ModelParams& p) {
    const auto& g = q_curr.grid();
    QField drive(g);
    for (int l = 1; l < g.N; ++l)
        for (int m = 1; m < g.N; ++m) {
            const auto cur = q_curr.at(l, m), prev = q_prev.at(l, m);
            drive.set(l, m, (1.0 / (2.0 * p.dt)) * (4.0 * cur - prev) + p.c02 * (2.0 * cur - prev));
        }
    return ImplicitProblem(p, 1.5 / p.dt, std::move(drive), 0.0, q_curr);
}

/// h^2 ( 1/(2dt) sum_P |Q' - Q|^2 + sum_P q(Q') + sum_cells f_e(Q') - c02 sum_P Q.Q' ).
inline ExtendedScalar objective_first(const QField& q_new, const QField& q_old, const ModelParams& p) {
    return first_order_problem(q_old, p).objective(q_new);
}

inline ExtendedScalar objective_second(const QField& q_new, const QField& q_curr, const QField& q_prev,
                                       const ModelParams& p) {
    return second_order_problem(q_curr, q_prev, p).objective(q_new);
}

inline QField residual_first(const QField& q_new, const QField& q_old, const ModelParams& p) {
    return first_order_problem(q_old, p).residual(q_new);
}

inline QField residual_second(const QField& q_new, const QField& q_curr, const QField& q_prev,
                              const ModelParams& p) {
    return second_order_problem(q_curr, q_prev, p).residual(q_new);
}

inline double max_node_norm(const QField& r) {
    const auto& g = r.grid();
    double mx = 0.0;
    for (int l = 1; l < g.N; ++l)
        for (int m = 1; m < g.N; ++m) mx = std::max(mx, std::sqrt(norm_sq(r.at(l, m))));
    return mx;
}

// ---------------------------------------------------------------------------
// Damped Newton
// ---------------------------------------------------------------------------

template <class P>
concept NewtonProvider = requires(const P& p, const QField& q) {
    { p.objective(q) } -> std::convertible_to<ExtendedScalar>;
    { p.objective_change(q, q) } -> std::convertible_to<ExtendedScalar>;
    { p.residual(q) } -> std::same_as<QField>;
    { p.newton_direction(q, q) } -> std::same_as<Eigen::VectorXd>;
};

struct NewtonResult {
    QField q;
    /// Newton updates taken; a converged initial guess counts as one check pass.
    int iters = 1;
    double residual = 0.0;
};

/// Damped Newton: a step is halved until every node is physical and the
/// objective does not increase.
template <NewtonProvider P>
NewtonResult damped_newton(const QField& q_init, const P& problem, const NewtonConfig& cfg) {
    cfg.validate();
    if (!q_init.is_feasible()) throw std::domain_error("damped_newton: initial guess is not feasible");
    QField q = q_init;
    const auto& g = q.grid();
    double f = problem.objective(q);
    int updates = 0;
    for (;;) {
        const QField r = problem.residual(q);
        const double res = max_node_norm(r);
        if (res <= cfg.tol_grad) return {std::move(q), std::max(1, updates), res};
        if (updates >= cfg.max_iters)
            throw SolverError(SolverErrorKind::max_iters_exceeded,
                              "damped_newton: no convergence after " + std::to_string(updates) +
                                  " iterations (residual " + std::to_string(res) + ")");

        const Eigen::VectorXd dir = problem.newton_direction(q, r);
        const Eigen::VectorXd x0 = q.interior_coords();
        double step = 1.0;
        bool accepted = false;
        QField trial = q;
        for (int k = 0; k <= cfg.max_halvings; ++k, step *= 0.5) {
            trial.set_interior_coords(x0 + step * dir);
            bool feasible = true;
            for (int l = 1; l < g.N && feasible; ++l)
                for (int m = 1; m < g.N && feasible; ++m) feasible = is_physical(trial.at(l, m));
            if (!feasible) continue;
            const ExtendedScalar change = problem.objective_change(q, trial);
            // The increment is evaluated without cancellation; the allowance only
            // covers rounding in that sum.
            if (change <= 1e-14 * (1.0 + std::abs(f))) {
                accepted = true;
                f += change.value();
                break;
            }
        }
        if (!accepted)
            throw SolverError(SolverErrorKind::damping_failed,
                              "damped_newton: step halving limit reached without an admissible step");
        q = trial;
        ++updates;
    }
}

// ---------------------------------------------------------------------------
// Time stepping
// ---------------------------------------------------------------------------

namespace detail {

inline std::pair<double, double> eigen_extremes(const QField& q) {
    const auto& g = q.grid();
    double mx = -1.0, mn = 1.0;
    for (int l = 0; l <= g.N; ++l)
        for (int m = 0; m <= g.N; ++m) {
            const auto ev = eigenvalues(q.at(l, m));
            mx = std::max(mx, ev.max());
            mn = std::min(mn, ev.min());
        }
    return {mx, mn};
}

inline double bdf2_weight(const ModelParams& p) { return (1.0 + 2.0 * p.c02 * p.dt) / (4.0 * p.dt); }

inline double sum_sq_diff(const QField& a, const QField& b) {
    const double n = error_norm(a, b);
    return n * n;  // already carries the h^2 weight
}

}  // namespace detail

/// Dissipation slack for the energy laws.
inline constexpr double kEnergySlack = 1e-9;

/// Diagnostics of a state without stepping (step 0 / initial data).
inline StepDiagnostics diagnose(const FlowState& s, const ModelParams& p) {
    StepDiagnostics d;
    d.step = s.step_index;
    d.t = s.t;
    d.energy = discrete_energy(s.q_curr, p);
    d.modified_energy = d.energy;
    if (s.q_prev) d.modified_energy += detail::bdf2_weight(p) * detail::sum_sq_diff(s.q_curr, *s.q_prev);
    const auto [mx, mn] = detail::eigen_extremes(s.q_curr);
    d.max_eig = mx;
    d.min_eig = mn;
    return d;
}

namespace detail {

inline std::pair<FlowState, StepDiagnostics> finish_step(const FlowState& state, NewtonResult&& nr,
                                                         const ModelParams& p, bool bdf2_step) {
    FlowState next;
    next.q_curr = std::move(nr.q);
    next.q_prev = state.q_curr;
    next.step_index = state.step_index + 1;
    next.t = next.step_index * p.dt;

    if (!next.q_curr.is_feasible())
        throw std::logic_error("step: accepted iterate left the physical range");

    StepDiagnostics d;
    d.step = next.step_index;
    d.t = next.t;
    d.newton_iters = nr.iters;
    d.energy = discrete_energy(next.q_curr, p);
    const double inc_sq = sum_sq_diff(next.q_curr, state.q_curr);
    d.increment_norm = std::sqrt(inc_sq);
    const auto [mx, mn] = eigen_extremes(next.q_curr);
    d.max_eig = mx;
    d.min_eig = mn;

    const double old_energy = discrete_energy(state.q_curr, p);
    d.modified_energy = d.energy + bdf2_weight(p) * inc_sq;
    if (!bdf2_step) {
        d.energy_decrease_ok = d.energy <= old_energy + kEnergySlack;
    } else if (p.c02 * p.dt <= 2.0) {
        const double old_mod = old_energy + bdf2_weight(p) * sum_sq_diff(state.q_curr, *state.q_prev);
        d.energy_decrease_ok = d.modified_energy <= old_mod + kEnergySlack;
    }
    if (!d.energy_decrease_ok)
        throw SolverError(SolverErrorKind::energy_increased,
                          "step " + std::to_string(d.step) + ": discrete energy law violated");
    return {std::move(next), d};
}

}  // namespace detail

inline std::pair<FlowState, StepDiagnostics> step_first(const FlowState& state, const ModelParams& p,
                                                        const NewtonConfig& cfg) {
    const auto problem = first_order_problem(state.q_curr, p);
    return detail::finish_step(state, damped_newton(state.q_curr, problem, cfg), p, false);
}

/// BDF2 step; without a previous level this bootstraps with the first-order scheme.
inline std::pair<FlowState, StepDiagnostics> step_second(const FlowState& state, const ModelParams& p,
                                                         const NewtonConfig& cfg) {
    if (!state.q_prev) return step_first(state, p, cfg);
    const auto problem = second_order_problem(state.q_curr, *state.q_prev, p);
    QField guess = state.q_curr;
    {
        const auto& g = guess.grid();
        bool feasible = true;
        for (int l = 1; l < g.N && feasible; ++l)
            for (int m = 1; m < g.N && feasible; ++m) {
                const auto e = 2.0 * state.q_curr.at(l, m) - state.q_prev->at(l, m);
                feasible = is_physical(e);
                if (feasible) guess.set(l, m, e);
            }
        if (!feasible) guess = state.q_curr;
    }
    return detail::finish_step(state, damped_newton(guess, problem, cfg), p, true);
}

inline std::pair<FlowState, StepDiagnostics> step(Scheme scheme, const FlowState& state, const ModelParams& p,
                                                  const NewtonConfig& cfg) {
    return scheme == Scheme::first ? step_first(state, p, cfg) : step_second(state, p, cfg);
}

struct RunOptions {
    Scheme scheme = Scheme::second;
    double t_final = 0.0;
    /// Snapshot cadence in steps; 0 disables intermediate snapshots.
    int snapshot_every = 0;
    /// Stop early once increment_norm / dt drops below this (0 disables).
    double steady_tol = 0.0;
};

struct RunResult {
    std::vector<StepDiagnostics> diagnostics;  // entry 0 describes the initial state
    FlowState final_state;
    bool reached_steady = false;
};

using SnapshotSink = std::function<void(int step, double t, const QField&)>;

inline RunResult run(FlowState initial, const ModelParams& p, const NewtonConfig& cfg, const RunOptions& opt,
                     const SnapshotSink& sink = {}) {
    p.validate();
    if (!initial.q_curr.is_feasible()) throw std::domain_error("run: initial field is not feasible");
    initial.q_curr.freeze_boundary();
    RunResult res;
    res.diagnostics.push_back(diagnose(initial, p));
    if (sink) sink(initial.step_index, initial.t, initial.q_curr);

    const int steps = static_cast<int>(std::llround(opt.t_final / p.dt));
    FlowState state = std::move(initial);
    for (int k = 0; k < steps; ++k) {
        auto [next, diag] = step(opt.scheme, state, p, cfg);
        state = std::move(next);
        res.diagnostics.push_back(diag);
        const bool steady = opt.steady_tol > 0.0 && diag.increment_norm / p.dt < opt.steady_tol;
        const bool last = k + 1 == steps || steady;
        if (sink && (last || (opt.snapshot_every > 0 && state.step_index % opt.snapshot_every == 0)))
            sink(state.step_index, state.t, state.q_curr);
        if (steady) {
            res.reached_steady = true;
            break;
        }
    }
    res.final_state = std::move(state);
    return res;
}

}  // namespace qtensor
