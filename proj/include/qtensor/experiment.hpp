#pragma once
/**
 * @file experiment.hpp
 * @brief Experiment drivers behind the command line: single runs, accuracy
 *        ladders against a cached reference, the c22 sweep and the Bingham
 *        comparison. Everything here computes; file layout lives in the CLI.
 */

#include "qtensor/config.hpp"
#include "qtensor/patterns.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>

namespace qtensor {

namespace fs = std::filesystem;

namespace detail {
inline std::string fmt_g(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}
}  // namespace detail

/// Number of steps to reach t_final; the ratio must be (numerically) integral.
inline int step_count(double t_final, double dt) {
    const double r = t_final / dt;
    const double k = std::round(r);
    if (std::abs(r - k) > 1e-9 * std::max(1.0, k))
        throw ConfigError("t_final " + detail::fmt_g(t_final) + " is not a whole number of steps of " + detail::fmt_g(dt));
    return static_cast<int>(k);
}

struct NewtonStats {
    int max = 0;
    double median = 0.0;
};

/// Newton statistics over the steps taken (the initial-state entry is skipped).
inline NewtonStats newton_stats(const std::vector<StepDiagnostics>& d) {
    std::vector<double> it;
    for (std::size_t k = 1; k < d.size(); ++k) it.push_back(d[k].newton_iters);
    if (it.empty()) return {};
    NewtonStats s;
    s.max = static_cast<int>(*std::max_element(it.begin(), it.end()));
    s.median = detail::median(it);
    return s;
}

/// Smallest distance of any recorded eigenvalue to the ends of (-1/3, 2/3).
inline double min_boundary_distance(const std::vector<StepDiagnostics>& d) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : d) m = std::min({m, 2.0 / 3.0 - s.max_eig, s.min_eig + 1.0 / 3.0});
    return m;
}

/// Largest one-step increase of the dissipated quantity: the energy for
/// first-order steps (including the BDF2 start-up step) and the modified
/// energy for BDF2 steps when c02 dt <= 2. Empty when nothing is covered.
inline std::optional<double> max_energy_increase(const std::vector<StepDiagnostics>& d, Scheme scheme,
                                                 const ModelParams& p) {
    std::optional<double> worst;
    for (std::size_t k = 1; k < d.size(); ++k) {
        double inc;
        if (scheme == Scheme::first || k == 1) inc = d[k].energy - d[k - 1].energy;
        else if (p.c02 * p.dt <= 2.0) inc = d[k].modified_energy - d[k - 1].modified_energy;
        else continue;
        worst = worst ? std::max(*worst, inc) : inc;
    }
    return worst;
}

inline void write_diagnostics_csv(std::ostream& os, const std::vector<StepDiagnostics>& d) {
    os << "step,t,energy,newton_iters,max_eig,min_eig,dist_to_upper,dist_to_lower,increment_norm\n";
    char buf[512];
    for (const auto& s : d) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.step, s.t, s.energy,
                      s.step == 0 ? 0 : s.newton_iters, s.max_eig, s.min_eig, 2.0 / 3.0 - s.max_eig,
                      s.min_eig + 1.0 / 3.0, s.increment_norm);
        os << buf;
    }
}

inline FlowState initial_state(const RunConfig& c) {
    FlowState s;
    try {
        s.q_curr = initial_field(c.params, c.setup, c.seed);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const std::domain_error& e) {
        throw ConfigError(e.what());
    }
    return s;
}

inline RunResult simulate(const RunConfig& c, const SnapshotSink& sink = {}) {
    c.validate();
    if (c.steady_tol == 0.0) step_count(c.t_final, c.params.dt);
    const RunOptions opt{c.scheme, c.t_final, c.snapshot_every, c.steady_tol};
    return run(initial_state(c), c.params, c.newton, opt, sink);
}

// ---------------------------------------------------------------------------
// Accuracy ladders
// ---------------------------------------------------------------------------

/// Least-squares slope of log y against log x; NaN with fewer than two usable points.
inline double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
        ++n;
    }
    const double den = n * sxx - sx * sx;
    if (n < 2 || den <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / den;
}

struct Rung {
    double dt = 0.0;
    int N = 0;
    int steps = 0;
    double error = 0.0;
    std::optional<double> max_energy_increase;
    NewtonStats newton;
};

struct Ladder {
    Scheme scheme = Scheme::first;
    bool in_space = false;
    std::vector<Rung> rungs;
    double slope = std::numeric_limits<double>::quiet_NaN();
};

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Canonical description of everything that determines the reference field.
inline std::string reference_key(const RunConfig& c) {
    const auto& a = c.accuracy;
    const auto& s = c.setup;
    const Vec3 n = s.director.normalized();
    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "c02=%.17g c21=%.17g c22=%.17g L=%.17g N=%d dt=%.17g scheme=%s t=%.17g boundary=%d initial=%d "
                  "n=%.17g,%.17g,%.17g eps=%.17g noise=%.17g tol=%.17g iters=%d halvings=%d",
                  c.params.c02, c.params.c21, c.params.c22, c.params.L, a.reference_N, a.reference_dt,
                  to_string(a.reference_scheme).c_str(), c.t_final, static_cast<int>(s.boundary),
                  static_cast<int>(s.initial), n[0], n[1], n[2], s.epsilon, s.noise, c.newton.tol_grad,
                  c.newton.max_iters, c.newton.max_halvings);
    std::string key = buf;
    if (s.noise > 0.0) key += " seed=" + std::to_string(c.seed);
    return key;
}

inline RunConfig rung_config(const RunConfig& base, Scheme scheme, int n, double dt) {
    RunConfig c = base;
    c.params.N = n;
    c.params.dt = dt;
    c.scheme = scheme;
    c.snapshot_every = 0;
    c.steady_tol = 0.0;
    return c;
}

/// The reference field at t_final, read from `cache_dir` when present.
inline QField reference_solution(const RunConfig& base, const fs::path& cache_dir, std::ostream& log) {
    const auto& a = base.accuracy;
    const RunConfig rc = rung_config(base, a.reference_scheme, a.reference_N, a.reference_dt);
    step_count(rc.t_final, rc.params.dt);
    const std::string key = reference_key(base);
    char name[64];
    std::snprintf(name, sizeof name, "reference_%016llx.csv", static_cast<unsigned long long>(fnv1a(key)));
    const fs::path file = cache_dir / name;
    if (fs::exists(file)) {
        std::ifstream in(file);
        std::string first;
        std::getline(in, first);
        if (first == "# " + key) {
            QField q = read_snapshot_csv(in, base.params.L);
            if (q.grid().N == a.reference_N) {
                log << "reference: cached " << file.string() << '\n';
                return q;
            }
        }
        log << "reference: stale cache entry ignored\n";
    }
    log << "reference: computing N=" << a.reference_N << " dt=" << a.reference_dt << '\n';
    QField q = simulate(rc).final_state.q_curr;
    fs::create_directories(cache_dir);
    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp);
        out << "# " << key << '\n';
        write_snapshot_csv(out, q);
        if (!out) throw std::runtime_error("cannot write reference cache " + tmp.string());
    }
    fs::rename(tmp, file);
    return q;
}

inline Rung run_rung(const RunConfig& base, Scheme scheme, int n, double dt, const QField& reference) {
    const RunConfig rc = rung_config(base, scheme, n, dt);
    Rung r;
    r.dt = dt;
    r.N = n;
    r.steps = step_count(rc.t_final, dt);
    const auto res = simulate(rc);
    r.error = error_norm(res.final_state.q_curr, reference);
    r.max_energy_increase = max_energy_increase(res.diagnostics, scheme, rc.params);
    r.newton = newton_stats(res.diagnostics);
    return r;
}

inline Ladder time_ladder(const RunConfig& base, Scheme scheme, const QField& reference, std::ostream& log) {
    Ladder lad;
    lad.scheme = scheme;
    for (double dt : base.accuracy.dts) {
        lad.rungs.push_back(run_rung(base, scheme, base.params.N, dt, reference));
        log << "  " << to_string(scheme) << " dt=" << dt << " error=" << lad.rungs.back().error << '\n';
    }
    std::vector<double> x, y;
    for (const auto& r : lad.rungs) {
        x.push_back(r.dt);
        y.push_back(r.error);
    }
    lad.slope = fitted_slope(x, y);
    if (std::isnan(lad.slope)) log << "warning: fewer than two rungs, slope undefined\n";
    return lad;
}

inline double space_dt(const AccuracySpec& a, Scheme scheme, double h) {
    return a.space_dt_coeff * std::pow(h, scheme == Scheme::first ? a.space_dt_power_first : a.space_dt_power_second);
}

inline Ladder space_ladder(const RunConfig& base, Scheme scheme, const QField& reference, std::ostream& log) {
    Ladder lad;
    lad.scheme = scheme;
    lad.in_space = true;
    for (int n : base.accuracy.grids) {
        const double dt = space_dt(base.accuracy, scheme, base.params.L / n);
        lad.rungs.push_back(run_rung(base, scheme, n, dt, reference));
        log << "  " << to_string(scheme) << " N=" << n << " dt=" << dt << " error=" << lad.rungs.back().error << '\n';
    }
    std::vector<double> x, y;
    for (const auto& r : lad.rungs) {
        x.push_back(base.params.L / r.N);
        y.push_back(r.error);
    }
    lad.slope = fitted_slope(x, y);
    if (std::isnan(lad.slope)) log << "warning: fewer than two rungs, slope undefined\n";
    return lad;
}

/// Ladder rungs must be compatible with the reference grid before anything runs.
inline void check_ladder(const RunConfig& c, bool in_space) {
    const auto& a = c.accuracy;
    if (a.schemes.empty()) throw ConfigError("accuracy.schemes is empty");
    if (a.reference_N < 2 || !(a.reference_dt > 0.0)) throw ConfigError("invalid reference grid or step");
    step_count(c.t_final, a.reference_dt);
    auto dyadic = [&](int n) {
        if (n < 2 || a.reference_N % n != 0) return false;
        const int r = a.reference_N / n;
        return (r & (r - 1)) == 0;
    };
    if (in_space) {
        if (a.grids.empty()) throw ConfigError("accuracy.grids is empty");
        for (int n : a.grids) {
            if (!dyadic(n)) throw ConfigError("grid " + std::to_string(n) + " does not nest in the reference grid");
            for (Scheme s : a.schemes) step_count(c.t_final, space_dt(a, s, c.params.L / n));
        }
    } else {
        if (a.dts.empty()) throw ConfigError("accuracy.dts is empty");
        if (!dyadic(c.params.N)) throw ConfigError("model.N does not nest in the reference grid");
        for (double dt : a.dts) {
            if (!(dt > 0.0)) throw ConfigError("accuracy.dts must be positive");
            step_count(c.t_final, dt);
        }
    }
}

// ---------------------------------------------------------------------------
// c22 sweep
// ---------------------------------------------------------------------------

struct SweepMember {
    double c22 = 0.0;
    RunResult result;
    double biaxial_area = 0.0;
    DiagonalReport diagonal;
    NewtonStats newton;
    double min_distance = 0.0;
};

inline bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

inline SweepMember run_sweep_member(const RunConfig& base, double c22, std::ostream& log) {
    RunConfig c = base;
    c.params.c22 = c22;
    SweepMember m;
    m.c22 = c22;
    m.result = simulate(c);
    const QField& q = m.result.final_state.q_curr;
    m.biaxial_area = biaxial_area(q, base.sweep.biaxial_threshold);
    m.diagonal = classify_diagonal(q);
    m.newton = newton_stats(m.result.diagnostics);
    m.min_distance = min_boundary_distance(m.result.diagnostics);
    log << "  c22=" << c22 << " steps=" << m.result.final_state.step_index
        << (m.result.reached_steady ? " steady" : " not steady") << " biaxial_area=" << m.biaxial_area << '\n';
    return m;
}

// ---------------------------------------------------------------------------
// Bingham comparison
// ---------------------------------------------------------------------------

struct BinghamRow {
    double gap = 0.0, psi = 0.0, q = 0.0, ratio = 0.0;
};

struct BinghamComparison {
    std::vector<BinghamRow> rows;
    double slope_psi = std::numeric_limits<double>::quiet_NaN();
    double slope_q = std::numeric_limits<double>::quiet_NaN();
    double slope_ratio = std::numeric_limits<double>::quiet_NaN();
    bool bounded = false;
};

inline std::vector<double> bingham_path(const BinghamSpec& b) {
    if (b.points <= 0) throw ConfigError("bingham path is empty (points must be positive)");
    if (!(b.gap_max <= 1.0 / 3.0) || !(b.gap_min >= kBinghamMinGap * (1.0 - 1e-9)))
        throw ConfigError("bingham gaps must lie in [1e-6, 1/3]");
    if (b.points > 1 && !(b.gap_min < b.gap_max)) throw ConfigError("bingham.gap_min must be below gap_max");
    if (b.tail < 2) throw ConfigError("bingham.tail must be at least 2");
    std::vector<double> g;
    for (int i = 0; i < b.points; ++i) {
        const double u = b.points == 1 ? 0.0 : static_cast<double>(i) / (b.points - 1);
        g.push_back(std::exp(std::log(b.gap_max) + u * (std::log(b.gap_min) - std::log(b.gap_max))));
    }
    return g;
}

/// Slope of v against -ln(gap) by least squares.
inline double log_rate(const std::vector<double>& gap, const std::vector<double>& v) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(gap.size());
    for (int i = 0; i < n; ++i) {
        const double a = -std::log(gap[i]);
        sx += a;
        sy += v[i];
        sxx += a * a;
        sxy += a * v[i];
    }
    const double den = n * sxx - sx * sx;
    if (n < 2 || den <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / den;
}

/// Tabulates psi and q along the prolate uniaxial path towards lambda_min = -1/3.
/// The ratio is bounded when the log-rates of the two fitted over the tail and
/// the rates between consecutive tail points agree to the configured tolerance.
inline BinghamComparison bingham_compare(const BinghamSpec& spec) {
    BinghamComparison out;
    Diag3 guess{};
    for (double gap : bingham_path(spec)) {
        const Diag3 lam = prolate_diag(gap);
        const auto st = solve_b(lam, spec.order, guess);
        guess = st.mu;
        BinghamRow r;
        r.gap = gap;
        r.psi = st.mu[0] * lam[0] + st.mu[1] * lam[1] + st.mu[2] * lam[2] - st.log_z;
        r.q = q_value(SymTraceless3::diag(lam[0], lam[1])).value();
        r.ratio = r.q / r.psi;
        out.rows.push_back(r);
    }
    const std::size_t tail = std::min<std::size_t>(spec.tail, out.rows.size());
    if (tail < 2) return out;
    std::vector<double> g, p, q;
    for (std::size_t i = out.rows.size() - tail; i < out.rows.size(); ++i) {
        g.push_back(out.rows[i].gap);
        p.push_back(out.rows[i].psi);
        q.push_back(out.rows[i].q);
    }
    out.slope_psi = log_rate(g, p);
    out.slope_q = log_rate(g, q);
    out.slope_ratio = out.slope_q / out.slope_psi;
    bool ok = out.slope_psi > 0.0 && out.slope_q > 0.0 && std::isfinite(out.slope_ratio);
    for (std::size_t i = 1; i < g.size() && ok; ++i) {
        const double local = (q[i] - q[i - 1]) / (p[i] - p[i - 1]);
        ok = std::abs(local / out.slope_ratio - 1.0) <= spec.ratio_tolerance;
    }
    for (const auto& r : out.rows) ok = ok && std::isfinite(r.ratio);
    out.bounded = ok;
    return out;
}

}  // namespace qtensor
