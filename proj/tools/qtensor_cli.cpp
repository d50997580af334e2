// qtensor: command-line runner for the Q-tensor gradient-flow experiments.
//
//   qtensor run|accuracy-time|accuracy-space|sweep-c22|bingham-compare
//           --config FILE --out DIR [--seed N] [--assert]
//
// Exit codes: 0 ok, 2 config or usage error, 3 solver error, 4 a threshold
// checked under --assert was missed, 1 anything else (I/O).

#include "qtensor/experiment.hpp"
#include "qtensor/plots.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace qtensor;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitAssert = 4;

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool check = false;
};

std::string g17(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

std::string short_num(double v, const char* f = "%.4g") {
    char b[40];
    std::snprintf(b, sizeof b, f, v);
    return b;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

/// Collects --assert verdicts; prints one line per check.
class Checks {
public:
    explicit Checks(bool enabled) : enabled_(enabled) {}
    void add(const std::string& what, bool ok, const std::string& detail) {
        if (!enabled_) return;
        std::cout << (ok ? "PASS " : "FAIL ") << what << ": " << detail << '\n';
        failed_ = failed_ || !ok;
    }
    int exit_code() const { return failed_ ? kExitAssert : 0; }

private:
    bool enabled_;
    bool failed_ = false;
};

void write_snapshot(const fs::path& p, const QField& q) {
    auto os = open_out(p);
    write_snapshot_csv(os, q);
}

void write_run_plots(const fs::path& dir, const std::vector<StepDiagnostics>& d, const QField& final_q,
                     const std::string& tag) {
    plot::Series energy{"energy", {}, {}}, iters{"Newton iterations", {}, {}, "#d62728", true};
    plot::Series emax{"max eigenvalue", {}, {}, "#d62728"}, emin{"min eigenvalue", {}, {}, "#1f77b4"};
    plot::Series upper{"2/3", {}, {}, "#999999"}, lower{"-1/3", {}, {}, "#999999"};
    for (const auto& s : d) {
        energy.x.push_back(s.t);
        energy.y.push_back(s.energy);
        emax.x.push_back(s.t);
        emax.y.push_back(s.max_eig);
        emin.x.push_back(s.t);
        emin.y.push_back(s.min_eig);
        if (s.step > 0) {
            iters.x.push_back(s.t);
            iters.y.push_back(s.newton_iters);
        }
    }
    if (!d.empty()) {
        upper.x = lower.x = {d.front().t, d.back().t};
        upper.y = {2.0 / 3.0, 2.0 / 3.0};
        lower.y = {-1.0 / 3.0, -1.0 / 3.0};
    }
    {
        auto os = open_out(dir / "energy.svg");
        plot::write_line_plot(os, {"Discrete energy " + tag, "t", "energy", false, false, {energy}, {}});
    }
    {
        auto os = open_out(dir / "newton_iters.svg");
        plot::write_line_plot(os, {"Newton iterations per step " + tag, "t", "iterations", false, false, {iters}, {}});
    }
    {
        auto os = open_out(dir / "eigenvalues.svg");
        plot::write_line_plot(os, {"Eigenvalue extremes " + tag, "t", "eigenvalue", false, false, {emax, emin, upper, lower}, {}});
    }
    {
        auto os = open_out(dir / "quiver.svg");
        plot::write_quiver(os, final_q, "Principal eigenvector " + tag);
    }
    {
        auto os = open_out(dir / "biaxiality.svg");
        plot::write_biaxiality_heatmap(os, final_q, "Biaxiality " + tag);
    }
}

// ---------------------------------------------------------------------------

int cmd_run(const RunConfig& cfg, const fs::path& out, bool check) {
    const fs::path snaps = out / "snapshots";
    fs::create_directories(snaps);
    const auto sink = [&](int step, double, const QField& q) {
        char name[48];
        std::snprintf(name, sizeof name, "snapshot_%06d.csv", step);
        write_snapshot(snaps / name, q);
    };
    const RunResult res = simulate(cfg, sink);
    {
        auto os = open_out(out / "diagnostics.csv");
        write_diagnostics_csv(os, res.diagnostics);
    }
    const QField& q = res.final_state.q_curr;
    write_run_plots(out, res.diagnostics, q, "t=" + short_num(res.final_state.t));

    const auto ns = newton_stats(res.diagnostics);
    const double dist = min_boundary_distance(res.diagnostics);
    const auto energy_inc = max_energy_increase(res.diagnostics, cfg.scheme, cfg.params);
    const bool even = q.grid().N % 2 == 0 && q.grid().N >= 4;
    const auto wors = even ? std::optional(classify_wors(q)) : std::nullopt;
    const auto diag = classify_diagonal(q);
    {
        auto os = open_out(out / "summary.csv");
        os << "key,value\n";
        os << "steps," << res.final_state.step_index << '\n';
        os << "t," << g17(res.final_state.t) << '\n';
        os << "reached_steady," << res.reached_steady << '\n';
        os << "max_newton_iters," << ns.max << '\n';
        os << "median_newton_iters," << g17(ns.median) << '\n';
        os << "min_distance_to_bounds," << g17(dist) << '\n';
        os << "max_energy_increase," << (energy_inc ? g17(*energy_inc) : "none") << '\n';
        os << "final_energy," << g17(res.diagnostics.back().energy) << '\n';
        if (wors) os << "wors," << wors->is_wors << '\n';
        os << "diagonal_state," << diag.is_diagonal << '\n';
    }
    std::cout << "steps " << res.final_state.step_index << "  t " << short_num(res.final_state.t)
              << (res.reached_steady ? "  (steady)" : "") << "\nNewton iterations: max " << ns.max << ", median "
              << ns.median << "\nmin distance to eigenvalue bounds " << short_num(dist) << '\n';

    Checks c(check);
    const auto& k = cfg.checks;
    if (k.max_newton_iters > 0)
        c.add("max Newton iterations", ns.max <= k.max_newton_iters,
              std::to_string(ns.max) + " <= " + std::to_string(k.max_newton_iters));
    if (k.median_newton_iters > 0)
        c.add("median Newton iterations", ns.median <= k.median_newton_iters,
              short_num(ns.median) + " <= " + short_num(k.median_newton_iters));
    if (k.max_boundary_distance > 0)
        c.add("eigenvalues approach the bounds", dist > 0.0 && dist < k.max_boundary_distance,
              "0 < " + short_num(dist) + " < " + short_num(k.max_boundary_distance));
    if (k.require_steady) c.add("steady state reached", res.reached_steady, res.reached_steady ? "yes" : "no");
    if (k.pattern == PatternKind::wors)
        c.add("well order-reconstruction pattern", wors && wors->is_wors,
              wors ? "peak biaxiality " + short_num(wors->peak[0], "%.2f") : "grid not classifiable");
    if (k.pattern == PatternKind::diagonal)
        c.add("diagonal state", diag.is_diagonal, "centre share " + short_num(diag.centre_aligned, "%.2f"));
    return c.exit_code();
}

int cmd_accuracy(const RunConfig& cfg, const fs::path& out, bool space, bool check) {
    check_ladder(cfg, space);
    const fs::path cache = cfg.accuracy.cache_dir.empty() ? out / "cache" : fs::path(cfg.accuracy.cache_dir);
    const QField ref = reference_solution(cfg, cache, std::cerr);

    std::vector<Ladder> ladders;
    for (Scheme s : cfg.accuracy.schemes)
        ladders.push_back(space ? space_ladder(cfg, s, ref, std::cerr) : time_ladder(cfg, s, ref, std::cerr));

    const std::string stem = space ? "accuracy_space" : "accuracy_time";
    {
        auto os = open_out(out / (stem + ".csv"));
        os << "scheme,dt,N,h,steps,error,max_energy_increase,max_newton_iters\n";
        for (const auto& lad : ladders)
            for (const auto& r : lad.rungs)
                os << to_string(lad.scheme) << ',' << g17(r.dt) << ',' << r.N << ',' << g17(cfg.params.L / r.N) << ','
                   << r.steps << ',' << g17(r.error) << ','
                   << (r.max_energy_increase ? g17(*r.max_energy_increase) : "none") << ',' << r.newton.max << '\n';
    }
    Checks c(check);
    {
        auto os = open_out(out / (stem + "_slopes.csv"));
        os << "scheme,rungs,slope,target,tolerance,within\n";
        for (const auto& lad : ladders) {
            const double target = space ? cfg.accuracy.slope_space
                                        : (lad.scheme == Scheme::first ? cfg.accuracy.slope_first : cfg.accuracy.slope_second);
            const bool within = std::abs(lad.slope - target) <= cfg.accuracy.slope_tolerance;
            os << to_string(lad.scheme) << ',' << lad.rungs.size() << ',' << g17(lad.slope) << ',' << g17(target)
               << ',' << g17(cfg.accuracy.slope_tolerance) << ',' << within << '\n';
            std::cout << to_string(lad.scheme) << "-order scheme: fitted slope " << short_num(lad.slope, "%.3f")
                      << " over " << lad.rungs.size() << " rungs\n";
            if (std::isnan(lad.slope)) std::cerr << "warning: slope undefined for a single-rung ladder\n";
            c.add(to_string(lad.scheme) + "-order " + (space ? "space" : "time") + " slope", within,
                  short_num(lad.slope, "%.3f") + " vs " + short_num(target) + " +- " + short_num(cfg.accuracy.slope_tolerance));
        }
    }
    plot::LinePlot p{space ? "Error vs h" : "Error vs dt", space ? "h" : "dt", "error", true, true, {}, {}};
    const std::array<const char*, 2> colors{"#1f77b4", "#d62728"};
    for (std::size_t i = 0; i < ladders.size(); ++i) {
        plot::Series s{to_string(ladders[i].scheme) + "-order, slope " + short_num(ladders[i].slope, "%.2f"), {}, {},
                       colors[i % 2], true};
        for (const auto& r : ladders[i].rungs) {
            s.x.push_back(space ? cfg.params.L / r.N : r.dt);
            s.y.push_back(r.error);
        }
        p.series.push_back(std::move(s));
    }
    {
        auto os = open_out(out / (stem + ".svg"));
        plot::write_line_plot(os, p);
    }
    return c.exit_code();
}

int cmd_sweep(const RunConfig& cfg, const fs::path& out, bool check) {
    if (cfg.sweep.c22.empty()) throw ConfigError("sweep.c22 is empty");
    for (double c22 : cfg.sweep.c22) {
        RunConfig t = cfg;
        t.params.c22 = c22;
        t.validate();
    }
    std::vector<SweepMember> members;
    for (double c22 : cfg.sweep.c22) {
        SweepMember m = run_sweep_member(cfg, c22, std::cerr);
        const fs::path dir = out / ("c22_" + short_num(c22, "%g"));
        fs::create_directories(dir);
        {
            auto os = open_out(dir / "diagnostics.csv");
            write_diagnostics_csv(os, m.result.diagnostics);
        }
        write_snapshot(dir / "final.csv", m.result.final_state.q_curr);
        write_run_plots(dir, m.result.diagnostics, m.result.final_state.q_curr, "c22=" + short_num(c22, "%g"));
        m.result.diagnostics.clear();  // keep memory flat across members
        members.push_back(std::move(m));
    }
    std::vector<double> areas;
    bool all_diag = true, all_steady = true;
    for (const auto& m : members) {
        areas.push_back(m.biaxial_area);
        all_diag = all_diag && m.diagonal.is_diagonal;
        all_steady = all_steady && m.result.reached_steady;
    }
    const bool monotone = strictly_increasing(areas);
    {
        auto os = open_out(out / "sweep.csv");
        os << "c22,steps,t,steady,biaxial_area,centre_share,centre_angle_deg,diagonal_state,max_newton_iters,"
              "median_newton_iters,min_distance_to_bounds\n";
        for (const auto& m : members)
            os << g17(m.c22) << ',' << m.result.final_state.step_index << ',' << g17(m.result.final_state.t) << ','
               << m.result.reached_steady << ',' << g17(m.biaxial_area) << ',' << g17(m.diagonal.centre_aligned) << ','
               << g17(m.diagonal.centre_angle_deg) << ',' << m.diagonal.is_diagonal << ',' << m.newton.max << ','
               << g17(m.newton.median) << ',' << g17(m.min_distance) << '\n';
        os << "summary,monotone_biaxial_area=" << monotone << ",all_diagonal=" << all_diag
           << ",all_steady=" << all_steady << '\n';
    }
    plot::Series s{"biaxial area (biaxiality > " + short_num(cfg.sweep.biaxial_threshold, "%g") + ")", {}, areas,
                   "#1f77b4", true};
    s.x = cfg.sweep.c22;
    {
        auto os = open_out(out / "sweep_area.svg");
        plot::write_line_plot(os, {"Biaxial area vs c22", "c22", "area fraction", false, false, {s}, {}});
    }
    for (const auto& m : members)
        std::cout << "c22 " << short_num(m.c22, "%g") << ": biaxial area " << short_num(m.biaxial_area, "%.3f")
                  << (m.diagonal.is_diagonal ? ", diagonal state" : ", not diagonal") << '\n';
    Checks c(check);
    const auto& k = cfg.checks;
    if (k.pattern == PatternKind::diagonal) c.add("diagonal state for every c22", all_diag, all_diag ? "yes" : "no");
    if (k.monotone_biaxial_area)
        c.add("biaxial area increases with c22", monotone, monotone ? "strictly increasing" : "not monotone");
    if (k.require_steady) c.add("steady state for every c22", all_steady, all_steady ? "yes" : "no");
    if (k.max_newton_iters > 0) {
        int mx = 0;
        for (const auto& m : members) mx = std::max(mx, m.newton.max);
        c.add("max Newton iterations", mx <= k.max_newton_iters, std::to_string(mx));
    }
    return c.exit_code();
}

int cmd_bingham(const RunConfig& cfg, const fs::path& out, bool check) {
    const auto cmp = bingham_compare(cfg.bingham);
    {
        auto os = open_out(out / "bingham.csv");
        os << "lambda_min_plus_third,psi,q,ratio\n";
        for (const auto& r : cmp.rows) os << g17(r.gap) << ',' << g17(r.psi) << ',' << g17(r.q) << ',' << g17(r.ratio) << '\n';
        os << "summary,slope_psi=" << g17(cmp.slope_psi) << ",slope_q=" << g17(cmp.slope_q)
           << ",slope_ratio=" << g17(cmp.slope_ratio) << ",bounded=" << cmp.bounded << '\n';
    }
    plot::Series ps{"Bingham psi", {}, {}, "#1f77b4", true}, qs{"quasi-entropy q", {}, {}, "#d62728", true};
    for (const auto& r : cmp.rows) {
        ps.x.push_back(r.gap);
        ps.y.push_back(r.psi);
        qs.x.push_back(r.gap);
        qs.y.push_back(r.q);
    }
    {
        auto os = open_out(out / "bingham.svg");
        plot::write_line_plot(os, {"Entropies along the prolate path", "lambda_min + 1/3", "value", true, false, {ps, qs},
                                   {"log-rate ratio q/psi " + short_num(cmp.slope_ratio, "%.3f")}});
    }
    std::cout << "log-rates: psi " << short_num(cmp.slope_psi) << ", q " << short_num(cmp.slope_q) << ", ratio "
              << short_num(cmp.slope_ratio) << (cmp.bounded ? " (bounded)" : " (not bounded)") << '\n';
    Checks c(check);
    c.add("q/psi ratio bounded", cmp.bounded, "log-rate ratio " + short_num(cmp.slope_ratio, "%.3f"));
    return c.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Q-tensor gradient flow experiments"};
    app.require_subcommand(1);
    Options opt;
    std::string which;
    for (const char* name : {"run", "accuracy-time", "accuracy-space", "sweep-c22", "bingham-compare"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config, "INI configuration file")->required();
        sub->add_option("--out", opt.out, "output directory")->required();
        sub->add_option("--seed", opt.seed, "seed for the optional random perturbation");
        sub->add_flag("--assert", opt.check, "check configured thresholds; exit 4 on a miss");
        sub->callback([&which, name] { which = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        RunConfig cfg = load_config(opt.config);
        if (opt.seed) cfg.seed = *opt.seed;
        const fs::path out(opt.out);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec || !fs::is_directory(out)) throw ConfigError("cannot create output directory " + opt.out);

        if (which == "run") return cmd_run(cfg, out, opt.check);
        if (which == "accuracy-time") return cmd_accuracy(cfg, out, false, opt.check);
        if (which == "accuracy-space") return cmd_accuracy(cfg, out, true, opt.check);
        if (which == "sweep-c22") return cmd_sweep(cfg, out, opt.check);
        return cmd_bingham(cfg, out, opt.check);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const BinghamError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::domain_error& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
