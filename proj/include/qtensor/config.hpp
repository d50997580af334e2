#pragma once
/**
 * @file config.hpp
 * @brief Experiment configuration read from INI text.
 *
 * Sections: [model] [run] [setup] [newton] [accuracy] [sweep] [bingham]
 * [assert]. Unknown sections or keys are rejected so that a typo never
 * silently falls back to a default.
 */

#include "qtensor/bingham.hpp"
#include "qtensor/setup.hpp"
#include "qtensor/stepper.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace qtensor {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AccuracySpec {
    std::vector<Scheme> schemes{Scheme::first, Scheme::second};
    std::vector<double> dts{2e-3, 1e-3, 5e-4, 2.5e-4};
    std::vector<int> grids{2, 4, 8, 16, 32};
    /// Space ladder: dt = coeff * h^power, power chosen per scheme.
    double space_dt_coeff = 0.004;
    int space_dt_power_first = 2;
    int space_dt_power_second = 1;
    int reference_N = 64;
    double reference_dt = 3.125e-5;
    Scheme reference_scheme = Scheme::second;
    std::string cache_dir;  ///< empty: <out>/cache
    double slope_first = 1.0;
    double slope_second = 2.0;
    double slope_space = 2.0;
    double slope_tolerance = 0.2;
};

struct SweepSpec {
    std::vector<double> c22{-0.039, -0.02, 0.0, 0.04, 0.16, 0.32};
    double biaxial_threshold = 0.1;
};

struct BinghamSpec {
    double gap_max = 1e-2;
    double gap_min = 1e-5;
    int points = 7;
    QuadratureOrder order{};
    /// Number of smallest gaps used for the log-slope fit.
    int tail = 4;
    double ratio_tolerance = 0.1;
};

enum class PatternKind { none, wors, diagonal };

struct AssertSpec {
    int max_newton_iters = 0;        ///< 0 disables
    double median_newton_iters = 0;  ///< 0 disables
    double max_boundary_distance = 0;
    PatternKind pattern = PatternKind::none;
    bool require_steady = false;
    bool monotone_biaxial_area = false;
};

struct RunConfig {
    ModelParams params;
    Scheme scheme = Scheme::second;
    double t_final = 0.0;
    int snapshot_every = 0;
    double steady_tol = 0.0;
    SetupSpec setup;
    NewtonConfig newton;
    std::uint64_t seed = 0;
    AccuracySpec accuracy;
    SweepSpec sweep;
    BinghamSpec bingham;
    AssertSpec checks;

    /// Throws ConfigError on anything that would fail later.
    void validate() const {
        try {
            params.validate();
            newton.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (!(t_final >= 0.0)) throw ConfigError("run.t_final must be nonnegative");
        if (snapshot_every < 0) throw ConfigError("run.snapshot_every must be nonnegative");
        if (!(steady_tol >= 0.0)) throw ConfigError("run.steady_tol must be nonnegative");
        if (setup.director.norm() == 0.0) throw ConfigError("setup.director must be nonzero");
        if (!(setup.noise >= 0.0)) throw ConfigError("setup.noise must be nonnegative");
    }
};

inline std::string to_string(Scheme s) { return s == Scheme::first ? "first" : "second"; }

namespace detail {

namespace pt = boost::property_tree;

inline const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> k{
        {"model", {"c02", "c21", "c22", "L", "N", "dt"}},
        {"run", {"scheme", "t_final", "snapshot_every", "steady_tol", "seed"}},
        {"setup", {"boundary", "initial", "director", "epsilon", "noise"}},
        {"newton", {"tol_grad", "max_iters", "max_halvings"}},
        {"accuracy",
         {"schemes", "dts", "grids", "space_dt_coeff", "space_dt_power_first", "space_dt_power_second",
          "reference_N", "reference_dt", "reference_scheme", "cache_dir", "slope_first", "slope_second",
          "slope_space", "slope_tolerance"}},
        {"sweep", {"c22", "biaxial_threshold"}},
        {"bingham", {"gap_max", "gap_min", "points", "theta_order", "phi_order", "tail", "ratio_tolerance"}},
        {"assert",
         {"max_newton_iters", "median_newton_iters", "max_boundary_distance", "pattern", "require_steady",
          "monotone_biaxial_area"}},
    };
    return k;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    const auto e = s.find_last_not_of(" \t\r\"");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

template <class T>
T parse_scalar(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    std::istringstream is(s);
    T v{};
    is >> v;
    if (s.empty() || !is || !is.eof()) throw ConfigError("bad value for " + key + ": '" + raw + "'");
    return v;
}

template <>
inline bool parse_scalar<bool>(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("bad boolean for " + key + ": '" + raw + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
    std::vector<T> out;
    std::stringstream ss(raw);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (trim(tok).empty()) continue;
        out.push_back(parse_scalar<T>(key, tok));
    }
    return out;
}

inline Scheme parse_scheme(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "first") return Scheme::first;
    if (s == "second") return Scheme::second;
    throw ConfigError(key + " must be 'first' or 'second'");
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {
        for (const auto& [section, body] : tree_) {
            const auto it = known_keys().find(section);
            if (it == known_keys().end()) throw ConfigError("unknown section [" + section + "]");
            if (!body.data().empty() && body.empty()) throw ConfigError("key outside a section: " + section);
            for (const auto& kv : body)
                if (!it->second.contains(kv.first))
                    throw ConfigError("unknown key " + section + "." + kv.first);
        }
    }

    template <class T>
    void get(const std::string& path, T& out) const {
        if (const auto v = tree_.get_optional<std::string>(path)) out = parse_scalar<T>(path, *v);
    }
    void get_string(const std::string& path, std::string& out) const {
        if (const auto v = tree_.get_optional<std::string>(path)) out = trim(*v);
    }
    template <class T>
    void get_list(const std::string& path, std::vector<T>& out) const {
        if (const auto v = tree_.get_optional<std::string>(path)) out = parse_list<T>(path, *v);
    }
    std::optional<std::string> raw(const std::string& path) const {
        if (const auto v = tree_.get_optional<std::string>(path)) return trim(*v);
        return std::nullopt;
    }

private:
    const pt::ptree& tree_;
};

}  // namespace detail

inline RunConfig parse_config(std::istream& is) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    const detail::Reader r(tree);
    RunConfig c;
    r.get("model.c02", c.params.c02);
    r.get("model.c21", c.params.c21);
    r.get("model.c22", c.params.c22);
    r.get("model.L", c.params.L);
    r.get("model.N", c.params.N);
    r.get("model.dt", c.params.dt);

    if (auto s = r.raw("run.scheme")) c.scheme = detail::parse_scheme("run.scheme", *s);
    r.get("run.t_final", c.t_final);
    r.get("run.snapshot_every", c.snapshot_every);
    r.get("run.steady_tol", c.steady_tol);
    r.get("run.seed", c.seed);

    if (auto s = r.raw("setup.boundary")) {
        if (*s == "uniform") c.setup.boundary = BoundaryKind::uniform;
        else if (*s == "wall") c.setup.boundary = BoundaryKind::wall;
        else throw ConfigError("setup.boundary must be 'uniform' or 'wall'");
    }
    if (auto s = r.raw("setup.initial")) {
        if (*s == "perturbed") c.setup.initial = InitialKind::perturbed;
        else if (*s == "uniform") c.setup.initial = InitialKind::uniform;
        else throw ConfigError("setup.initial must be 'perturbed' or 'uniform'");
    }
    if (auto s = r.raw("setup.director")) {
        const auto v = detail::parse_list<double>("setup.director", *s);
        if (v.size() != 3) throw ConfigError("setup.director needs three components");
        c.setup.director = Vec3(v[0], v[1], v[2]);
    }
    r.get("setup.epsilon", c.setup.epsilon);
    r.get("setup.noise", c.setup.noise);

    r.get("newton.tol_grad", c.newton.tol_grad);
    r.get("newton.max_iters", c.newton.max_iters);
    r.get("newton.max_halvings", c.newton.max_halvings);

    auto& a = c.accuracy;
    if (auto s = r.raw("accuracy.schemes")) {
        a.schemes.clear();
        std::stringstream ss(*s);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!detail::trim(tok).empty()) a.schemes.push_back(detail::parse_scheme("accuracy.schemes", tok));
    }
    r.get_list("accuracy.dts", a.dts);
    r.get_list("accuracy.grids", a.grids);
    r.get("accuracy.space_dt_coeff", a.space_dt_coeff);
    r.get("accuracy.space_dt_power_first", a.space_dt_power_first);
    r.get("accuracy.space_dt_power_second", a.space_dt_power_second);
    r.get("accuracy.reference_N", a.reference_N);
    r.get("accuracy.reference_dt", a.reference_dt);
    if (auto s = r.raw("accuracy.reference_scheme")) a.reference_scheme = detail::parse_scheme("accuracy.reference_scheme", *s);
    r.get_string("accuracy.cache_dir", a.cache_dir);
    r.get("accuracy.slope_first", a.slope_first);
    r.get("accuracy.slope_second", a.slope_second);
    r.get("accuracy.slope_space", a.slope_space);
    r.get("accuracy.slope_tolerance", a.slope_tolerance);

    r.get_list("sweep.c22", c.sweep.c22);
    r.get("sweep.biaxial_threshold", c.sweep.biaxial_threshold);

    auto& b = c.bingham;
    r.get("bingham.gap_max", b.gap_max);
    r.get("bingham.gap_min", b.gap_min);
    r.get("bingham.points", b.points);
    r.get("bingham.theta_order", b.order.theta);
    r.get("bingham.phi_order", b.order.phi);
    r.get("bingham.tail", b.tail);
    r.get("bingham.ratio_tolerance", b.ratio_tolerance);

    auto& k = c.checks;
    r.get("assert.max_newton_iters", k.max_newton_iters);
    r.get("assert.median_newton_iters", k.median_newton_iters);
    r.get("assert.max_boundary_distance", k.max_boundary_distance);
    if (auto s = r.raw("assert.pattern")) {
        if (*s == "none") k.pattern = PatternKind::none;
        else if (*s == "wors") k.pattern = PatternKind::wors;
        else if (*s == "diagonal") k.pattern = PatternKind::diagonal;
        else throw ConfigError("assert.pattern must be none, wors or diagonal");
    }
    r.get("assert.require_steady", k.require_steady);
    r.get("assert.monotone_biaxial_area", k.monotone_biaxial_area);

    c.validate();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_config(in);
}

}  // namespace qtensor
