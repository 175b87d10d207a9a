#pragma once

// Command-line front end. run_cli() is kept free of process state so the
// tests can drive it with in-memory streams.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "wfbs/wfbs.hpp"

namespace wfbs::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kFailed = 1, kBadInput = 2 };

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

inline double parse_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + s + "'");
    }
    if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(item);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

/// "x1,x2,...", optionally of a fixed length.
inline std::vector<double> parse_list(const std::string& s, std::size_t expected = 0) {
    std::vector<double> out;
    for (const auto& part : split(s, ',')) out.push_back(parse_double(part));
    if (expected != 0 && out.size() != expected) {
        throw ConfigError("expected " + std::to_string(expected) + " comma-separated numbers, got '" + s + "'");
    }
    return out;
}

/// One grid axis: "lo:hi:n" or an explicit list "x1,x2,...".
inline std::vector<double> parse_axis(const std::string& s) {
    if (s.find(':') == std::string::npos) return parse_list(s);
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw ConfigError("grid axis must look like lo:hi:n, got '" + s + "'");
    const double n = parse_double(parts[2]);
    if (!(n >= 1.0) || n != static_cast<double>(static_cast<long>(n))) {
        throw ConfigError("grid axis count must be a positive integer, got '" + parts[2] + "'");
    }
    return linspace(parse_double(parts[0]), parse_double(parts[1]), static_cast<std::size_t>(n));
}

/// "S_AXISxT_AXIS", e.g. "0:1:5x0:1:5".
inline GridSpec parse_grid(const std::string& s) {
    const auto cut = s.find('x');
    if (cut == std::string::npos) throw ConfigError("grid must look like <s axis>x<t axis>, got '" + s + "'");
    GridSpec g{parse_axis(s.substr(0, cut)), parse_axis(s.substr(cut + 1))};
    validate_grid(g);
    return g;
}

/// "gaussian:center:width" or "indicator:lo:hi".
inline TestFunction parse_test_function(const std::string& s) {
    const auto parts = split(s, ':');
    if (parts.size() == 3 && parts[0] == "gaussian") {
        return TestFunction::gaussian(parse_double(parts[1]), parse_double(parts[2]));
    }
    if (parts.size() == 3 && parts[0] == "indicator") {
        return TestFunction::indicator(parse_double(parts[1]), parse_double(parts[2]));
    }
    throw ConfigError("test function must be gaussian:center:width or indicator:lo:hi, got '" + s + "'");
}

inline PathScheme parse_scheme(const std::string& s) {
    if (s == "auto") return PathScheme::Auto;
    if (s == "direct") return PathScheme::Direct;
    if (s == "bridge") return PathScheme::Bridge;
    throw ConfigError("scheme must be auto, direct or bridge, got '" + s + "'");
}

inline Rect parse_rect(const std::string& s) {
    const auto v = parse_list(s, 4);
    return Rect{v[0], v[1], v[2], v[3]};
}

// ---------------------------------------------------------------------------
// Strict JSON config access
// ---------------------------------------------------------------------------

class ConfigObject {
public:
    ConfigObject(const json& j, std::string where, std::set<std::string> allowed) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
        for (const auto& [key, value] : j_.items()) {
            if (!allowed.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

    [[nodiscard]] double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(where_ + "." + key + ": expected a number");
        return v.get<double>();
    }

    [[nodiscard]] long integer(const std::string& key, long fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(where_ + "." + key + ": expected an integer");
        return v.get<long>();
    }

    [[nodiscard]] bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(where_ + "." + key + ": expected true or false");
        return v.get<bool>();
    }

    [[nodiscard]] std::string string(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(where_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }

    [[nodiscard]] std::vector<double> numbers(const std::string& key, std::vector<double> fallback,
                                              std::size_t expected = 0) const {
        if (!has(key)) return fallback;
        return as_numbers(j_.at(key), where_ + "." + key, expected);
    }

    [[nodiscard]] const json& at(const std::string& key) const { return j_.at(key); }

    static std::vector<double> as_numbers(const json& v, const std::string& where, std::size_t expected = 0) {
        if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError(where + ": expected an array of numbers");
            out.push_back(x.get<double>());
        }
        if (expected != 0 && out.size() != expected) {
            throw ConfigError(where + ": expected " + std::to_string(expected) + " numbers");
        }
        return out;
    }

private:
    const json& j_;
    std::string where_;
};

inline WfbsParams params_from_json(const json& j, const std::string& where) {
    const ConfigObject o(j, where, {"a1", "b1", "a2", "b2"});
    for (const char* k : {"a1", "b1", "a2", "b2"}) {
        if (!o.has(k)) throw ConfigError(where + ": missing key '" + std::string(k) + "'");
    }
    return validate_wfbs_params(o.number("a1", 0), o.number("b1", 0), o.number("a2", 0), o.number("b2", 0));
}

inline TestFunction test_function_from_json(const json& j, const std::string& where) {
    const ConfigObject o(j, where, {"kind", "center", "width", "lo", "hi"});
    const std::string kind = o.string("kind", "gaussian");
    if (kind == "gaussian") {
        if (o.has("lo") || o.has("hi")) throw ConfigError(where + ": lo/hi belong to an indicator");
        return TestFunction::gaussian(o.number("center", 0.0), o.number("width", 0.07));
    }
    if (kind == "indicator") {
        if (o.has("center") || o.has("width")) throw ConfigError(where + ": center/width belong to a gaussian");
        if (!o.has("lo") || !o.has("hi")) throw ConfigError(where + ": indicator needs lo and hi");
        return TestFunction::indicator(o.number("lo", 0.0), o.number("hi", 1.0));
    }
    throw ConfigError(where + ".kind: expected \"gaussian\" or \"indicator\"");
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline json report_json(const StatReport& r) {
    json meta = json::object();
    for (const auto& [k, v] : r.metadata) meta[k] = v;
    return json{{"name", r.name},           {"target", r.target},       {"estimate", r.estimate},
                {"stderr", r.stderr_},      {"tolerance", r.tolerance}, {"verdict", r.verdict},
                {"metadata", std::move(meta)}};
}

inline json reports_json(const std::vector<StatReport>& rs) {
    json arr = json::array();
    for (const auto& r : rs) arr.push_back(report_json(r));
    return arr;
}

/// Writes to `path`, or to `fallback` when the path is empty or "-".
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw ConfigError("cannot write '" + path + "'");
            out_ = file_.get();
        }
    }
    std::ostream& operator*() { return *out_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* out_;
};

inline void write_ensemble_csv(std::ostream& os, const OccupationEnsemble& e) {
    os << "replication,s,t,xt\n";
    const auto& pts = e.config.eval_points;
    for (std::size_t r = 0; r < e.xt_values.size(); ++r) {
        for (std::size_t j = 0; j < pts.size(); ++j) {
            os << r << ',' << format_number(pts[j].s) << ',' << format_number(pts[j].t) << ','
               << format_number(e.xt_values[r][j]) << '\n';
        }
    }
}

inline void write_summary(std::ostream& os, const OccupationEnsemble& e) {
    const WfbsParams wp = params_from_particle(e.config.pp);
    const double D = amplitude_D(e.config.pp, e.config.phi.integral(), e.config.psi.integral());
    os << "T=" << format_number(e.config.T) << " replications=" << e.replications
       << " norming=" << format_number(e.norming) << '\n';
    for (std::size_t j = 0; j < e.config.eval_points.size(); ++j) {
        const auto& p = e.config.eval_points[j];
        const auto st = shape_stats(e.column(j));
        const double limit = D * D * wfbm_cov(wp.a1, wp.b1, p.s, p.s) * wfbm_cov(wp.a2, wp.b2, p.t, p.t);
        os << "(" << format_number(p.s) << "," << format_number(p.t) << ") mean=" << format_number(st.mean)
           << " var=" << format_number(st.variance) << " limit_var=" << format_number(limit) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

inline std::vector<StatReport> suite_theorem31(const json& cfg, std::uint64_t seed, int jobs) {
    const ConfigObject o(cfg, "config",
                         {"alpha", "gamma", "phi", "psi", "T_ladder", "replications", "eval_points", "time_steps",
                          "trunc_eps", "scheme", "ci_z", "prelimit_k", "gaussian_k", "prelimit", "force_prelimit",
                          "norming_exponent_scale", "target_scale"});
    ParticleConfig pc;
    const auto alpha = o.numbers("alpha", {2.0, 2.0}, 2);
    const auto gamma = o.numbers("gamma", {0.0, 0.0}, 2);
    pc.pp = validate_particle_params(alpha[0], gamma[0], alpha[1], gamma[1]);
    if (o.has("phi")) pc.phi = test_function_from_json(o.at("phi"), "config.phi");
    if (o.has("psi")) pc.psi = test_function_from_json(o.at("psi"), "config.psi");
    if (o.has("eval_points")) {
        const auto& arr = o.at("eval_points");
        if (!arr.is_array() || arr.empty()) throw ConfigError("config.eval_points: expected a nonempty array");
        pc.eval_points.clear();
        for (const auto& p : arr) {
            const auto v = ConfigObject::as_numbers(p, "config.eval_points", 2);
            pc.eval_points.push_back({v[0], v[1]});
        }
    }
    pc.time_steps = static_cast<int>(o.integer("time_steps", pc.time_steps));
    pc.trunc_eps = o.number("trunc_eps", pc.trunc_eps);
    pc.scheme = parse_scheme(o.string("scheme", "auto"));
    pc.norming_exponent_scale = o.number("norming_exponent_scale", 1.0);
    const auto ladder = o.numbers("T_ladder", {8.0, 32.0, 128.0});
    if (ladder.empty()) throw ConfigError("config.T_ladder: empty");
    const long reps = o.integer("replications", 4000);
    if (reps < 30) throw ConfigError("config.replications: need at least 30");
    pc.T = ladder.front();
    validate_config(pc);

    Theorem31Options opt;
    opt.ci_z = o.number("ci_z", opt.ci_z);
    opt.prelimit_k = o.number("prelimit_k", opt.prelimit_k);
    opt.gaussian_k = o.number("gaussian_k", opt.gaussian_k);
    opt.prelimit = o.boolean("prelimit", opt.prelimit);
    opt.force_prelimit = o.boolean("force_prelimit", opt.force_prelimit);
    opt.target_scale = o.number("target_scale", opt.target_scale);
    return check_theorem31(pc, ladder, static_cast<std::size_t>(reps), seed, jobs, opt);
}

inline std::vector<StatReport> suite_lrd(const json& cfg) {
    const ConfigObject o(cfg, "config",
                         {"params", "tau_ladder", "near", "far", "ray", "rel_tol", "exponent_tol", "target_scale"});
    if (!o.has("params")) throw ConfigError("config: missing key 'params'");
    const WfbsParams p = params_from_json(o.at("params"), "config.params");
    LrdOptions opt;
    if (o.has("near")) {
        const auto v = o.numbers("near", {}, 4);
        opt.near = Rect{v[0], v[1], v[2], v[3]};
    }
    if (o.has("far")) {
        const auto v = o.numbers("far", {}, 4);
        opt.far = Rect{v[0], v[1], v[2], v[3]};
    }
    if (o.has("ray")) {
        const auto v = o.numbers("ray", {}, 5);
        opt.ray = RayQuery{v[0], v[1], v[2], v[3], v[4], 1.0};
    }
    opt.rel_tol = o.number("rel_tol", opt.rel_tol);
    opt.exponent_tol = o.number("exponent_tol", opt.exponent_tol);
    opt.target_scale = o.number("target_scale", opt.target_scale);
    return check_lrd(p, o.numbers("tau_ladder", {1e2, 1e3, 1e4}), opt);
}

inline std::vector<StatReport> suite_increments(const json& cfg) {
    const ConfigObject o(cfg, "config",
                         {"params", "s", "t", "eps_ladder", "big_ladder", "rel_tol", "rescaled_rel_tol",
                          "target_scale"});
    if (!o.has("params")) throw ConfigError("config: missing key 'params'");
    const WfbsParams p = params_from_json(o.at("params"), "config.params");
    IncrementLimitOptions opt;
    opt.s = o.number("s", opt.s);
    opt.t = o.number("t", opt.t);
    opt.eps_ladder = o.numbers("eps_ladder", opt.eps_ladder);
    opt.big_ladder = o.numbers("big_ladder", opt.big_ladder);
    opt.rel_tol = o.number("rel_tol", opt.rel_tol);
    opt.rescaled_rel_tol = o.number("rescaled_rel_tol", opt.rescaled_rel_tol);
    opt.target_scale = o.number("target_scale", opt.target_scale);
    if (opt.eps_ladder.empty() || opt.big_ladder.empty()) throw ConfigError("config: ladders must be nonempty");
    return check_increment_limits(p, opt);
}

inline std::vector<StatReport> suite_holder(const json& cfg, std::uint64_t seed, int jobs) {
    const ConfigObject o(cfg, "config", {"params", "grid_power", "samples", "coarsest_level", "anchors", "tolerance"});
    if (!o.has("params")) throw ConfigError("config: missing key 'params'");
    const WfbsParams p = params_from_json(o.at("params"), "config.params");
    HolderOptions opt;
    opt.samples = static_cast<int>(o.integer("samples", opt.samples));
    opt.coarsest_level = static_cast<int>(o.integer("coarsest_level", opt.coarsest_level));
    opt.anchors = o.numbers("anchors", opt.anchors);
    opt.tolerance = o.number("tolerance", opt.tolerance);
    opt.jobs = jobs;
    if (opt.samples < 1) throw ConfigError("config.samples: need at least one");
    return {check_holder(p, static_cast<int>(o.integer("grid_power", 10)), seed, opt)};
}

/// Empirical covariance of sampled fields against sheet_cov, entry by entry.
inline std::vector<StatReport> suite_field(const json& cfg, std::uint64_t seed, int jobs) {
    const ConfigObject o(cfg, "config", {"params", "s_points", "t_points", "samples", "k"});
    if (!o.has("params")) throw ConfigError("config: missing key 'params'");
    const WfbsParams p = params_from_json(o.at("params"), "config.params");
    const GridSpec g{o.numbers("s_points", {0.5, 1.0, 1.5}), o.numbers("t_points", {0.5, 1.0, 1.5})};
    validate_grid(g);
    const long n = o.integer("samples", 200000);
    const double k = o.number("k", 4.0);
    if (n < 30) throw ConfigError("config.samples: need at least 30");
    const auto samples = sample_field(p, g, static_cast<std::size_t>(n), seed, jobs);
    const std::size_t ns = g.s_points.size();
    const std::size_t m = ns * g.t_points.size();
    std::vector<std::vector<double>> cols(m, std::vector<double>(samples.size()));
    for (std::size_t r = 0; r < samples.size(); ++r) {
        for (std::size_t i = 0; i < m; ++i) cols[i][r] = samples[r].values(i % ns, i / ns);
    }
    std::vector<StatReport> out;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            const double s1 = g.s_points[i % ns], t1 = g.t_points[i / ns];
            const double s2 = g.s_points[j % ns], t2 = g.t_points[j / ns];
            const auto c = empirical_cov(cols[i], cols[j]);
            out.push_back(make_report("field_cov " + point_label({s1, t1}, {s2, t2}), sheet_cov(p, s1, t1, s2, t2),
                                      c.estimate, c.stderr_, k * c.stderr_,
                                      {{"samples", std::to_string(n)}, {"multiplier", format_number(k)}}));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

struct SheetArgs {
    double a1 = 0, b1 = 0, a2 = 0, b2 = 0;
    [[nodiscard]] WfbsParams validated() const { return validate_wfbs_params(a1, b1, a2, b2); }
};

inline void add_sheet_options(CLI::App* app, SheetArgs& a) {
    app->add_option("--a1", a.a1, "weight exponent, s axis")->required();
    app->add_option("--b1", a.b1, "kernel exponent, s axis")->required();
    app->add_option("--a2", a.a2, "weight exponent, t axis")->required();
    app->add_option("--b2", a.b2, "kernel exponent, t axis")->required();
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Weighted fractional Brownian sheets: covariance, sampling and particle-system checks", "wfbs"};
    app.require_subcommand(1);
    int jobs = 0;
    app.add_option("--jobs", jobs, "worker threads (default: $WFBS_JOBS, else all cores)");

    // cov
    SheetArgs cov_p;
    std::vector<std::string> cov_at;
    std::string cov_limit, cov_rect, cov_rect2, cov_ray, cov_point;
    bool cov_header = false;
    auto* cov = app.add_subcommand("cov", "evaluate covariances and their limits");
    add_sheet_options(cov, cov_p);
    cov->add_option("--at", cov_at, "s,t,s2,t2: sheet covariance (repeatable)");
    cov->add_option("--rect", cov_rect, "s,t,s2,t2: first rectangle");
    cov->add_option("--rect2", cov_rect2, "s,t,s2,t2: second rectangle");
    cov->add_option("--limit", cov_limit, "lrd | ray | short | long")
        ->check(CLI::IsMember({"lrd", "ray", "short", "long"}));
    cov->add_option("--ray", cov_ray, "theta,u,v,s,t for --limit ray");
    cov->add_option("--point", cov_point, "s,t for --limit short");
    cov->add_flag("--header", cov_header, "print a CSV header line");

    // field
    SheetArgs field_p;
    std::string field_grid, field_out;
    std::size_t field_n = 1;
    std::uint64_t field_seed = 0;
    auto* field = app.add_subcommand("field", "sample the sheet on a grid");
    add_sheet_options(field, field_p);
    field->add_option("--grid", field_grid, "<s axis>x<t axis>, each lo:hi:n or a comma list")->required();
    field->add_option("--n", field_n, "number of samples");
    field->add_option("--seed", field_seed, "master seed");
    field->add_option("--out", field_out, "CSV path (default stdout)");

    // particles
    std::string part_alpha = "2,2", part_gamma = "0,0", part_phi = "gaussian:0:0.07", part_psi = "gaussian:0:0.07";
    std::string part_scheme = "auto", part_out, part_report, part_ladder;
    std::vector<std::string> part_eval;
    double part_T = 8.0, part_eps = 1e-3, part_norm = 1.0;
    std::size_t part_reps = 500;
    int part_steps = 256;
    std::uint64_t part_seed = 0;
    auto* particles = app.add_subcommand("particles", "simulate the normalized occupation field");
    particles->add_option("--alpha", part_alpha, "alpha1,alpha2");
    particles->add_option("--gamma", part_gamma, "gamma1,gamma2");
    particles->add_option("--phi", part_phi, "gaussian:center:width or indicator:lo:hi");
    particles->add_option("--psi", part_psi, "gaussian:center:width or indicator:lo:hi");
    particles->add_option("--T", part_T, "time scale");
    particles->add_option("--reps", part_reps, "replications");
    particles->add_option("--seed", part_seed, "master seed");
    particles->add_option("--eval", part_eval, "s,t evaluation point (repeatable, default 1,1)");
    particles->add_option("--time-steps", part_steps, "path grid steps per unit of T");
    particles->add_option("--trunc-eps", part_eps, "mass of the expected occupation allowed outside the box");
    particles->add_option("--scheme", part_scheme, "auto | direct | bridge");
    particles->add_option("--norming-scale", part_norm, "multiplies the exponent of F_T");
    particles->add_option("--ladder", part_ladder, "T1,T2,...: run the full limit check instead of one ensemble");
    particles->add_option("--out", part_out, "ensemble CSV path (default stdout)");
    particles->add_option("--report", part_report, "report JSON path");

    // verify
    std::string ver_suite, ver_config, ver_out;
    std::optional<std::uint64_t> ver_seed;
    auto* verify = app.add_subcommand("verify", "run a verification suite and emit a JSON report");
    verify->add_option("--suite", ver_suite, "theorem31 | lrd | increments | holder | field")
        ->required()
        ->check(CLI::IsMember({"theorem31", "lrd", "increments", "holder", "field"}));
    verify->add_option("--config", ver_config, "JSON config (see docs/config.schema.json)");
    verify->add_option("--seed", ver_seed, "master seed (required)");
    verify->add_option("--out", ver_out, "report path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kBadInput;
    }
    jobs = resolve_jobs(jobs);

    try {
        if (*cov) {
            const WfbsParams p = cov_p.validated();
            if (!cov_limit.empty()) {
                double v = 0.0;
                if (cov_limit == "lrd") {
                    const Rect r1 = cov_rect.empty() ? Rect{} : parse_rect(cov_rect);
                    const Rect r2 = cov_rect2.empty() ? Rect{} : parse_rect(cov_rect2);
                    v = lrd_limit(p, r1.s, r1.t, r1.s2, r1.t2, r2.s, r2.t, r2.s2, r2.t2);
                } else if (cov_limit == "ray") {
                    RayQuery q;
                    if (!cov_ray.empty()) {
                        const auto r = parse_list(cov_ray, 5);
                        q = RayQuery{r[0], r[1], r[2], r[3], r[4], 1.0};
                    }
                    v = ray_lrd_limit(p, q);
                } else if (cov_limit == "short") {
                    const auto pt = cov_point.empty() ? std::vector<double>{1.0, 1.0} : parse_list(cov_point, 2);
                    v = short_increment_limit(p, pt[0], pt[1]);
                } else {
                    v = long_increment_limit(p);
                }
                out << format_number(v) << '\n';
                return kOk;
            }
            if (!cov_rect.empty() || !cov_rect2.empty()) {
                if (cov_rect.empty() || cov_rect2.empty()) throw ConfigError("--rect and --rect2 go together");
                const Rect r1 = parse_rect(cov_rect);
                const Rect r2 = parse_rect(cov_rect2);
                if (cov_header) out << "s,t,s2,t2,p,u,p2,u2,value\n";
                out << format_number(r1.s) << ',' << format_number(r1.t) << ',' << format_number(r1.s2) << ','
                    << format_number(r1.t2) << ',' << format_number(r2.s) << ',' << format_number(r2.t) << ','
                    << format_number(r2.s2) << ',' << format_number(r2.t2) << ','
                    << format_number(rect_increment_cov(p, r1, r2)) << '\n';
                return kOk;
            }
            if (cov_at.empty()) throw ConfigError("cov needs --at, --rect/--rect2 or --limit");
            if (cov_header) out << "s,t,s2,t2,value\n";
            for (const auto& a : cov_at) {
                const auto v = parse_list(a, 4);
                out << format_number(v[0]) << ',' << format_number(v[1]) << ',' << format_number(v[2]) << ','
                    << format_number(v[3]) << ',' << format_number(sheet_cov(p, v[0], v[1], v[2], v[3])) << '\n';
            }
            return kOk;
        }

        if (*field) {
            const WfbsParams p = field_p.validated();
            const GridSpec g = parse_grid(field_grid);
            if (field_n == 0) throw ConfigError("--n must be positive");
            const auto samples = sample_field(p, g, field_n, field_seed, jobs);
            Sink sink(field_out, out);
            *sink << "sample,s,t,value\n";
            for (std::size_t k = 0; k < samples.size(); ++k) {
                for (std::size_t i = 0; i < g.s_points.size(); ++i) {
                    for (std::size_t j = 0; j < g.t_points.size(); ++j) {
                        *sink << k << ',' << format_number(g.s_points[i]) << ',' << format_number(g.t_points[j])
                              << ',' << format_number(samples[k].values(static_cast<Eigen::Index>(i),
                                                                        static_cast<Eigen::Index>(j)))
                              << '\n';
                    }
                }
            }
            return kOk;
        }

        if (*particles) {
            ParticleConfig pc;
            const auto a = parse_list(part_alpha, 2);
            const auto gm = parse_list(part_gamma, 2);
            pc.pp = validate_particle_params(a[0], gm[0], a[1], gm[1]);
            pc.phi = parse_test_function(part_phi);
            pc.psi = parse_test_function(part_psi);
            pc.T = part_T;
            pc.time_steps = part_steps;
            pc.trunc_eps = part_eps;
            pc.scheme = parse_scheme(part_scheme);
            pc.norming_exponent_scale = part_norm;
            if (!part_eval.empty()) {
                pc.eval_points.clear();
                for (const auto& e : part_eval) {
                    const auto v = parse_list(e, 2);
                    pc.eval_points.push_back({v[0], v[1]});
                }
            }
            validate_config(pc);
            if (part_reps < 2) throw ConfigError("--reps must be at least 2");
            if (!part_ladder.empty()) {
                const auto ladder = parse_list(part_ladder);
                const auto run = run_theorem31(pc, ladder, part_reps, part_seed, jobs);
                if (!part_out.empty()) {
                    Sink sink(part_out, out);
                    write_ensemble_csv(*sink, run.ensembles.back());
                }
                Sink rep(part_report, out);
                *rep << reports_json(run.reports).dump(2) << '\n';
                write_summary(err, run.ensembles.back());
                return all_pass(run.reports) ? kOk : kFailed;
            }
            const auto e = run_ensemble(pc, part_reps, part_seed, jobs);
            Sink sink(part_out, out);
            write_ensemble_csv(*sink, e);
            write_summary(err, e);
            if (!part_report.empty()) {
                Theorem31Options opt;
                opt.prelimit = false;
                const auto reports = e.replications >= 30 ? evaluate_theorem31({e}, opt) : std::vector<StatReport>{};
                Sink rep(part_report, out);
                *rep << reports_json(reports).dump(2) << '\n';
            }
            return kOk;
        }

        if (*verify) {
            if (!ver_seed) throw ConfigError("verify needs --seed");
            const json cfg = ver_config.empty() ? json::object() : load_json(ver_config);
            if (cfg.is_object() && cfg.empty() && ver_suite != "theorem31") {
                throw ConfigError("suite '" + ver_suite + "' needs --config with at least 'params'");
            }
            std::vector<StatReport> reports;
            if (ver_suite == "theorem31") reports = suite_theorem31(cfg, *ver_seed, jobs);
            if (ver_suite == "lrd") reports = suite_lrd(cfg);
            if (ver_suite == "increments") reports = suite_increments(cfg);
            if (ver_suite == "holder") reports = suite_holder(cfg, *ver_seed, jobs);
            if (ver_suite == "field") reports = suite_field(cfg, *ver_seed, jobs);
            Sink sink(ver_out, out);
            *sink << reports_json(reports).dump(2) << '\n';
            for (const auto& r : reports) {
                if (!r.verdict) err << "FAIL " << r.name << '\n';
            }
            return all_pass(reports) ? kOk : kFailed;
        }
    } catch (const OutOfRange& e) {
        err << "invalid parameters: " << e.what() << '\n';
        return kBadInput;
    } catch (const ConfigError& e) {
        err << "bad input: " << e.what() << '\n';
        return kBadInput;
    } catch (const DomainError& e) {
        err << "bad input: " << e.what() << '\n';
        return kBadInput;
    } catch (const InvalidRect& e) {
        err << "bad input: " << e.what() << '\n';
        return kBadInput;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kFailed;
    } catch (const json::exception& e) {
        err << "bad input: " << e.what() << '\n';
        return kBadInput;
    }
    return kBadInput;
}

}  // namespace wfbs::cli
