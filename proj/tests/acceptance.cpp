// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [--jobs N] [criterion ...]

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "wfbs/wfbs.hpp"

using namespace wfbs;

namespace {

constexpr std::uint64_t kSeed = 20240611;
constexpr std::size_t kReplications = 4000;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

// ---------------------------------------------------------------------------
// Independent oracles
// ---------------------------------------------------------------------------

boost::math::quadrature::tanh_sinh<double>& ts() {
    static boost::math::quadrature::tanh_sinh<double> q;
    return q;
}

// int_0^m r^a (P - r)^b dr, P >= m, after r = m w^{1/(1+a)}.
double raw_partial(double a, double b, double m, double P) {
    if (m == 0.0) return 0.0;
    const double k = 1.0 / (1.0 + a);
    auto g = [&](double w, double wc) {
        const double one_minus = (w > 0.5 && wc > 0.0) ? -std::expm1(k * std::log1p(-wc)) : 1.0 - std::pow(w, k);
        return std::pow((P - m) + m * one_minus, b);
    };
    return std::pow(m, 1.0 + a) * k * ts().integrate(g, 0.0, 1.0);
}

double raw_cov(double a, double b, double u, double v) {
    const double m = std::min(u, v);
    return raw_partial(a, b, m, u) + raw_partial(a, b, m, v);
}

// Mass of p_1 beyond L from the large-x series.
double tail_mass(double alpha, double L) {
    double sum = 0.0;
    for (int k = 1; k <= 12; ++k) {
        const double term = std::tgamma(alpha * k + 1.0) / std::tgamma(k + 1.0) *
                            std::sin(std::numbers::pi * alpha * k / 2.0) * std::pow(L, -alpha * k) / (alpha * k);
        sum += (k % 2 == 1 ? term : -term);
    }
    return sum / std::numbers::pi;
}

WfbsParams random_params(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> ua(-0.95, 1.5);
    std::uniform_real_distribution<double> ub(-0.95, 1.0);
    while (true) {
        const double a1 = ua(gen), b1 = ub(gen), a2 = ua(gen), b2 = ub(gen);
        if (std::abs(b1) <= 1.0 + a1 && std::abs(b2) <= 1.0 + a2) return WfbsParams{a1, b1, a2, b2};
    }
}

const StatReport* find(const std::vector<StatReport>& rs, const std::string& prefix) {
    for (const auto& r : rs) {
        if (r.name.rfind(prefix, 0) == 0) return &r;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Shared state
// ---------------------------------------------------------------------------

struct Context {
    int jobs = 1;
    std::optional<Theorem31Run> brownian;  // criteria 4, 5, 11

    static ParticleConfig brownian_config() {
        ParticleConfig c;
        c.pp = ParticleParams{2, 2, 0, 0};
        c.phi = TestFunction::gaussian(0.0, 0.07);
        c.psi = TestFunction::gaussian(0.0, 0.07);
        c.eval_points = {{1.0, 1.0}};
        return c;
    }

    const Theorem31Run& brownian_run() {
        if (!brownian) {
            Theorem31Options opt;
            opt.prelimit = false;
            brownian = run_theorem31(brownian_config(), {8.0, 32.0, 128.0}, kReplications, kSeed, jobs, opt);
        }
        return *brownian;
    }

    static const std::vector<WfbsParams>& lrd_params() {
        static const std::vector<WfbsParams> p{{0, 0.45, 0, 0.5}, {0, 0.5, 0, 0.5}, {0, 0.6, 0, 0.6}};
        return p;
    }
};

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

Outcome c1_covariance_quadrature(Context&) {
    std::mt19937_64 gen(kSeed);
    std::uniform_real_distribution<double> ut(0.05, 5.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto p = random_params(gen);
        const double s = ut(gen), t = ut(gen), s2 = ut(gen), t2 = ut(gen);
        const double lib = sheet_cov(p, s, t, s2, t2);
        const double quad = raw_cov(p.a1, p.b1, s, s2) * raw_cov(p.a2, p.b2, t, t2);
        worst = std::max(worst, std::abs(lib - quad) / std::abs(quad));
    }
    return {worst <= 1e-9, "max rel deviation " + fmt("%.3g", worst) + " over 1000 tuples (tol 1e-9)"};
}

Outcome c2_stable_constants(Context&) {
    using boost::math::quadrature::gauss_kronrod;
    double worst_zero = 0.0;
    double worst_mass = 0.0;
    for (double alpha : {1.0, 1.2, 1.5, 1.8, 2.0}) {
        const double exact = std::tgamma(1.0 / alpha) / (alpha * std::numbers::pi);
        worst_zero = std::max(worst_zero, std::abs(stable_density(StableLaw{alpha, 1.0}, 0.0) - exact));
        const double L = 200.0;
        auto f = [&](double x) { return stable_density(StableLaw{alpha, 1.0}, x); };
        double body = 0.0;
        const double cuts[] = {0.0, 1.0, 3.0, 10.0, 30.0, 80.0, L};
        for (int i = 0; i + 1 < 7; ++i) body += gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 8, 1e-13);
        worst_mass = std::max(worst_mass, std::abs(2.0 * (body + tail_mass(alpha, L)) - 1.0));
    }
    return {worst_zero <= 1e-8 && worst_mass <= 1e-6, "max |p(0) - Gamma(1/a)/(a pi)| " + fmt("%.3g", worst_zero) +
                                                          " (tol 1e-8), max |mass - 1| " + fmt("%.3g", worst_mass) +
                                                          " (tol 1e-6)"};
}

Outcome c3_field_sampler(Context& ctx) {
    const WfbsParams p{-0.25, 0.5, 0, 0.25};
    const GridSpec g{{0.5, 1.0, 1.5}, {0.5, 1.0, 1.5}};
    const std::size_t n = 200000;
    const FieldSampler sampler(p, g);
    std::vector<std::vector<double>> cols(9, std::vector<double>(n));
    parallel_for(n, ctx.jobs, [&](std::size_t r) {
        const auto s = sampler.draw(derive_seed(kSeed + 3, r));
        for (int i = 0; i < 9; ++i) cols[i][r] = s.values(i / 3, i % 3);
    });
    int bad = 0;
    double worst = 0.0;
    for (int i = 0; i < 9; ++i) {
        for (int j = i; j < 9; ++j) {
            const auto c = empirical_cov(cols[i], cols[j]);
            const double target = sheet_cov(p, g.s_points[i / 3], g.t_points[i % 3], g.s_points[j / 3], g.t_points[j % 3]);
            const double z = std::abs(c.estimate - target) / c.stderr_;
            worst = std::max(worst, z);
            if (z > 4.0) ++bad;
        }
    }
    return {bad == 0, "45 entries, worst |est - target| / SE " + fmt("%.3g", worst) + " (tol 4)"};
}

Outcome c4_occupation_limit(Context& ctx) {
    const auto& run = ctx.brownian_run();
    const auto* lim = find(run.reports, "limit_cov T=128 (1,1)x(1,1)");
    const auto* dec = find(run.reports, "limit_error_decreasing (1,1)x(1,1)");
    const auto* skew = find(run.reports, "skewness T=128");
    const auto* kurt = find(run.reports, "excess_kurtosis T=128");
    std::string detail = "target " + fmt("%.6g", lim->target) + ", T=128 estimate " + fmt("%.6g", lim->estimate) +
                         " +- " + fmt("%.3g", lim->tolerance) + " (95% CI), abs errors " +
                         dec->metadata.at("abs_errors") + ", skewness " + fmt("%.3g", skew->estimate) +
                         ", excess kurtosis " + fmt("%.3g", kurt->estimate);
    return {lim->verdict && dec->verdict, detail};
}

Outcome c5_prelimit(Context& ctx) {
    const auto& run = ctx.brownian_run();
    const auto& e8 = run.ensembles.front();
    const auto c = empirical_cov(e8, 0, 0);
    const EvalPoint p{1.0, 1.0};
    const double exact8 = prelimit_cov_XT(e8.config, p, p);
    const bool mc_ok = std::abs(c.estimate - exact8) <= 3.0 * c.stderr_;

    ParticleConfig cfg = Context::brownian_config();
    cfg.T = 512.0;
    const double exact512 = prelimit_cov_XT(cfg, p, p);
    const double D = amplitude_D(cfg.pp, 1.0, 1.0);
    const double limit = D * D * 16.0 / 9.0;
    const double rel = std::abs(exact512 / limit - 1.0);
    return {mc_ok && rel <= 0.01, "T=8 MC " + fmt("%.6g", c.estimate) + " vs exact " + fmt("%.6g", exact8) +
                                      " (|diff|/SE " + fmt("%.3g", std::abs(c.estimate - exact8) / c.stderr_) +
                                      ", tol 3); T=512 exact rel error " + fmt("%.3g", rel) + " (tol 0.01)"};
}

Outcome c6_weighted(Context& ctx) {
    ParticleConfig cfg = Context::brownian_config();
    cfg.pp = ParticleParams{2, 2, 0.5, 0};
    cfg.T = 128.0;
    cfg.eval_points = {{1, 1}, {1, 2}, {2, 1}};
    const auto e = run_ensemble(cfg, kReplications, derive_seed(kSeed, 6), ctx.jobs);
    Theorem31Options opt;
    opt.prelimit = false;
    const auto rs = evaluate_theorem31({e}, opt);
    const WfbsParams wp = params_from_particle(cfg.pp);
    int inside = 0;
    int total = 0;
    double worst = 0.0;
    for (const auto& r : rs) {
        if (r.name.rfind("limit_cov", 0) != 0) continue;
        ++total;
        if (r.verdict) ++inside;
        worst = std::max(worst, std::abs(r.estimate - r.target) / r.stderr_);
    }
    return {total == 6 && inside == 6, "a=(" + fmt("%g", wp.a1 + 0.0) + "," + fmt("%g", wp.a2 + 0.0) + ") b=(" + fmt("%g", wp.b1) +
                                           "," + fmt("%g", wp.b2) + "), " + std::to_string(inside) + "/" +
                                           std::to_string(total) + " entries inside the 95% CI, worst |z| " +
                                           fmt("%.3g", worst)};
}

Outcome c7_sign(Context&) {
    const Rect r1{0.2, 0.3, 1.0, 1.1};
    const Rect r2{1.5, 1.4, 2.5, 3.0};
    int agree = 0;
    for (double b1 : {-0.5, 0.0, 0.5}) {
        for (double b2 : {-0.3, 0.0, 0.7}) {
            const double c = rect_increment_cov(WfbsParams{0.1, b1, 0.2, b2}, r1, r2);
            const int expect = (b1 * b2 > 0) - (b1 * b2 < 0);
            if (((c > 0) - (c < 0)) == expect) ++agree;
        }
    }
    return {agree == 9, std::to_string(agree) + "/9 sign combinations agree"};
}

Outcome c8_self_similarity(Context&) {
    std::mt19937_64 gen(kSeed + 8);
    std::uniform_real_distribution<double> ut(0.01, 3.0);
    std::uniform_real_distribution<double> uh(0.05, 20.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto p = random_params(gen);
        const double s = ut(gen), t = ut(gen), s2 = ut(gen), t2 = ut(gen), h = uh(gen), k = uh(gen);
        const double lhs = sheet_cov(p, h * s, k * t, h * s2, k * t2);
        const double rhs = std::pow(h, 1 + p.a1 + p.b1) * std::pow(k, 1 + p.a2 + p.b2) * sheet_cov(p, s, t, s2, t2);
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
    }
    return {worst <= 1e-10, "max rel error " + fmt("%.3g", worst) + " over 10000 cases (tol 1e-10)"};
}

Outcome c9_lrd(Context&) {
    bool ok = true;
    std::string detail;
    for (const auto& p : Context::lrd_params()) {
        const auto rs = check_lrd(p, {1e2, 1e3, 1e4});
        const auto* lrd = find(rs, "lrd_limit");
        const auto* ray = find(rs, "ray_lrd_limit");
        ok = ok && lrd->verdict && ray->verdict;
        detail += std::string(detail.empty() ? "" : "; ") + ray->metadata.at("regime") + ": lrd rel " +
                  fmt("%.2g", std::abs(lrd->estimate / lrd->target - 1)) + ", ray rel " +
                  fmt("%.2g", std::abs(ray->estimate / ray->target - 1));
    }
    return {ok, detail + " (tol 0.01)"};
}

Outcome c10_holder(Context& ctx) {
    bool ok = true;
    std::string detail;
    HolderOptions opt;
    opt.jobs = ctx.jobs;
    for (const auto& p : {WfbsParams{0, 0.5, 0, 0.5}, WfbsParams{-0.3, 0.5, 0, 0}, WfbsParams{0.5, -0.2, -0.25, 0.25}}) {
        const auto r = check_holder(p, 10, kSeed + 10, opt);
        ok = ok && r.verdict;
        detail += std::string(detail.empty() ? "" : "; ") + "slopes (" + fmt("%.3f", std::stod(r.metadata.at("slope1"))) +
                  "," + fmt("%.3f", std::stod(r.metadata.at("slope2"))) + ") vs (" +
                  fmt("%.3f", std::stod(r.metadata.at("half_delta1"))) + "," +
                  fmt("%.3f", std::stod(r.metadata.at("half_delta2"))) + ")";
    }
    return {ok, detail + " (tol 0.1)"};
}

Outcome c11_negative_controls(Context& ctx) {
    const auto& run = ctx.brownian_run();
    Theorem31Options opt;
    opt.prelimit = false;
    const auto* base = find(run.reports, "limit_cov T=128 (1,1)x(1,1)");

    std::vector<OccupationEnsemble> perturbed;
    for (const auto& e : run.ensembles) perturbed.push_back(renormed(e, 1.1));
    const auto renormed_reports = evaluate_theorem31(perturbed, opt);
    const auto* by_norming = find(renormed_reports, "limit_cov T=128 (1,1)x(1,1)");
    Theorem31Options scaled = opt;
    scaled.target_scale = 1.1;
    const auto scaled_reports = evaluate_theorem31(run.ensembles, scaled);
    const auto* by_target = find(scaled_reports, "limit_cov T=128 (1,1)x(1,1)");
    const bool occ_flips = base->verdict && !by_norming->verdict && !by_target->verdict;

    int lrd_flipped = 0;
    int lrd_total = 0;
    LrdOptions lopt;
    lopt.target_scale = 1.1;
    for (const auto& p : Context::lrd_params()) {
        const auto before = check_lrd(p, {1e2, 1e3, 1e4});
        const auto after = check_lrd(p, {1e2, 1e3, 1e4}, lopt);
        for (const char* name : {"lrd_limit", "ray_lrd_limit"}) {
            ++lrd_total;
            if (find(before, name)->verdict && !find(after, name)->verdict) ++lrd_flipped;
        }
    }
    return {occ_flips && lrd_flipped == lrd_total,
            std::string("occupation limit: baseline ") + (base->verdict ? "pass" : "fail") + ", exponent x1.1 " +
                (by_norming->verdict ? "pass" : "fail") + ", target x1.1 " + (by_target->verdict ? "pass" : "fail") +
                "; lrd verdicts flipped " + std::to_string(lrd_flipped) + "/" + std::to_string(lrd_total)};
}

}  // namespace

int main(int argc, char** argv) {
    Context ctx;
    std::set<int> only;
    int requested_jobs = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--jobs" && i + 1 < argc) {
            requested_jobs = std::atoi(argv[++i]);
        } else {
            only.insert(std::atoi(a.c_str()));
        }
    }
    ctx.jobs = resolve_jobs(requested_jobs);

    const std::vector<std::pair<std::string, std::function<Outcome(Context&)>>> criteria{
        {"covariance closed form vs quadrature", c1_covariance_quadrature},
        {"stable density constants", c2_stable_constants},
        {"field sampler exactness", c3_field_sampler},
        {"occupation field limit, brownian unweighted", c4_occupation_limit},
        {"pre-limit oracle agreement", c5_prelimit},
        {"weighted occupation field, three points", c6_weighted},
        {"sign trichotomy", c7_sign},
        {"self-similarity identity", c8_self_similarity},
        {"long-range dependence limits", c9_lrd},
        {"Hoelder slopes", c10_holder},
        {"negative controls", c11_negative_controls},
    };

    std::printf("acceptance: jobs=%d seed=%llu\n", ctx.jobs, static_cast<unsigned long long>(kSeed));
    std::fflush(stdout);
    bool all = true;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        all = all && o.pass;
        std::printf("[%s] %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
