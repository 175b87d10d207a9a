#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "wfbs/covariance.hpp"

using namespace wfbs;

namespace {

boost::math::quadrature::tanh_sinh<double>& ts() {
    static boost::math::quadrature::tanh_sinh<double> q;
    return q;
}

// int_0^m r^a (P - r)^b dr for P >= m, with r = m w^{1/(1+a)}. The complement
// argument of tanh_sinh keeps P - r accurate next to the upper end.
double raw_partial(double a, double b, double m, double P) {
    if (m == 0.0) return 0.0;
    const double k = 1.0 / (1.0 + a);
    auto g = [&](double w, double wc) {
        // 1 - w^k, accurate when w is close to 1
        const double one_minus = (w > 0.5 && wc > 0.0) ? -std::expm1(k * std::log1p(-wc)) : 1.0 - std::pow(w, k);
        return std::pow((P - m) + m * one_minus, b);
    };
    return std::pow(m, 1.0 + a) * k * ts().integrate(g, 0.0, 1.0);
}

// int_0^{u^v} r^a [(u-r)^b + (v-r)^b] dr
double raw_cov(double a, double b, double u, double v) {
    const double m = std::min(u, v);
    return raw_partial(a, b, m, u) + raw_partial(a, b, m, v);
}

// int_s^{s2} r^a [(p2-r)^b - (p-r)^b] dr for s2 < p.
double raw_ordered(double a, double b, double s, double s2, double p, double p2) {
    auto g = [&](double r) { return std::pow(r, a) * (std::pow(p2 - r, b) - std::pow(p - r, b)); };
    return ts().integrate(g, s, s2);
}

// Four-term inclusion-exclusion on the raw kernel.
double raw_axis_inc(double a, double b, double s, double s2, double p, double p2) {
    return raw_cov(a, b, s2, p2) - raw_cov(a, b, s, p2) - raw_cov(a, b, s2, p) + raw_cov(a, b, s, p);
}

// int_s^{s2} u^a (s2-u)^b du
double raw_tail(double a, double b, double s, double s2) {
    auto g = [&](double u, double uc) {
        const double gap = uc > 0.0 ? uc : s2 - u;
        return std::pow(u, a) * std::pow(gap, b);
    };
    return ts().integrate(g, s, s2);
}

WfbsParams random_params(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> ua(-0.95, 1.5);
    std::uniform_real_distribution<double> ub(-0.95, 1.0);
    while (true) {
        const double a1 = ua(gen), b1 = ub(gen), a2 = ua(gen), b2 = ub(gen);
        if (std::abs(b1) <= 1.0 + a1 && std::abs(b2) <= 1.0 + a2) return WfbsParams{a1, b1, a2, b2};
    }
}

double rel(double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); }

}  // namespace

TEST_CASE("axis kernel: worked values") {
    CHECK(wfbm_cov(0, 0, 1, 2) == Catch::Approx(2.0).epsilon(1e-14));
    CHECK(wfbm_cov(0, 0.5, 1, 1) == Catch::Approx(4.0 / 3.0).epsilon(1e-14));
    const double expect = 2.0 * boost::math::beta(0.75, 1.5);
    CHECK(rel(wfbm_cov(-0.25, 0.5, 1, 1), expect) < 1e-13);
    CHECK(rel(raw_cov(-0.25, 0.5, 1, 1), expect) < 1e-12);
}

TEST_CASE("axis kernel: symmetric, null at 0, matches raw quadrature") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> ut(0.0, 5.0);
    double worst = 0.0;
    for (int i = 0; i < 400; ++i) {
        const auto p = random_params(gen);
        const double u = ut(gen), v = ut(gen);
        const double c = wfbm_cov(p.a1, p.b1, u, v);
        CHECK(c == wfbm_cov(p.a1, p.b1, v, u));
        CHECK(wfbm_cov(p.a1, p.b1, u, 0.0) == 0.0);
        worst = std::max(worst, rel(c, raw_cov(p.a1, p.b1, u, v)));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("axis kernel: rejects inadmissible input") {
    CHECK_THROWS_AS(wfbm_cov(0, 1.5, 1, 1), DomainError);
    CHECK_THROWS_AS(wfbm_cov(0, 0.5, -1, 1), DomainError);
    CHECK_THROWS_AS(wfbm_cov(-1.0, 0.0, 1, 1), DomainError);
}

TEST_CASE("sheet covariance: product form") {
    CHECK(sheet_cov(WfbsParams{}, 1, 1, 1, 1) == Catch::Approx(4.0));
    CHECK(sheet_cov(WfbsParams{0.3, -0.2, 0.1, 0.4}, 0, 2, 3, 1) == 0.0);
    const WfbsParams p{0, 0.5, 0, 0.5};
    const double expect = raw_cov(0, 0.5, 1, 2) * raw_cov(0, 0.5, 1, 3);
    CHECK(rel(sheet_cov(p, 1, 1, 2, 3), expect) < 1e-10);
}

TEST_CASE("sheet covariance: self-similarity") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> ut(0.0, 3.0);
    std::uniform_real_distribution<double> uh(0.05, 20.0);
    for (int i = 0; i < 500; ++i) {
        const auto p = random_params(gen);
        const double s = ut(gen), t = ut(gen), s2 = ut(gen), t2 = ut(gen), h = uh(gen), k = uh(gen);
        const double lhs = sheet_cov(p, h * s, k * t, h * s2, k * t2);
        const double rhs = std::pow(h, 1 + p.a1 + p.b1) * std::pow(k, 1 + p.a2 + p.b2) * sheet_cov(p, s, t, s2, t2);
        CHECK(rel(lhs, rhs) <= 1e-10);
    }
}

TEST_CASE("increments: ordered disjoint pieces use the difference of kernels") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> ut(0.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const auto p = random_params(gen);
        double s = ut(gen), s2 = s + 0.01 + ut(gen), q = s2 + ut(gen), q2 = q + 0.01 + ut(gen);
        const double lib = axis_increment_cov(p.a1, p.b1, s, s2, q, q2);
        const double oracle = raw_axis_inc(p.a1, p.b1, s, s2, q, q2);
        CHECK(std::abs(lib - oracle) <= 1e-9 * (1.0 + std::abs(oracle)));
        if (q > s2) {
            CHECK(std::abs(lib - raw_ordered(p.a1, p.b1, s, s2, q, q2)) <= 1e-9 * (1.0 + std::abs(oracle)));
        }
    }
}

TEST_CASE("increments: overlapping intervals") {
    std::mt19937_64 gen(10);
    std::uniform_real_distribution<double> ut(0.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const auto p = random_params(gen);
        double s = ut(gen), s2 = s + 0.01 + ut(gen), q = ut(gen), q2 = q + 0.01 + ut(gen);
        const double lib = axis_increment_cov(p.a1, p.b1, s, s2, q, q2);
        const double oracle = raw_axis_inc(p.a1, p.b1, s, s2, q, q2);
        CHECK(std::abs(lib - oracle) <= 1e-9 * (1.0 + std::abs(oracle)));
    }
}

TEST_CASE("rectangle increments: worked covariances and signs") {
    const Rect r1{0, 0, 1, 1};
    const Rect r2{2, 2, 3, 3};
    CHECK(ordered_disjoint(r1, r2));
    CHECK(rect_increment_cov(WfbsParams{0, 0, 0, 0.7}, r1, r2) == 0.0);
    CHECK(rect_increment_cov(WfbsParams{0.2, 0.4, 0, 0}, r1, r2) == 0.0);

    const WfbsParams pos{0, 0.5, 0, 0.5};
    const double c = rect_increment_cov(pos, r1, r2);
    CHECK(c > 0.0);
    // Tensor quadrature of the separated double integral.
    const double o1 = raw_ordered(0, 0.5, 0, 1, 2, 3);
    CHECK(rel(c, o1 * o1) < 1e-10);

    CHECK(rect_increment_cov(WfbsParams{0, 0.5, 0, -0.25}, r1, r2) < 0.0);
}

TEST_CASE("rectangle increments: sign matches sign(b1 b2) on ordered rectangles") {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> ut(0.0, 2.0);
    for (double b1 : {-0.4, 0.0, 0.6}) {
        for (double b2 : {-0.7, 0.0, 0.3}) {
            for (int i = 0; i < 20; ++i) {
                const double s = ut(gen), t = ut(gen);
                const Rect a{s, t, s + 0.1 + ut(gen), t + 0.1 + ut(gen)};
                const Rect b{a.s2 + ut(gen), a.t2 + ut(gen), a.s2 + 3.0, a.t2 + 3.0};
                const double c = rect_increment_cov(WfbsParams{0.2, b1, 0.1, b2}, a, b);
                const int expect = (b1 * b2 > 0) - (b1 * b2 < 0);
                CHECK(((c > 0) - (c < 0)) == expect);
            }
        }
    }
}

TEST_CASE("rectangle increments: invalid rectangles") {
    CHECK_THROWS_AS(rect_increment_var(WfbsParams{}, Rect{1, 0, 1, 1}), InvalidRect);
    CHECK_THROWS_AS(rect_increment_cov(WfbsParams{}, Rect{0, 0, 1, 1}, Rect{-1, 0, 1, 1}), InvalidRect);
    CHECK_THROWS_AS(rect_increment_var(WfbsParams{}, Rect{0, 0, NAN, 1}), InvalidRect);
}

TEST_CASE("rectangle increments: variance") {
    CHECK(rect_increment_var(WfbsParams{}, Rect{0, 0, 1, 1}) == Catch::Approx(4.0));
    CHECK(rect_increment_var(WfbsParams{0, 0.5, 0, 0.5}, Rect{0, 0, 1, 1}) == Catch::Approx(16.0 / 9.0));
    const double A = raw_tail(-0.25, 0.5, 1, 2);
    CHECK(rel(rect_increment_var(WfbsParams{-0.25, 0.5, 0, 0}, Rect{1, 1, 2, 2}), 4.0 * A) < 1e-11);

    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> ut(0.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const auto p = random_params(gen);
        const Rect r{ut(gen), ut(gen), 2.0 + ut(gen), 2.0 + ut(gen)};
        const double v = rect_increment_var(p, r);
        CHECK(v > 0.0);
        CHECK(rel(v, rect_increment_cov(p, r, r)) < 1e-9);
    }
}

TEST_CASE("increment limits: closed forms") {
    CHECK(short_increment_limit(WfbsParams{}, 1, 1) == 4.0);
    CHECK(long_increment_limit(WfbsParams{}) == Catch::Approx(4.0));
    CHECK(long_increment_limit(WfbsParams{0, 0.5, 0, 0.5}) == Catch::Approx(16.0 / 9.0));
    CHECK(short_increment_limit(WfbsParams{-0.25, 0.5, -0.25, 0.5}, 1, 1) == Catch::Approx(16.0 / 9.0));
    CHECK_THROWS_AS(short_increment_limit(WfbsParams{-0.25, 0.5, 0, 0}, 0, 1), DomainError);

    const WfbsParams p{-0.3, 0.4, 0.2, -0.1};
    const double eps = 1e-6, del = 1e-6;
    const double scaled = rect_increment_var(p, Rect{1.5, 0.7, 1.5 + eps, 0.7 + del}) /
                          (std::pow(eps, 1 + p.b1) * std::pow(del, 1 + p.b2));
    CHECK(rel(scaled, short_increment_limit(p, 1.5, 0.7)) < 1e-4);
}

TEST_CASE("long-range dependence constant") {
    const WfbsParams p{0, 0.5, 0, 0.5};
    CHECK(lrd_limit(p, 0, 0, 1, 1, 0, 0, 1, 1) == Catch::Approx(0.25));
    CHECK(lrd_limit(WfbsParams{0, 0, 0, 0.5}, 0, 0, 1, 1, 0, 0, 1, 1) == 0.0);
    const double tau = 1e5;
    const double scaled = std::pow(tau, 1 - p.b1) * std::pow(tau, 1 - p.b2) *
                          rect_increment_cov(p, Rect{0, 0, 1, 1}, Rect{tau, tau, tau + 1, tau + 1});
    CHECK(rel(scaled, 0.25) < 1e-4);
}

TEST_CASE("ray process: regimes and constant") {
    CHECK(classify_ray_regime(WfbsParams{0, 0.3, 0, 0.4}) == RayRegime::Vanishing);
    CHECK(classify_ray_regime(WfbsParams{0, 0.5, 0, 0.5}) == RayRegime::NonTrivial);
    CHECK(classify_ray_regime(WfbsParams{0, 0.6, 0, 0.6}) == RayRegime::Exploding);
    CHECK(std::string(to_string(RayRegime::NonTrivial)) == "non-trivial limit");

    const WfbsParams p{-0.2, 0.5, 0.3, 0.5};
    RayQuery q{1.7, 0.5, 1.5, 0.0, 2.0, 1e7};
    const double scaled = ray_increment_cov(p, q);  // b1 + b2 = 1: no rescaling
    CHECK(rel(scaled, ray_lrd_limit(p, q)) < 1e-3);
    CHECK_THROWS_AS(ray_lrd_limit(WfbsParams{0, 0, 0, 0}, q), DomainError);
    CHECK_THROWS_AS(ray_lrd_limit(WfbsParams{0, 1.0, 0, 0.5}, q), DomainError);
}

TEST_CASE("ray process: one flat axis doubles the other axis' contribution") {
    // With b1 = 0 the first kernel stays at 2 min(u,v)^{1+a1}/(1+a1) however far
    // apart the times are, so the scaled covariance tends to twice the
    // (b1 + b2) expression.
    const WfbsParams p{0, 0, 0, 0.5};
    const RayQuery q{1.0, 0.0, 1.0, 0.0, 1.0, 1e6};
    const double scaled = std::pow(q.tau, 1.0 - (p.b1 + p.b2)) * ray_increment_cov(p, q);
    CHECK(rel(scaled, 2.0 * ray_lrd_limit(p, q)) < 1e-5);
}

TEST_CASE("one-time marginal and amplitude") {
    const WfbsParams p{-0.3, 0.5, 0.2, 0.4};
    // Cov(W(s,t0), W(s',t0)) = C2(t0,t0) C1(s,s')
    CHECK(rel(sheet_cov(p, 0.7, 2.0, 1.3, 2.0), one_time_marginal_scale_sq(p, 1, 2.0) * wfbm_cov(p.a1, p.b1, 0.7, 1.3)) <
          1e-13);
    CHECK(std::abs(amplitude_D(ParticleParams{2, 2, 0, 0}, 1, 1) - 1.0 / std::sqrt(std::numbers::pi)) < 1e-14);
    CHECK(std::abs(amplitude_D(ParticleParams{2, 2, 0, 0}, 2, 0.5) - 1.0 / std::sqrt(std::numbers::pi)) < 1e-14);
    CHECK_THROWS_AS(amplitude_D(ParticleParams{2, 2, 0, 0}, 0, 1), DomainError);
    // alpha = 2, gamma = 0.5 on axis 1: factor sqrt(2 p_1(0) wdi) per axis.
    const double f1 = 2.0 / (2.0 * std::sqrt(std::numbers::pi)) * weighted_density_integral(2.0, 0.5);
    const double f2 = 2.0 / (2.0 * std::sqrt(std::numbers::pi));
    CHECK(rel(amplitude_D(ParticleParams{2, 2, 0.5, 0}, 1, 1), std::sqrt(f1 * f2)) < 1e-14);
}
