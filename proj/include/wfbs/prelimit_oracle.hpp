#pragma once

// Exact finite-T covariance of the fluctuation field of the untruncated
// particle system, by quadrature. Per axis,
//   J(a, b) = int_0^a int_0^b F(u1 ^ u2, |u1 - u2|) du2 du1,
//   F(m, tau) = int |x|^-gamma T_m(f T_tau f)(x) dx,
// and Cov(X_T(s,t), X_T(s',t')) = J1(Ts, Ts') J2(Tt, Tt') / F_T^2.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "wfbs/errors.hpp"
#include "wfbs/particle_system.hpp"
#include "wfbs/quadrature.hpp"
#include "wfbs/special_functions.hpp"
#include "wfbs/test_function.hpp"

namespace wfbs {

struct SemigroupQuery {
    double alpha = 2.0;
    double gamma = 0.0;
    TestFunction f;
    double u1 = 0.0;
    double u2 = 0.0;
};

namespace detail {

// int |x|^-gamma N(x; c, V) dx.
inline double gaussian_weighted_moment(double gamma, double c, double V) {
    if (gamma == 0.0) return 1.0;
    if (c == 0.0) {
        return std::pow(2.0 * V, -0.5 * gamma) * std::tgamma(0.5 * (1.0 - gamma)) / std::sqrt(std::numbers::pi);
    }
    const double sd = std::sqrt(V);
    auto h = [&](double x) { return (normal_pdf((x - c) / sd) + normal_pdf((x + c) / sd)) / sd; };
    return weighted_line_integral(gamma, INFINITY, c, sd, h, quad::Tolerance{1e-14, 1e-11, 4000});
}

// k(tau) = int f(y) (T_tau f)(y) dy for a gaussian f of width sigma and any alpha:
// (1/pi) int_0^inf exp(-sigma^2 xi^2 - tau xi^alpha) dxi.
inline double gaussian_overlap(double alpha, double sigma, double tau) {
    if (alpha == 2.0) {
        return 1.0 / std::sqrt(4.0 * std::numbers::pi * (sigma * sigma + tau));
    }
    auto integrand = [&](double xi) { return std::exp(-sigma * sigma * xi * xi - tau * std::pow(xi, alpha)); };
    const double upper = 7.0 / sigma;  // exp(-49) relative
    const auto pts = quad::geometric_breaks(0.0, upper, 0.05 / sigma, 4.0);
    return quad::integrate(integrand, pts, quad::Tolerance{1e-14, 1e-11, 4000}, "semigroup overlap") /
           std::numbers::pi;
}

// (T_tau f)(y) for a general test function and stable index.
inline double semigroup_apply(double alpha, const TestFunction& f, double tau, double y) {
    if (tau == 0.0) return f(y);
    const StableLaw law{alpha, tau};
    if (f.kind == TestFunction::Kind::Indicator) {
        return stable_cdf(law, y - f.p1) - stable_cdf(law, y - f.p2);
    }
    auto integrand = [&](double z) { return stable_density(law, y - z) * f(z); };
    const std::vector<double> pts{f.zone_lo(), f.p1, f.zone_hi()};
    return quad::integrate(integrand, pts, quad::Tolerance{1e-12, 1e-7, 2000}, "semigroup");
}

// (T_m |.|^-gamma)(y) over the whole line.
inline double weight_smoothed(double alpha, double gamma, double m, double y) {
    if (gamma == 0.0) return 1.0;
    if (m == 0.0) return std::pow(std::abs(y), -gamma);
    if (alpha == 2.0) return gaussian_weighted_moment(gamma, y, 2.0 * m);
    const StableLaw law{alpha, m};
    auto h = [&](double x) { return stable_density(law, x - y) + stable_density(law, -x - y); };
    // Power-law tail of the density: integrate far enough for a 1e-7 remainder.
    const double scale = std::pow(m, 1.0 / alpha);
    const double reach = std::abs(y) + scale * std::pow(1e7, 1.0 / (alpha + gamma));
    return weighted_line_integral(gamma, reach, y, scale, h, quad::Tolerance{1e-12, 1e-7, 4000}, INFINITY);
}

}  // namespace detail

/// F(u1 ^ u2, |u1 - u2|) for one axis.
inline double axis_number_cov(const SemigroupQuery& q) {
    if (!(q.alpha > 1.0 && q.alpha <= 2.0) || !(q.gamma < 1.0)) {
        throw DomainError("axis_number_cov: need 1 < alpha <= 2 and gamma < 1");
    }
    if (!(q.u1 >= 0.0) || !(q.u2 >= 0.0)) {
        throw DomainError("axis_number_cov: times must be nonnegative");
    }
    const double m = std::min(q.u1, q.u2);
    const double tau = std::abs(q.u1 - q.u2);
    const TestFunction& f = q.f;
    if (f.kind == TestFunction::Kind::Gaussian && q.alpha == 2.0) {
        const double var = f.p2 * f.p2;
        const double k = 1.0 / std::sqrt(2.0 * std::numbers::pi * (2.0 * var + 2.0 * tau));
        const double v_star = var * (var + 2.0 * tau) / (2.0 * var + 2.0 * tau);
        return k * detail::gaussian_weighted_moment(q.gamma, f.p1, v_star + 2.0 * m);
    }
    if (f.kind == TestFunction::Kind::Gaussian && q.gamma == 0.0) {
        return detail::gaussian_overlap(q.alpha, f.p2, tau);
    }
    // General case: int f(y) (T_tau f)(y) (T_m |.|^-gamma)(y) dy. Slow.
    auto integrand = [&](double y) {
        return f(y) * detail::semigroup_apply(q.alpha, f, tau, y) * detail::weight_smoothed(q.alpha, q.gamma, m, y);
    };
    std::vector<double> pts{f.zone_lo()};
    if (f.kind == TestFunction::Kind::Gaussian) pts.push_back(f.p1);
    if (f.zone_lo() < 0.0 && f.zone_hi() > 0.0 && q.gamma != 0.0) pts.push_back(0.0);
    pts.push_back(f.zone_hi());
    std::sort(pts.begin(), pts.end());
    return quad::integrate(integrand, pts, quad::Tolerance{1e-12, 1e-6, 2000}, "axis_number_cov");
}

/// J(a, b) = int_0^a int_0^b F(u1 ^ u2, |u1 - u2|) du2 du1.
inline double prelimit_axis_integral(double alpha, double gamma, const TestFunction& f, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) return 0.0;
    const double scale = f.kind == TestFunction::Kind::Gaussian ? f.p2 * f.p2 : 0.01 * (f.p2 - f.p1) * (f.p2 - f.p1);
    const bool fast = alpha == 2.0 && f.kind == TestFunction::Kind::Gaussian;
    const quad::Tolerance tol = fast ? quad::Tolerance{1e-13, 1e-10, 8000} : quad::Tolerance{1e-10, 1e-6, 2000};
    auto F = [&](double m, double tau) { return axis_number_cov(SemigroupQuery{alpha, gamma, f, m, m + tau}); };
    auto tau_breaks = [&](double hi, double kink) {
        auto pts = quad::geometric_breaks(0.0, hi, scale, 4.0);
        if (kink > 0.0 && kink < hi) pts.push_back(kink);
        std::sort(pts.begin(), pts.end());
        return pts;
    };
    if (gamma == 0.0) {
        // F does not depend on m: collapse the square onto the lag tau.
        auto g_b = [&](double tau) { return F(0.0, tau) * std::max(0.0, std::min(a, b - tau)); };
        auto g_a = [&](double tau) { return F(0.0, tau) * std::max(0.0, std::min(b, a - tau)); };
        const auto pb = tau_breaks(b, b - a);
        const auto pa = tau_breaks(a, a - b);
        return quad::integrate(g_b, pb, tol, "prelimit axis integral") +
               quad::integrate(g_a, pa, tol, "prelimit axis integral");
    }
    const double top = std::min(a, b);
    auto outer = [&](double m) {
        auto inner = [&](double tau) { return F(m, tau); };
        double sum = 0.0;
        if (b - m > 0.0) sum += quad::integrate(inner, tau_breaks(b - m, 0.0), tol, "prelimit inner");
        if (a - m > 0.0) sum += quad::integrate(inner, tau_breaks(a - m, 0.0), tol, "prelimit inner");
        return sum;
    };
    return quad::integrate(outer, quad::geometric_breaks(0.0, top, scale, 4.0), tol, "prelimit outer");
}

/// Covariance of X_T at two evaluation points for the untruncated system.
inline double prelimit_cov_XT(const ParticleConfig& cfg, const EvalPoint& p1, const EvalPoint& p2) {
    validate_config(cfg);
    if (p1.s == 0.0 || p1.t == 0.0 || p2.s == 0.0 || p2.t == 0.0) return 0.0;
    const double j1 = prelimit_axis_integral(cfg.pp.alpha1, cfg.pp.gamma1, cfg.phi, cfg.T * p1.s, cfg.T * p2.s);
    const double j2 = prelimit_axis_integral(cfg.pp.alpha2, cfg.pp.gamma2, cfg.psi, cfg.T * p1.t, cfg.T * p2.t);
    const double F = norming(cfg);
    return j1 * j2 / (F * F);
}

}  // namespace wfbs
