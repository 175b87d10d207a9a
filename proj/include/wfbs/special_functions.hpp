#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "wfbs/errors.hpp"
#include "wfbs/quadrature.hpp"
#include "wfbs/random.hpp"

namespace wfbs {

// ---------------------------------------------------------------------------
// Incomplete Beta
// ---------------------------------------------------------------------------

inline double log_beta(double p, double q) {
    return std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q);
}

inline double beta_fn(double p, double q) { return std::exp(log_beta(p, q)); }

namespace detail {

// Continued fraction for I_x(p, q) (modified Lentz); converges fast for
// x < (p + 1) / (p + q + 2).
inline double beta_continued_fraction(double x, double p, double q) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    constexpr int max_iter = 20000;
    const double qab = p + q;
    const double qap = p + 1.0;
    const double qam = p - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (q - m) * x / ((qam + m2) * (p + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(p + m) * (qab + m) * x / ((p + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) {
            return h;
        }
    }
    throw QuadratureFailure("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// I_x(p, q) where the caller supplies both x and its complement xc = 1 - x.
/// Passing an exactly computed complement keeps full relative accuracy when
/// x is close to 1.
inline double reg_inc_beta(double x, double xc, double p, double q) {
    if (!(p > 0.0) || !(q > 0.0) || !std::isfinite(p) || !std::isfinite(q)) {
        throw DomainError("reg_inc_beta: shape parameters must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0) || !(xc >= 0.0 && xc <= 1.0)) {
        throw DomainError("reg_inc_beta: x must lie in [0, 1]");
    }
    if (x == 0.0) return 0.0;
    if (xc == 0.0) return 1.0;
    const double log_front = p * std::log(x) + q * std::log(xc) - log_beta(p, q);
    if (x < (p + 1.0) / (p + q + 2.0)) {
        return std::exp(log_front) * detail::beta_continued_fraction(x, p, q) / p;
    }
    return 1.0 - std::exp(log_front) * detail::beta_continued_fraction(xc, q, p) / q;
}

/// Regularized incomplete Beta function I_x(p, q).
inline double reg_inc_beta(double x, double p, double q) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError("reg_inc_beta: x must lie in [0, 1]");
    }
    return reg_inc_beta(x, 1.0 - x, p, q);
}

// ---------------------------------------------------------------------------
// Symmetric alpha-stable law with characteristic function exp(-t |y|^alpha)
// ---------------------------------------------------------------------------

struct StableLaw {
    double alpha = 2.0;
    double t = 1.0;
};

inline void validate_stable(const StableLaw& law, const char* what) {
    if (!(law.alpha > 0.0 && law.alpha <= 2.0) || !(law.t > 0.0) || !std::isfinite(law.t)) {
        throw DomainError(std::string(what) + ": need 0 < alpha <= 2 and t > 0");
    }
}

struct StableTolerances {
    double density_abs = 1e-9;
    double weighted_integral_abs = 1e-7;
};

namespace detail {

// Beyond this |z| the unit-scale density and tail probability come from the
// large-argument power series instead of the Fourier integral.
inline constexpr double kStableAsymptoticThreshold = 30.0;

// Upper cut of the Fourier integral: exp(-Y^alpha) < 1e-18.
inline double stable_fourier_cutoff(double alpha) { return std::pow(41.5, 1.0 / alpha); }

// Sum over k of (-1)^(k+1) c_k z^(-alpha k - shift) sin(k pi alpha / 2),
// with c_k = Gamma(alpha k + g0) / k!, truncated at the smallest term.
inline double stable_power_series(double alpha, double z, double g0, double shift, double extra_denominator_offset,
                                  bool with_denominator) {
    double sum = 0.0;
    double previous = INFINITY;
    for (int k = 1; k < 400; ++k) {
        const double log_mag = std::lgamma(alpha * k + g0) - std::lgamma(k + 1.0) - (alpha * k + shift) * std::log(z);
        double term = std::exp(log_mag) * std::sin(k * std::numbers::pi * alpha / 2.0);
        if (with_denominator) {
            term /= alpha * k + extra_denominator_offset;
        }
        if (k % 2 == 0) term = -term;
        const double mag = std::exp(log_mag);
        if (mag > previous) break;  // asymptotic series starts diverging
        sum += term;
        previous = mag;
        if (mag < 1e-19 * std::abs(sum)) break;
    }
    return sum / std::numbers::pi;
}

inline std::vector<double> cosine_breaks(double z, double upper, double phase) {
    std::vector<double> pts{0.0};
    const double az = std::abs(z);
    if (az > 0.0) {
        for (int k = 0;; ++k) {
            const double y = (k + phase) * std::numbers::pi / az;
            if (y <= 0.0) continue;
            if (y >= upper) break;
            pts.push_back(y);
        }
    }
    pts.push_back(upper);
    return pts;
}

inline double unit_stable_density(double alpha, double z, double abs_tol) {
    z = std::abs(z);
    if (alpha == 2.0) {
        return std::exp(-z * z / 4.0) / (2.0 * std::sqrt(std::numbers::pi));
    }
    if (alpha == 1.0) {
        return 1.0 / (std::numbers::pi * (1.0 + z * z));
    }
    if (z > kStableAsymptoticThreshold) {
        return stable_power_series(alpha, z, 1.0, 1.0, 0.0, false);
    }
    const double upper = stable_fourier_cutoff(alpha);
    const auto pts = cosine_breaks(z, upper, 0.5);
    auto integrand = [alpha, z](double y) { return std::cos(z * y) * std::exp(-std::pow(y, alpha)); };
    quad::Tolerance tol{abs_tol * std::numbers::pi * 0.1, 1e-13, 20000};
    return quad::integrate(integrand, pts, tol, "stable_density") / std::numbers::pi;
}

inline double unit_stable_cdf(double alpha, double z, double abs_tol) {
    if (z < 0.0) {
        return 1.0 - unit_stable_cdf(alpha, -z, abs_tol);
    }
    if (alpha == 2.0) {
        return 0.5 * std::erfc(-z / 2.0);
    }
    if (alpha == 1.0) {
        return 0.5 + std::atan(z) / std::numbers::pi;
    }
    if (z == 0.0) return 0.5;
    if (z > kStableAsymptoticThreshold) {
        return 1.0 - stable_power_series(alpha, z, 0.0, 0.0, 0.0, false);
    }
    const double upper = stable_fourier_cutoff(alpha);
    const auto pts = cosine_breaks(z, upper, 1.0);
    auto integrand = [alpha, z](double y) {
        if (y == 0.0) return z;
        return std::sin(z * y) / y * std::exp(-std::pow(y, alpha));
    };
    quad::Tolerance tol{abs_tol * std::numbers::pi * 0.1, 1e-13, 20000};
    return 0.5 + quad::integrate(integrand, pts, tol, "stable_cdf") / std::numbers::pi;
}

}  // namespace detail

/// Density p_t(x) of the symmetric alpha-stable law at time t.
inline double stable_density(const StableLaw& law, double x, const StableTolerances& tol = {}) {
    validate_stable(law, "stable_density");
    const double scale = std::pow(law.t, -1.0 / law.alpha);
    return scale * detail::unit_stable_density(law.alpha, scale * x, tol.density_abs / scale);
}

inline double stable_cdf(const StableLaw& law, double x, const StableTolerances& tol = {}) {
    validate_stable(law, "stable_cdf");
    const double scale = std::pow(law.t, -1.0 / law.alpha);
    return detail::unit_stable_cdf(law.alpha, scale * x, tol.density_abs);
}

/// p_t(0) = Gamma(1/alpha) / (alpha pi t^(1/alpha)).
inline double stable_density_at_zero(double alpha, double t) {
    if (!(alpha > 0.0 && alpha <= 2.0) || !(t > 0.0)) {
        throw DomainError("stable_density_at_zero: need 0 < alpha <= 2 and t > 0");
    }
    return std::tgamma(1.0 / alpha) / (alpha * std::numbers::pi * std::pow(t, 1.0 / alpha));
}

/// Integral over the real line of p_1(x) / |x|^gamma.
inline double weighted_density_integral(double alpha, double gamma, const StableTolerances& tol = {}) {
    if (!(alpha > 1.0 && alpha <= 2.0)) {
        throw DomainError("weighted_density_integral: need 1 < alpha <= 2");
    }
    if (!(gamma < 1.0)) {
        throw DomainError("weighted_density_integral: need gamma < 1");
    }
    if (alpha < 2.0 && !(gamma > -alpha)) {
        throw DomainError("weighted_density_integral: tail integral diverges for gamma <= -alpha");
    }
    if (gamma == 0.0) {
        return 1.0;
    }
    const double piece_tol = tol.weighted_integral_abs / 8.0;
    const double dens_tol = piece_tol * 1e-2;
    auto p1 = [&](double x) { return detail::unit_stable_density(alpha, x, dens_tol); };

    // [0, 1] with x = w^(1/(1-gamma)), which turns x^-gamma dx into dw/(1-gamma).
    const double power = 1.0 / (1.0 - gamma);
    auto head_integrand = [&](double w) { return p1(std::pow(w, power)) * power; };
    const double head = quad::integrate(head_integrand, 0.0, 1.0, quad::Tolerance{piece_tol, 1e-12, 4000},
                                        "weighted_density_integral head");

    const double upper = alpha == 2.0 ? 60.0 : detail::kStableAsymptoticThreshold;
    const auto pts = quad::geometric_breaks(1.0, upper, 1.0, 2.0);
    auto body_integrand = [&](double x) { return p1(x) * std::pow(x, -gamma); };
    const double body = quad::integrate(body_integrand, pts, quad::Tolerance{piece_tol, 1e-12, 4000},
                                        "weighted_density_integral body");

    double tail = 0.0;
    if (alpha < 2.0) {
        // Termwise integral of the power-tail expansion over [upper, inf).
        tail = detail::stable_power_series(alpha, upper, 1.0, gamma, gamma, true);
    }
    return 2.0 * (head + body + tail);
}

/// dt^(1/alpha) S with S standard symmetric alpha-stable (Chambers-Mallows-Stuck).
/// For alpha = 2 this is N(0, 2 dt).
inline double stable_increment_sample(double alpha, double dt, RandomStream& rng) {
    if (alpha == 2.0) {
        return std::sqrt(2.0 * dt) * rng.normal();
    }
    const double v = std::numbers::pi * (rng.uniform() - 0.5);
    if (alpha == 1.0) {
        return dt * std::tan(v);
    }
    const double w = rng.exponential();
    const double s = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
                     std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
    return std::pow(dt, 1.0 / alpha) * s;
}

}  // namespace wfbs
