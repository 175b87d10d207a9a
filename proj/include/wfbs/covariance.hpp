#pragma once

// Analytic covariance of the weighted fractional Brownian sheet
//   K_W((s,t),(s',t')) = C1(s,s') C2(t,t'),
//   C(u,v) = int_0^{u^v} r^a [(u-r)^b + (v-r)^b] dr,
// evaluated through incomplete Beta closed forms.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "wfbs/errors.hpp"
#include "wfbs/params.hpp"
#include "wfbs/special_functions.hpp"

namespace wfbs {

/// Rectangle ((s,t),(s2,t2)].
struct Rect {
    double s = 0.0;
    double t = 0.0;
    double s2 = 1.0;
    double t2 = 1.0;
};

struct RayQuery {
    double theta = 1.0;
    double u = 0.0;
    double v = 1.0;
    double s = 0.0;
    double t = 1.0;
    double tau = 1.0;
};

namespace detail {

inline void require_axis(double a, double b, const char* what) {
    if (!(a > -1.0) || !(b > -1.0) || !(b <= 1.0) || !(std::abs(b) <= 1.0 + a) || !std::isfinite(a)) {
        throw DomainError(std::string(what) + ": axis parameters outside -1 < a, -1 < b <= 1, |b| <= 1 + a");
    }
}

inline void require_time(double x, const char* what) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
        throw DomainError(std::string(what) + ": times must be finite and nonnegative");
    }
}

// G(x, P) = int_0^x r^a (P - r)^b dr for 0 <= x <= P.
inline double partial_kernel(double a, double b, double x, double P) {
    if (x <= 0.0 || P <= 0.0) return 0.0;
    const double p = a + 1.0;
    const double q = b + 1.0;
    return std::pow(P, 1.0 + a + b) * beta_fn(p, q) * reg_inc_beta(x / P, (P - x) / P, p, q);
}

// A(s, s') = int_s^{s'} u^a (s' - u)^b du.
inline double tail_kernel(double a, double b, double s, double s2) {
    if (s2 <= s) return 0.0;
    const double p = b + 1.0;
    const double q = a + 1.0;
    return std::pow(s2, 1.0 + a + b) * beta_fn(p, q) * reg_inc_beta((s2 - s) / s2, s / s2, p, q);
}

// Cov of increments over (s,s2] and (p,p2] with s2 <= p:
// int_s^{s2} r^a [(p2 - r)^b - (p - r)^b] dr.
inline double ordered_increment_cov(double a, double b, double s, double s2, double p, double p2) {
    if (b == 0.0 || s2 <= s || p2 <= p) return 0.0;
    return (partial_kernel(a, b, s2, p2) - partial_kernel(a, b, s, p2)) -
           (partial_kernel(a, b, s2, p) - partial_kernel(a, b, s, p));
}

}  // namespace detail

/// Single-axis kernel C(u, v).
inline double wfbm_cov(double a, double b, double u, double v) {
    detail::require_axis(a, b, "wfbm_cov");
    detail::require_time(u, "wfbm_cov");
    detail::require_time(v, "wfbm_cov");
    const double lo = std::min(u, v);
    const double hi = std::max(u, v);
    if (lo == 0.0) return 0.0;
    return detail::partial_kernel(a, b, lo, lo) + detail::partial_kernel(a, b, lo, hi);
}

inline double sheet_cov(const WfbsParams& p, double s, double t, double s2, double t2) {
    const double c1 = wfbm_cov(p.a1, p.b1, s, s2);
    const double c2 = wfbm_cov(p.a2, p.b2, t, t2);
    return c1 * c2;
}

/// Int_s^{s2} u^a (s2 - u)^b du, the factor of the increment variance.
inline double increment_kernel(double a, double b, double s, double s2) {
    detail::require_axis(a, b, "increment_kernel");
    detail::require_time(s, "increment_kernel");
    return detail::tail_kernel(a, b, s, s2);
}

/// Covariance of the single-axis increments over (s,s2] and (p,p2].
inline double axis_increment_cov(double a, double b, double s, double s2, double p, double p2) {
    detail::require_axis(a, b, "axis_increment_cov");
    if (s > p) {
        std::swap(s, p);
        std::swap(s2, p2);
    }
    if (s2 <= p) {
        return detail::ordered_increment_cov(a, b, s, s2, p, p2);
    }
    // Overlapping: split both intervals at every endpoint and sum over pieces.
    std::array<double, 4> cuts{s, s2, p, p2};
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double e0 = cuts[i];
        const double e1 = cuts[i + 1];
        if (!(e1 > e0) || e0 < s || e1 > s2) continue;
        for (int j = 0; j < 3; ++j) {
            const double f0 = cuts[j];
            const double f1 = cuts[j + 1];
            if (!(f1 > f0) || f0 < p || f1 > p2) continue;
            if (i == j) {
                total += 2.0 * detail::tail_kernel(a, b, e0, e1);
            } else if (i < j) {
                total += detail::ordered_increment_cov(a, b, e0, e1, f0, f1);
            } else {
                total += detail::ordered_increment_cov(a, b, f0, f1, e0, e1);
            }
        }
    }
    return total;
}

inline void validate_rect(const Rect& r) {
    const bool finite = std::isfinite(r.s) && std::isfinite(r.t) && std::isfinite(r.s2) && std::isfinite(r.t2);
    if (!finite || !(r.s >= 0.0) || !(r.t >= 0.0) || !(r.s < r.s2) || !(r.t < r.t2)) {
        throw InvalidRect("rectangle needs 0 <= s < s2 and 0 <= t < t2");
    }
}

/// True when r1 lies entirely before r2 in both coordinates (no overlap).
inline bool ordered_disjoint(const Rect& r1, const Rect& r2) { return r1.s2 <= r2.s && r1.t2 <= r2.t; }

/// Covariance of the rectangle increments over r1 and r2.
inline double rect_increment_cov(const WfbsParams& p, const Rect& r1, const Rect& r2) {
    validate_rect(r1);
    validate_rect(r2);
    return axis_increment_cov(p.a1, p.b1, r1.s, r1.s2, r2.s, r2.s2) *
           axis_increment_cov(p.a2, p.b2, r1.t, r1.t2, r2.t, r2.t2);
}

inline double rect_increment_var(const WfbsParams& p, const Rect& r) {
    validate_rect(r);
    return 4.0 * increment_kernel(p.a1, p.b1, r.s, r.s2) * increment_kernel(p.a2, p.b2, r.t, r.t2);
}

/// Limit of eps^{-1-b1} delta^{-1-b2} times the variance over ((s,t),(s+eps,t+delta)].
inline double short_increment_limit(const WfbsParams& p, double s, double t) {
    if (!(s >= 0.0) || !(t >= 0.0) || (s == 0.0 && p.a1 < 0.0) || (t == 0.0 && p.a2 < 0.0)) {
        throw DomainError("short_increment_limit: need s, t > 0 (or zero with nonnegative a)");
    }
    return 4.0 * std::pow(s, p.a1) * std::pow(t, p.a2) / ((1.0 + p.b1) * (1.0 + p.b2));
}

/// Limit of the variance over a unit-scaled rectangle pushed to infinity.
inline double long_increment_limit(const WfbsParams& p) {
    return 4.0 * beta_fn(1.0 + p.a1, 1.0 + p.b1) * beta_fn(1.0 + p.a2, 1.0 + p.b2);
}

inline double lrd_limit(const WfbsParams& p, double s, double t, double s2, double t2, double pp, double u, double pp2,
                        double u2) {
    validate_rect(Rect{s, t, s2, t2});
    validate_rect(Rect{pp, u, pp2, u2});
    return p.b1 * p.b2 / ((1.0 + p.a1) * (1.0 + p.a2)) * (pp2 - pp) *
           (std::pow(s2, 1.0 + p.a1) - std::pow(s, 1.0 + p.a1)) * (u2 - u) *
           (std::pow(t2, 1.0 + p.a2) - std::pow(t, 1.0 + p.a2));
}

/// Cov(Z_x, Z_y) for the ray process Z_x = W(x, theta x).
inline double ray_cov(const WfbsParams& p, double theta, double x, double y) {
    return wfbm_cov(p.a1, p.b1, x, y) * wfbm_cov(p.a2, p.b2, theta * x, theta * y);
}

/// Cov(Z_v - Z_u, Z_{t+tau} - Z_{s+tau}).
inline double ray_increment_cov(const WfbsParams& p, const RayQuery& q) {
    if (!(q.theta > 0.0) || !(q.u < q.v) || !(q.s < q.t) || !(q.u >= 0.0) || !(q.s >= 0.0) || !(q.tau >= 0.0)) {
        throw DomainError("ray query needs theta > 0, 0 <= u < v, 0 <= s < t, tau >= 0");
    }
    const double hi = q.t + q.tau;
    const double lo = q.s + q.tau;
    return ray_cov(p, q.theta, q.v, hi) - ray_cov(p, q.theta, q.v, lo) - ray_cov(p, q.theta, q.u, hi) +
           ray_cov(p, q.theta, q.u, lo);
}

/// Limit of tau^{1-(b1+b2)} Cov(Z_v - Z_u, Z_{t+tau} - Z_{s+tau}) as tau grows.
/// When exactly one b_i is 0 the other axis keeps its (v - r)^0 term, the
/// true limit is larger, and this expression no longer matches it.
inline double ray_lrd_limit(const WfbsParams& p, const RayQuery& q) {
    if (!(p.b1 >= 0.0 && p.b1 < 1.0) || !(p.b2 >= 0.0 && p.b2 < 1.0)) {
        throw DomainError("ray_lrd_limit: need 0 <= b1, b2 < 1");
    }
    if (p.b1 == 0.0 && p.b2 == 0.0) {
        throw DomainError("ray_lrd_limit: b1 and b2 cannot both be zero");
    }
    if (!(q.theta > 0.0) || !(q.u < q.v) || !(q.s < q.t)) {
        throw DomainError("ray query needs theta > 0, u < v, s < t");
    }
    const double e = 2.0 + p.a1 + p.a2;
    return std::pow(q.theta, 1.0 + p.a2 + p.b2) * (p.b1 + p.b2) / ((1.0 + p.a1) * (1.0 + p.a2)) *
           (std::pow(q.v, e) - std::pow(q.u, e)) * (q.t - q.s);
}

enum class RayRegime { Vanishing, NonTrivial, Exploding };

/// Long-range behaviour of ray increments as the separation grows:
/// the covariance vanishes for b1 + b2 < 1, converges for = 1, grows for > 1.
inline RayRegime classify_ray_regime(const WfbsParams& p) {
    const double sum = p.b1 + p.b2;
    if (sum < 1.0) return RayRegime::Vanishing;
    if (sum == 1.0) return RayRegime::NonTrivial;
    return RayRegime::Exploding;
}

inline const char* to_string(RayRegime r) {
    switch (r) {
        case RayRegime::Vanishing: return "vanishing";
        case RayRegime::NonTrivial: return "non-trivial limit";
        case RayRegime::Exploding: return "exploding";
    }
    return "unknown";
}

/// Squared constant in front of the wfBm in the one-time marginal: with the
/// other coordinate frozen at `fixed`, the marginal covariance is
/// C_other(fixed, fixed) times the kernel of the free axis.
inline double one_time_marginal_scale_sq(const WfbsParams& p, int free_axis, double fixed) {
    const AxisParams other = p.axis(free_axis == 1 ? 2 : 1);
    return wfbm_cov(other.a, other.b, fixed, fixed);
}

/// Amplitude of the occupation-time limit for test-function integrals int_phi, int_psi.
inline double amplitude_D(const ParticleParams& pp, double int_phi, double int_psi, const StableTolerances& tol = {}) {
    validate_particle_params(pp);
    if (int_phi * int_psi == 0.0) {
        throw DomainError("amplitude_D: test-function integrals must be nonzero");
    }
    double product = 1.0;
    for (int i = 1; i <= 2; ++i) {
        const double alpha = pp.alpha(i);
        product *= 1.0 / (1.0 - 1.0 / alpha) * stable_density_at_zero(alpha, 1.0) *
                   weighted_density_integral(alpha, pp.gamma(i), tol);
    }
    return int_phi * int_psi * std::sqrt(product);
}

}  // namespace wfbs
