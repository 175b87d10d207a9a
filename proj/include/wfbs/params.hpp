#pragma once

#include <array>
#include <cmath>

#include "wfbs/errors.hpp"

namespace wfbs {

/// Per-axis weight/kernel exponents of a weighted fractional Brownian sheet.
struct AxisParams {
    double a = 0.0;
    double b = 0.0;
};

/// The four sheet parameters (a1, b1, a2, b2).
struct WfbsParams {
    double a1 = 0.0;
    double b1 = 0.0;
    double a2 = 0.0;
    double b2 = 0.0;

    [[nodiscard]] AxisParams axis(int i) const { return i == 1 ? AxisParams{a1, b1} : AxisParams{a2, b2}; }
};

/// Stability indices and intensity exponents of the two particle types.
struct ParticleParams {
    double alpha1 = 2.0;
    double alpha2 = 2.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;

    [[nodiscard]] double alpha(int i) const { return i == 1 ? alpha1 : alpha2; }
    [[nodiscard]] double gamma(int i) const { return i == 1 ? gamma1 : gamma2; }
};

struct HolderExponents {
    double delta1 = 1.0;
    double delta2 = 1.0;
};

/// Checks a > -1, -1 < b <= 1 and |b| <= 1 + a for one axis. Closed endpoints
/// are compared exactly, with no tolerance.
inline void validate_axis(int index, double a, double b) {
    if (!std::isfinite(a) || !(a > -1.0)) {
        throw OutOfRange(index, "a > -1", a);
    }
    if (!std::isfinite(b) || !(b > -1.0) || !(b <= 1.0)) {
        throw OutOfRange(index, "-1 < b <= 1", b);
    }
    if (!(std::abs(b) <= 1.0 + a)) {
        throw OutOfRange(index, "|b| <= 1 + a", b);
    }
}

inline WfbsParams validate_wfbs_params(double a1, double b1, double a2, double b2) {
    validate_axis(1, a1, b1);
    validate_axis(2, a2, b2);
    return WfbsParams{a1, b1, a2, b2};
}

inline void validate_particle_axis(int index, double alpha, double gamma) {
    if (!std::isfinite(alpha) || !(alpha > 1.0) || !(alpha <= 2.0)) {
        throw OutOfRange(index, "1 < alpha <= 2", alpha);
    }
    if (!std::isfinite(gamma) || !(gamma < 1.0)) {
        throw OutOfRange(index, "gamma < 1", gamma);
    }
    // Negative gamma keeps the mean finite only when |gamma| < alpha (alpha < 2).
    if (gamma < 0.0 && alpha < 2.0 && !(std::abs(gamma) < alpha)) {
        throw OutOfRange(index, "|gamma| < alpha when gamma < 0 and alpha < 2", gamma);
    }
}

inline ParticleParams validate_particle_params(double alpha1, double gamma1, double alpha2, double gamma2) {
    validate_particle_axis(1, alpha1, gamma1);
    validate_particle_axis(2, alpha2, gamma2);
    return ParticleParams{alpha1, alpha2, gamma1, gamma2};
}

inline ParticleParams validate_particle_params(const ParticleParams& p) {
    return validate_particle_params(p.alpha1, p.gamma1, p.alpha2, p.gamma2);
}

/// Sheet parameters reached in the occupation-time limit: a = -gamma/alpha,
/// b = 1 - 1/alpha on each axis.
inline WfbsParams params_from_particle(const ParticleParams& p) {
    validate_particle_params(p);
    return validate_wfbs_params(-p.gamma1 / p.alpha1, 1.0 - 1.0 / p.alpha1,
                                -p.gamma2 / p.alpha2, 1.0 - 1.0 / p.alpha2);
}

/// Hurst index of the fractional Brownian sheet obtained for gamma = 0.
inline double hurst_from_alpha(double alpha) {
    if (!std::isfinite(alpha) || !(alpha > 1.0) || !(alpha <= 2.0)) {
        throw OutOfRange(1, "1 < alpha <= 2", alpha);
    }
    return 1.0 - 1.0 / (2.0 * alpha);
}

inline double holder_exponent(double a, double b) {
    const double weighted = 1.0 + a + b;
    if (a < 0.0 && weighted > 0.0) {
        return weighted;
    }
    return 1.0 + b;
}

inline HolderExponents holder_exponents(const WfbsParams& p) {
    return HolderExponents{holder_exponent(p.a1, p.b1), holder_exponent(p.a2, p.b2)};
}

}  // namespace wfbs
