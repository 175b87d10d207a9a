#pragma once

// Poisson system of particle pairs (x1 + xi_u, x2 + zeta_v) moving by
// independent symmetric stable motions, its occupation functional
//   <L_{Ts,Tt}, phi (x) psi> = sum_pairs int_0^{Ts} phi(xi_u) du * int_0^{Tt} psi(zeta_v) dv,
// and the fluctuation field X_T = (<L> - E<L>) / F_T.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "wfbs/errors.hpp"
#include "wfbs/parallel.hpp"
#include "wfbs/params.hpp"
#include "wfbs/quadrature.hpp"
#include "wfbs/random.hpp"
#include "wfbs/special_functions.hpp"
#include "wfbs/test_function.hpp"

namespace wfbs {

struct EvalPoint {
    double s = 1.0;
    double t = 1.0;
};

/// Path simulation scheme.
///  Direct: every grid value from successive stable increments.
///  Bridge: (alpha = 2 only) endpoint first, then dyadic Brownian-bridge
///          refinement that skips blocks the path cannot leave the far side
///          of the test-function support from (probability < 1e-12).
///  Auto:   Bridge when alpha = 2, Direct otherwise.
enum class PathScheme { Auto, Direct, Bridge };

inline const char* to_string(PathScheme s) {
    switch (s) {
        case PathScheme::Auto: return "auto";
        case PathScheme::Direct: return "direct";
        case PathScheme::Bridge: return "bridge";
    }
    return "unknown";
}

struct ParticleConfig {
    ParticleParams pp;
    TestFunction phi = TestFunction::gaussian(0.0, 0.07);
    TestFunction psi = TestFunction::gaussian(0.0, 0.07);
    double T = 8.0;
    std::vector<EvalPoint> eval_points{{1.0, 1.0}};
    int time_steps = 256;
    double trunc_eps = 1e-3;
    PathScheme scheme = PathScheme::Auto;
    // Multiplies the exponent of F_T. Anything other than 1 gives a deliberately
    // mis-normed field (used for negative controls).
    double norming_exponent_scale = 1.0;

    [[nodiscard]] const TestFunction& test_function(int axis) const { return axis == 1 ? phi : psi; }
};

struct OccupationEnsemble {
    ParticleConfig config;
    std::size_t replications = 0;
    std::vector<std::vector<double>> xt_values;  // replication x eval point
    std::vector<std::uint64_t> seeds;
    double norming = 1.0;

    /// Column j as a vector.
    [[nodiscard]] std::vector<double> column(std::size_t j) const {
        std::vector<double> out(xt_values.size());
        for (std::size_t r = 0; r < xt_values.size(); ++r) out[r] = xt_values[r][j];
        return out;
    }
};

inline void validate_config(const ParticleConfig& cfg) {
    validate_particle_params(cfg.pp);
    if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) {
        throw DomainError("particle config: T must be positive");
    }
    if (cfg.time_steps < 64) {
        throw DomainError("particle config: time_steps must be at least 64");
    }
    if (!(cfg.trunc_eps > 0.0) || !std::isfinite(cfg.trunc_eps)) {
        throw DomainError("particle config: trunc_eps must be positive");
    }
    if (cfg.eval_points.empty()) {
        throw DomainError("particle config: no evaluation points");
    }
    for (const auto& e : cfg.eval_points) {
        if (!std::isfinite(e.s) || !std::isfinite(e.t) || e.s < 0.0 || e.t < 0.0) {
            throw DomainError("particle config: evaluation points must be finite and nonnegative");
        }
    }
    if (!(cfg.norming_exponent_scale > 0.0) || !std::isfinite(cfg.norming_exponent_scale)) {
        throw DomainError("particle config: norming exponent scale must be positive");
    }
    if (cfg.scheme == PathScheme::Bridge && (cfg.pp.alpha1 != 2.0 || cfg.pp.alpha2 != 2.0)) {
        throw DomainError("particle config: the bridge scheme needs alpha = 2 on both axes");
    }
}

/// F_T^{(i)} = T^{1 - (1 + gamma) / (2 alpha)}.
inline double axis_norming(double T, double alpha, double gamma, double exponent_scale = 1.0) {
    return std::pow(T, exponent_scale * (1.0 - (1.0 + gamma) / (2.0 * alpha)));
}

inline double norming(const ParticleConfig& cfg) {
    return axis_norming(cfg.T, cfg.pp.alpha1, cfg.pp.gamma1, cfg.norming_exponent_scale) *
           axis_norming(cfg.T, cfg.pp.alpha2, cfg.pp.gamma2, cfg.norming_exponent_scale);
}

/// Largest unscaled evaluation time on the axis (s for axis 1, t for axis 2).
inline double max_eval_time(const ParticleConfig& cfg, int axis) {
    double m = 0.0;
    for (const auto& e : cfg.eval_points) m = std::max(m, axis == 1 ? e.s : e.t);
    return m;
}

/// Half-width of the box of initial positions: support radius plus the distance
/// (2 T s_max / eps)^{1/alpha} beyond which the expected number of particles
/// reaching the support before the horizon is below eps.
inline double truncation_radius(const ParticleConfig& cfg, int axis) {
    const double alpha = cfg.pp.alpha(axis);
    const double reach = std::pow(2.0 * cfg.T * max_eval_time(cfg, axis) / cfg.trunc_eps, 1.0 / alpha);
    return cfg.test_function(axis).support_radius() + reach;
}

/// Mass of |x|^{-gamma} dx on [-R, R].
inline double intensity_mass(double gamma, double R) {
    if (!(gamma < 1.0)) throw DomainError("intensity exponent gamma must be < 1");
    return 2.0 * std::pow(R, 1.0 - gamma) / (1.0 - gamma);
}

/// One draw from the normalized intensity |x|^{-gamma} on [-R, R].
inline double sample_intensity_point(double gamma, double R, RandomStream& rng) {
    const double r = R * std::pow(rng.uniform(), 1.0 / (1.0 - gamma));
    return rng.uniform() < 0.5 ? -r : r;
}

/// Poisson point set on [-R, R] with intensity |x|^{-gamma} dx.
inline std::vector<double> sample_initial_points(double gamma, double R, RandomStream& rng) {
    if (!(gamma < 1.0)) throw DomainError("sample_initial_points: gamma must be < 1");
    if (!(R > 0.0)) throw DomainError("sample_initial_points: R must be positive");
    const auto count = rng.poisson(intensity_mass(gamma, R));
    std::vector<double> pts(count);
    for (auto& x : pts) x = sample_intensity_point(gamma, R, rng);
    return pts;
}

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Inverse of erfc on (0, 1) by bisection; only used for setup constants.
inline double erfc_inverse(double p) {
    double lo = 0.0;
    double hi = 30.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (std::erfc(mid) > p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// int_{-R}^{R} |x|^{-gamma} h(x) dx for an h concentrated around +-center at
// scale `width`; the caller passes h(x) + h(-x). Light-tailed h is cut off at
// `span` widths past the center; heavy-tailed h needs span = inf.
template <class H>
double weighted_line_integral(double gamma, double R, double center, double width, H&& h_plus_mirror,
                              const quad::Tolerance& tol, double span = 40.0) {
    const double power = 1.0 / (1.0 - gamma);
    const double upper_x = std::min(R, std::abs(center) + span * width);
    std::vector<double> xs{0.0};
    for (int k = -6; k <= 12; ++k) {
        const double x = std::abs(center) + k * width;
        if (x > 0.0 && x < upper_x) xs.push_back(x);
    }
    for (double x = std::abs(center) + 48.0 * width; x < upper_x; x *= 4.0) xs.push_back(x);
    xs.push_back(upper_x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = std::pow(xs[i], 1.0 - gamma);
    auto integrand = [&](double y) { return h_plus_mirror(std::pow(y, power)) * power; };
    return quad::integrate(integrand, ys, tol, "weighted line integral");
}

// G_H(z) = int_0^H p_w(z) dw for the symmetric alpha-stable law, alpha < 2.
// Substituting u = |z| w^{-1/alpha},
//   G_H(z) = alpha |z|^{alpha-1} Q(|z| H^{-1/alpha}),  Q(u) = int_u^inf v^{-alpha} p_1(v) dv.
// Q is tabulated once on a log grid with exact derivatives -u^{-alpha} p_1(u)
// and evaluated by cubic Hermite interpolation in log u.
class TruncatedPotential {
public:
    TruncatedPotential(double alpha, double H) : alpha_(alpha), H_(H), scale_(std::pow(H, -1.0 / alpha)) {
        const int n = static_cast<int>(std::ceil((std::log(kTop) - std::log(kBottom)) / kStep)) + 1;
        logu_.resize(n);
        q_.resize(n);
        dq_.resize(n);
        for (int i = 0; i < n; ++i) logu_[i] = std::min(std::log(kTop), std::log(kBottom) + i * kStep);
        auto p1 = [alpha](double v) { return unit_stable_density(alpha, v, 1e-13); };
        // Cumulate from the top, where the power series takes over.
        q_[n - 1] = stable_power_series(alpha, kTop, 1.0, alpha, alpha, true);
        for (int i = n - 2; i >= 0; --i) {
            const double a = std::exp(logu_[i]);
            const double b = std::exp(logu_[i + 1]);
            auto g = [&](double v) { return std::pow(v, -alpha) * p1(v); };
            q_[i] = q_[i + 1] + quad::integrate(g, a, b, quad::Tolerance{0.0, 1e-12, 200}, "truncated potential");
        }
        for (int i = 0; i < n; ++i) {
            const double u = std::exp(logu_[i]);
            dq_[i] = -std::pow(u, 1.0 - alpha) * p1(u);  // dQ / dlog u
        }
        p0_ = stable_density_at_zero(alpha, 1.0);
    }

    [[nodiscard]] double operator()(double z) const {
        const double az = std::abs(z);
        if (az == 0.0) return p0_ * std::pow(H_, 1.0 - 1.0 / alpha_) / (1.0 - 1.0 / alpha_);
        return alpha_ * std::pow(az, alpha_ - 1.0) * Q(az * scale_);
    }

    [[nodiscard]] double Q(double u) const {
        if (u >= kTop) return stable_power_series(alpha_, u, 1.0, alpha_, alpha_, true);
        if (u <= kBottom) {
            // p_1 is flat to O(u^2) near 0.
            return q_[0] + p0_ * (std::pow(u, 1.0 - alpha_) - std::pow(kBottom, 1.0 - alpha_)) / (alpha_ - 1.0);
        }
        const double x = std::log(u);
        const auto it = std::upper_bound(logu_.begin(), logu_.end(), x);
        const std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - logu_.begin())) - 1;
        const double h = logu_[i + 1] - logu_[i];
        const double t = (x - logu_[i]) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * q_[i] + (t3 - 2 * t2 + t) * h * dq_[i] + (-2 * t3 + 3 * t2) * q_[i + 1] +
               (t3 - t2) * h * dq_[i + 1];
    }

private:
    static constexpr double kBottom = 1e-7;
    static constexpr double kTop = kStableAsymptoticThreshold;
    static constexpr double kStep = 0.02;

    double alpha_;
    double H_;
    double scale_;
    double p0_ = 0.0;
    std::vector<double> logu_;
    std::vector<double> q_;
    std::vector<double> dq_;
};

}  // namespace detail

/// int_0^H int_{-R}^{R} (T_w f)(x) |x|^{-gamma} dx dw for one axis.
inline double expected_axis_occupation(double alpha, double gamma, const TestFunction& f, double H, double R) {
    if (!(H > 0.0)) return 0.0;
    const quad::Tolerance inner_tol{1e-13, 1e-11, 4000};
    const quad::Tolerance outer_tol{1e-12, 1e-10, 4000};
    auto w_breaks = [&](double scale) { return quad::geometric_breaks(0.0, H, scale, 4.0); };

    if (alpha == 2.0 && f.kind == TestFunction::Kind::Gaussian) {
        const double c = f.p1;
        const double var0 = f.p2 * f.p2;
        auto g = [&](double w) {
            const double sd = std::sqrt(var0 + 2.0 * w);
            if (gamma == 0.0) {
                return detail::normal_cdf((R - c) / sd) - detail::normal_cdf((-R - c) / sd);
            }
            auto h = [&](double x) {
                return (detail::normal_pdf((x - c) / sd) + detail::normal_pdf((x + c) / sd)) / sd;
            };
            return detail::weighted_line_integral(gamma, R, c, sd, h, inner_tol);
        };
        const auto pts = w_breaks(var0);
        return quad::integrate(g, pts, outer_tol, "expected occupation");
    }
    if (alpha == 2.0) {
        const double lo = f.p1;
        const double hi = f.p2;
        auto g = [&](double w) {
            if (w == 0.0) {
                return 0.0;  // single point; never a quadrature node
            }
            const double sd = std::sqrt(2.0 * w);
            if (gamma == 0.0) {
                auto psi = [](double z) { return z * detail::normal_cdf(z) + detail::normal_pdf(z); };
                return sd * (psi((hi + R) / sd) - psi((hi - R) / sd) - psi((lo + R) / sd) + psi((lo - R) / sd));
            }
            auto tf = [&](double x) {
                return detail::normal_cdf((hi - x) / sd) - detail::normal_cdf((lo - x) / sd);
            };
            auto h = [&](double x) { return tf(x) + tf(-x); };
            return detail::weighted_line_integral(gamma, R, 0.5 * (lo + hi), std::max(sd, 0.5 * (hi - lo)), h,
                                                  inner_tol);
        };
        const auto pts = w_breaks(0.01 * (hi - lo) * (hi - lo));
        return quad::integrate(g, pts, outer_tol, "expected occupation");
    }

    // Stable motion: int_{-R}^{R} |x|^{-gamma} V(x) dx with V(x) = int f(y) G_H(x - y) dy.
    const detail::TruncatedPotential G(alpha, H);
    const quad::Tolerance inner{1e-14, 1e-11, 2000};
    auto V = [&](double x) {
        std::vector<double> ys{f.zone_lo(), f.zone_hi()};
        if (f.kind == TestFunction::Kind::Gaussian) ys.push_back(f.p1);
        if (x > f.zone_lo() && x < f.zone_hi()) ys.push_back(x);  // cusp of G_H at 0
        std::sort(ys.begin(), ys.end());
        ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
        auto g = [&](double y) { return f(y) * G(x - y); };
        return quad::integrate(g, ys, inner, "expected occupation (stable)");
    };
    auto h = [&](double x) { return V(x) + V(-x); };
    const double center = f.kind == TestFunction::Kind::Gaussian ? f.p1 : 0.5 * (f.p1 + f.p2);
    const double spread = f.kind == TestFunction::Kind::Gaussian ? f.p2 : 0.5 * (f.p2 - f.p1);
    const double width = std::max(spread, std::pow(H, 1.0 / alpha));
    return detail::weighted_line_integral(gamma, R, center, width, h, quad::Tolerance{1e-12, 1e-9, 4000}, INFINITY);
}

/// E<L_{Ts,Tt}, phi (x) psi> for initial positions restricted to [-R1,R1] x [-R2,R2].
inline double expected_occupation(const ParticleConfig& cfg, double s, double t, double R1, double R2) {
    validate_config(cfg);
    const double e1 = expected_axis_occupation(cfg.pp.alpha1, cfg.pp.gamma1, cfg.phi, cfg.T * s, R1);
    const double e2 = expected_axis_occupation(cfg.pp.alpha2, cfg.pp.gamma2, cfg.psi, cfg.T * t, R2);
    return e1 * e2;
}

/// Everything one axis needs to simulate occupation integrals.
struct AxisPlan {
    double alpha = 2.0;
    double gamma = 0.0;
    TestFunction f;
    double dt = 1.0 / 256.0;
    long cells = 0;                  // grid values at (k - 1/2) dt, k = 1..cells
    std::vector<long> horizon_cells;  // ascending, distinct
    double truncation = 0.0;          // R
    double active = 0.0;              // initial positions beyond this are dropped
    PathScheme scheme = PathScheme::Direct;

    [[nodiscard]] double node_time(long k) const { return k == 0 ? 0.0 : (static_cast<double>(k) - 0.5) * dt; }
};

/// Occupation integrals of one path at each horizon of the plan.
class AxisPath {
public:
    // Blocks whose bridge crosses into the support with probability below
    // exp(-kSkipLog) are not refined.
    static constexpr double kSkipLog = 27.631021115928547;  // -log(1e-12)

    explicit AxisPath(const AxisPlan& plan, bool allow_skip = true)
        : plan_(&plan), allow_skip_(allow_skip), bridge_(plan.scheme == PathScheme::Bridge),
          zone_lo_(plan.f.zone_lo()), zone_hi_(plan.f.zone_hi()), dt_(plan.dt),
          values_(static_cast<std::size_t>(plan.cells) + 1), occupation_(plan.horizon_cells.size(), 0.0) {}

    void begin(double x0, RandomStream& rng) {
        std::fill(occupation_.begin(), occupation_.end(), 0.0);
        hits_ = 0;
        top_ = 0;
        values_[0] = x0;
        cursor_ = 0;
        if (plan_->cells == 0) return;
        if (bridge_) {
            const long n = plan_->cells;
            values_[n] = x0 + std::sqrt(2.0 * plan_->node_time(n)) * rng.normal();
            record(n);
            if (n > 1) push(0, n);
        }
    }

    /// Advances until the path has visited the support; false if it never does.
    bool probe(RandomStream& rng) {
        while (hits_ == 0 && !finished()) step(rng);
        return hits_ > 0;
    }

    void complete(RandomStream& rng) {
        while (!finished()) step(rng);
    }

    [[nodiscard]] bool finished() const { return bridge_ ? top_ == 0 : cursor_ >= plan_->cells; }

    /// dt * sum_{k <= n_h} f(y_k) per horizon h (only final after complete()).
    [[nodiscard]] const std::vector<double>& occupation() const { return occupation_; }

    /// Grid values; entries inside skipped bridge blocks are not filled.
    [[nodiscard]] const std::vector<double>& values() const { return values_; }

    [[nodiscard]] long hits() const { return hits_; }

private:
    struct Block {
        long i0;
        long i1;
    };

    void push(long i0, long i1) { stack_[top_++] = Block{i0, i1}; }

    void record(long k) {
        const double y = values_[static_cast<std::size_t>(k)];
        if (y < zone_lo_ || y > zone_hi_) return;
        const double v = plan_->f(y) * dt_;
        ++hits_;
        const auto& hc = plan_->horizon_cells;
        for (std::size_t h = hc.size(); h-- > 0;) {
            if (hc[h] < k) break;
            occupation_[h] += v;
        }
    }

    void step(RandomStream& rng) {
        if (!bridge_) {
            const long k = ++cursor_;
            const double dt = k == 1 ? 0.5 * dt_ : dt_;
            values_[k] = values_[k - 1] + stable_increment_sample(plan_->alpha, dt, rng);
            record(k);
            return;
        }
        const Block b = stack_[--top_];
        const long i0 = b.i0;
        const long i1 = b.i1;
        const double y0 = values_[i0];
        const double y1 = values_[i1];
        const long im = i0 + (i1 - i0) / 2;
        // Node k sits at (k - 1/2) dt for k >= 1 and node 0 at time 0.
        const double left = (i0 == 0 ? static_cast<double>(im) - 0.5 : static_cast<double>(im - i0)) * dt_;
        const double right = static_cast<double>(i1 - im) * dt_;
        const double duration = left + right;
        if (allow_skip_ && skippable(y0, y1, duration)) return;
        const double mean = y0 + (y1 - y0) * (left / duration);
        const double var = 2.0 * left * right / duration;
        values_[im] = mean + std::sqrt(var) * rng.normal();
        record(im);
        if (i1 - im > 1) push(im, i1);
        if (im - i0 > 1) push(i0, im);
    }

    // Brownian bridge (variance 2 per unit time) staying on one side of a level:
    // P(cross) = exp(-2 d0 d1 / (2 duration)) with d0, d1 the endpoint distances.
    [[nodiscard]] bool skippable(double y0, double y1, double duration) const {
        double d0 = 0.0;
        double d1 = 0.0;
        if (y0 > zone_hi_ && y1 > zone_hi_) {
            d0 = y0 - zone_hi_;
            d1 = y1 - zone_hi_;
        } else if (y0 < zone_lo_ && y1 < zone_lo_) {
            d0 = zone_lo_ - y0;
            d1 = zone_lo_ - y1;
        } else {
            return false;
        }
        return d0 * d1 > kSkipLog * duration;
    }

    const AxisPlan* plan_;
    bool allow_skip_;
    bool bridge_;
    double zone_lo_;
    double zone_hi_;
    double dt_;
    std::vector<double> values_;
    std::vector<double> occupation_;
    // Depth-first refinement never holds more than one block per level.
    std::array<Block, 130> stack_{};
    int top_ = 0;
    long cursor_ = 0;
    long hits_ = 0;
};

/// Per-replication output.
struct ReplicationResult {
    std::vector<double> xt;         // fluctuation field at each eval point
    std::vector<double> occupation;  // raw <L> at each eval point
    std::uint64_t pairs = 0;         // Poisson count in the active box
};

/// Precomputes radii, centering and norming for a configuration; run() is
/// const and may be called concurrently.
class ParticleSimulator {
public:
    explicit ParticleSimulator(ParticleConfig cfg) : cfg_(std::move(cfg)) {
        validate_config(cfg_);
        for (int axis = 1; axis <= 2; ++axis) {
            plans_[axis - 1] = make_plan(axis);
        }
        const double dt = 1.0 / cfg_.time_steps;
        for (const auto& e : cfg_.eval_points) {
            const long n1 = horizon(e.s);
            const long n2 = horizon(e.t);
            index1_.push_back(horizon_index(plans_[0], n1));
            index2_.push_back(horizon_index(plans_[1], n2));
            double mean = 0.0;
            if (n1 > 0 && n2 > 0) {
                mean = axis_mean(0, n1 * dt) * axis_mean(1, n2 * dt);
            }
            expected_.push_back(mean);
        }
        norming_ = wfbs::norming(cfg_);
    }

    [[nodiscard]] const ParticleConfig& config() const { return cfg_; }
    [[nodiscard]] const AxisPlan& plan(int axis) const { return plans_[axis - 1]; }
    [[nodiscard]] double norming() const { return norming_; }
    [[nodiscard]] const std::vector<double>& expected() const { return expected_; }

    /// Expected number of pairs in the active box.
    [[nodiscard]] double active_mass() const {
        return intensity_mass(plans_[0].gamma, plans_[0].active) * intensity_mass(plans_[1].gamma, plans_[1].active);
    }

    [[nodiscard]] ReplicationResult run_detail(std::uint64_t seed) const {
        RandomStream rng(seed);
        AxisPath path1(plans_[0]);
        AxisPath path2(plans_[1]);
        const std::size_t m = cfg_.eval_points.size();
        ReplicationResult out;
        out.occupation.assign(m, 0.0);
        const bool any_time = plans_[0].cells > 0 && plans_[1].cells > 0;
        out.pairs = any_time ? rng.poisson(active_mass()) : 0;
        for (std::uint64_t k = 0; k < out.pairs; ++k) {
            path1.begin(sample_intensity_point(plans_[0].gamma, plans_[0].active, rng), rng);
            if (!path1.probe(rng)) continue;
            path2.begin(sample_intensity_point(plans_[1].gamma, plans_[1].active, rng), rng);
            if (!path2.probe(rng)) continue;
            path1.complete(rng);
            path2.complete(rng);
            const auto& o1 = path1.occupation();
            const auto& o2 = path2.occupation();
            for (std::size_t e = 0; e < m; ++e) {
                if (index1_[e] >= 0 && index2_[e] >= 0) {
                    out.occupation[e] += o1[index1_[e]] * o2[index2_[e]];
                }
            }
        }
        out.xt.resize(m);
        for (std::size_t e = 0; e < m; ++e) {
            out.xt[e] = (index1_[e] < 0 || index2_[e] < 0) ? 0.0 : (out.occupation[e] - expected_[e]) / norming_;
        }
        return out;
    }

    [[nodiscard]] std::vector<double> run(std::uint64_t seed) const { return run_detail(seed).xt; }

private:
    [[nodiscard]] long horizon(double u) const {
        return std::llround(cfg_.T * u * static_cast<double>(cfg_.time_steps));
    }

    static int horizon_index(const AxisPlan& p, long n) {
        if (n == 0) return -1;
        const auto it = std::lower_bound(p.horizon_cells.begin(), p.horizon_cells.end(), n);
        return static_cast<int>(it - p.horizon_cells.begin());
    }

    [[nodiscard]] double axis_mean(int i, double H) const {
        const AxisPlan& p = plans_[i];
        return expected_axis_occupation(p.alpha, p.gamma, p.f, H, p.truncation);
    }

    [[nodiscard]] AxisPlan make_plan(int axis) const {
        AxisPlan p;
        p.alpha = cfg_.pp.alpha(axis);
        p.gamma = cfg_.pp.gamma(axis);
        p.f = cfg_.test_function(axis);
        p.dt = 1.0 / cfg_.time_steps;
        for (const auto& e : cfg_.eval_points) {
            const long n = horizon(axis == 1 ? e.s : e.t);
            if (n > 0) p.horizon_cells.push_back(n);
        }
        std::sort(p.horizon_cells.begin(), p.horizon_cells.end());
        p.horizon_cells.erase(std::unique(p.horizon_cells.begin(), p.horizon_cells.end()), p.horizon_cells.end());
        p.cells = p.horizon_cells.empty() ? 0 : p.horizon_cells.back();
        p.truncation = truncation_radius(cfg_, axis);
        p.scheme = cfg_.scheme;
        if (p.scheme == PathScheme::Auto) {
            p.scheme = p.alpha == 2.0 ? PathScheme::Bridge : PathScheme::Direct;
        }
        p.active = p.truncation;
        if (p.alpha == 2.0 && p.cells > 0) {
            // A Brownian particle (variance 2 per unit time) moves farther than
            // 2 sqrt(H) erfcinv(eps) before H with probability at most 2 eps.
            const double H = static_cast<double>(p.cells) * p.dt;
            const double reach = 2.0 * std::sqrt(H) * detail::erfc_inverse(1e-12);
            p.active = std::min(p.truncation, p.f.support_radius() + reach);
        }
        return p;
    }

    ParticleConfig cfg_;
    AxisPlan plans_[2];
    std::vector<int> index1_;
    std::vector<int> index2_;
    std::vector<double> expected_;
    double norming_ = 1.0;
};

inline std::vector<double> run_replication(const ParticleConfig& cfg, std::uint64_t seed) {
    return ParticleSimulator(cfg).run(seed);
}

/// Replications first_index, ..., first_index + replications - 1 of the seed
/// schedule derive_seed(master_seed, i).
inline OccupationEnsemble run_ensemble(const ParticleSimulator& sim, std::size_t replications,
                                       std::uint64_t master_seed, int jobs = 1, std::uint64_t first_index = 0) {
    if (replications < 2) {
        throw DomainError("run_ensemble: need at least two replications");
    }
    OccupationEnsemble out;
    out.config = sim.config();
    out.replications = replications;
    out.norming = sim.norming();
    out.seeds.resize(replications);
    out.xt_values.resize(replications);
    for (std::size_t i = 0; i < replications; ++i) out.seeds[i] = derive_seed(master_seed, first_index + i);
    parallel_for(replications, jobs, [&](std::size_t i) { out.xt_values[i] = sim.run(out.seeds[i]); });
    return out;
}

inline OccupationEnsemble run_ensemble(const ParticleConfig& cfg, std::size_t replications, std::uint64_t master_seed,
                                       int jobs = 1, std::uint64_t first_index = 0) {
    const ParticleSimulator sim(cfg);
    return run_ensemble(sim, replications, master_seed, jobs, first_index);
}

}  // namespace wfbs
