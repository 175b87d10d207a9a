#pragma once

// Globally adaptive Gauss-Kronrod (10/21-point) integration.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "wfbs/errors.hpp"

namespace wfbs::quad {

struct Tolerance {
    double abs = 1e-12;
    double rel = 1e-10;
    std::size_t max_intervals = 4000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    std::size_t intervals = 0;
    bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};

inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208063315697, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// Gauss weights for the odd-indexed Kronrod nodes.
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
    double a;
    double b;
    double value;
    double error;

    bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment kronrod21(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kKronrodWeights[10];
    double gauss = 0.0;
    for (std::size_t j = 0; j < 10; ++j) {
        const double dx = half * kKronrodNodes[j];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kKronrodWeights[j] * pair;
        if (j % 2 == 1) {
            gauss += kGaussWeights[j / 2] * pair;
        }
    }
    const double value = kronrod * half;
    const double error = std::abs((kronrod - gauss) * half);
    return Segment{a, b, value, error};
}

}  // namespace detail

/// Integrates f over consecutive pieces [points[0], points[1]], ... . Interior
/// points are where f is known to have kinks, peaks or changes of scale.
template <class F>
Result integrate_pieces(F&& f, std::span<const double> points, const Tolerance& tol = {}) {
    Result out;
    if (points.size() < 2) {
        out.converged = true;
        return out;
    }
    std::priority_queue<detail::Segment> heap;
    double value = 0.0;
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        if (points[i + 1] == points[i]) {
            continue;
        }
        auto seg = detail::kronrod21(f, points[i], points[i + 1]);
        value += seg.value;
        error += seg.error;
        heap.push(seg);
    }
    std::size_t count = heap.size();
    while (!heap.empty() && error > std::max(tol.abs, tol.rel * std::abs(value)) &&
           count < tol.max_intervals) {
        const auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Interval cannot be bisected further in double precision.
            heap.push(detail::Segment{worst.a, worst.b, worst.value, 0.0});
            error -= worst.error;
            continue;
        }
        auto left = detail::kronrod21(f, worst.a, mid);
        auto right = detail::kronrod21(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++count;
    }
    // Re-sum to remove drift from incremental updates.
    value = 0.0;
    error = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    out.value = value;
    out.error = error;
    out.intervals = count;
    out.converged = error <= std::max(tol.abs, tol.rel * std::abs(value));
    return out;
}

template <class F>
Result integrate_adaptive(F&& f, double a, double b, const Tolerance& tol = {}) {
    const std::array<double, 2> pts{a, b};
    return integrate_pieces(f, std::span<const double>(pts), tol);
}

/// Like integrate_pieces but throws QuadratureFailure when the tolerance is not met.
template <class F>
double integrate(F&& f, std::span<const double> points, const Tolerance& tol, const char* what) {
    const auto r = integrate_pieces(f, points, tol);
    if (!r.converged) {
        throw QuadratureFailure(std::string(what) + ": error estimate " + std::to_string(r.error) +
                                " exceeds tolerance");
    }
    return r.value;
}

template <class F>
double integrate(F&& f, double a, double b, const Tolerance& tol, const char* what) {
    const std::array<double, 2> pts{a, b};
    return integrate(f, std::span<const double>(pts), tol, what);
}

/// Breakpoints lo, lo + scale, lo + scale*ratio, ... up to hi. Suits integrands
/// that vary on the scale `scale` near lo and slowly (power-law) further out.
inline std::vector<double> geometric_breaks(double lo, double hi, double scale, double ratio = 8.0) {
    std::vector<double> pts{lo};
    double step = scale;
    while (lo + step < hi) {
        pts.push_back(lo + step);
        step *= ratio;
    }
    pts.push_back(hi);
    return pts;
}

}  // namespace wfbs::quad
