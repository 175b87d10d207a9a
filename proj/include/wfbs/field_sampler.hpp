#pragma once

// Exact Gaussian sampling of the sheet on a rectangular grid. The joint
// covariance of the grid values is the Kronecker product of the two axis
// covariance matrices, so W = L1 Z L2^T with Z i.i.d. standard normal.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wfbs/covariance.hpp"
#include "wfbs/errors.hpp"
#include "wfbs/parallel.hpp"
#include "wfbs/params.hpp"
#include "wfbs/random.hpp"

namespace wfbs {

struct GridSpec {
    std::vector<double> s_points;
    std::vector<double> t_points;
};

struct FieldSample {
    GridSpec grid;
    Eigen::MatrixXd values;  // (s index, t index)
    std::uint64_t seed = 0;
};

struct CholeskyResult {
    Eigen::MatrixXd L;
    double jitter = 0.0;  // multiple of trace/n added to the diagonal
};

inline void validate_points(const std::vector<double>& pts, const char* axis) {
    if (pts.empty()) {
        throw DomainError(std::string("grid axis ") + axis + " is empty");
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!std::isfinite(pts[i]) || pts[i] < 0.0) {
            throw DomainError(std::string("grid axis ") + axis + " has a negative or non-finite point");
        }
        if (i > 0 && !(pts[i] > pts[i - 1])) {
            throw DomainError(std::string("grid axis ") + axis + " is not strictly ascending");
        }
    }
}

inline void validate_grid(const GridSpec& g) {
    validate_points(g.s_points, "s");
    validate_points(g.t_points, "t");
}

/// Evenly spaced points lo, ..., hi (count >= 1).
inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    if (count > 1) out.back() = hi;
    return out;
}

inline Eigen::MatrixXd build_axis_cov(double a, double b, const std::vector<double>& pts) {
    validate_points(pts, "covariance");
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double c = wfbm_cov(a, b, pts[i], pts[j]);
            m(i, j) = c;
            m(j, i) = c;
        }
    }
    return m;
}

inline CholeskyResult cholesky_psd(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
        throw DomainError("cholesky_psd: matrix is not square");
    }
    const Eigen::Index n = m.rows();
    if (n == 0) return CholeskyResult{Eigen::MatrixXd(0, 0), 0.0};
    const double scale = m.cwiseAbs().maxCoeff();
    if (!((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale)) {
        throw DomainError("cholesky_psd: matrix is not symmetric");
    }
    const double mean_diag = m.trace() / static_cast<double>(n);
    for (double jitter : {0.0, 1e-12, 1e-10, 1e-8}) {
        Eigen::MatrixXd shifted = m;
        shifted.diagonal().array() += jitter * mean_diag;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) {
            return CholeskyResult{llt.matrixL(), jitter};
        }
    }
    throw NotPSD("covariance matrix is not positive semidefinite even with jitter 1e-8");
}

/// Cholesky factor of one axis, with rows/columns at time 0 left identically zero.
struct AxisFactor {
    Eigen::MatrixXd L;
    double jitter = 0.0;
};

inline AxisFactor factor_axis(double a, double b, const std::vector<double>& pts) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    // Only the first point of an ascending grid can be 0.
    const Eigen::Index offset = pts.front() == 0.0 ? 1 : 0;
    AxisFactor out;
    out.L = Eigen::MatrixXd::Zero(n, n);
    if (n - offset == 0) return out;
    const std::vector<double> positive(pts.begin() + offset, pts.end());
    const auto chol = cholesky_psd(build_axis_cov(a, b, positive));
    out.L.bottomRightCorner(n - offset, n - offset) = chol.L;
    out.jitter = chol.jitter;
    return out;
}

/// Factors once, then draws any number of independent samples.
class FieldSampler {
public:
    FieldSampler(const WfbsParams& p, GridSpec grid) : grid_(std::move(grid)) {
        validate_wfbs_params(p.a1, p.b1, p.a2, p.b2);
        validate_grid(grid_);
        f1_ = factor_axis(p.a1, p.b1, grid_.s_points);
        f2_ = factor_axis(p.a2, p.b2, grid_.t_points);
    }

    [[nodiscard]] const GridSpec& grid() const { return grid_; }
    [[nodiscard]] double jitter_s() const { return f1_.jitter; }
    [[nodiscard]] double jitter_t() const { return f2_.jitter; }

    /// One sample driven entirely by `seed`.
    [[nodiscard]] FieldSample draw(std::uint64_t seed) const {
        const auto m = static_cast<Eigen::Index>(grid_.s_points.size());
        const auto n = static_cast<Eigen::Index>(grid_.t_points.size());
        RandomStream rng(seed);
        Eigen::MatrixXd z(m, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < m; ++i) {
                z(i, j) = rng.normal();
            }
        }
        Eigen::MatrixXd left = f1_.L.triangularView<Eigen::Lower>() * z;
        FieldSample out;
        out.grid = grid_;
        out.values = (f2_.L.triangularView<Eigen::Lower>() * left.transpose()).transpose();
        out.seed = seed;
        return out;
    }

private:
    GridSpec grid_;
    AxisFactor f1_;
    AxisFactor f2_;
};

/// n samples; sample i uses derive_seed(seed, i).
inline std::vector<FieldSample> sample_field(const WfbsParams& p, const GridSpec& g, std::size_t n,
                                             std::uint64_t seed, int jobs = 1) {
    if (n == 0) {
        throw DomainError("sample_field: need at least one sample");
    }
    const FieldSampler sampler(p, g);
    std::vector<FieldSample> out(n);
    parallel_for(n, jobs, [&](std::size_t i) { out[i] = sampler.draw(derive_seed(seed, i)); });
    return out;
}

}  // namespace wfbs
