#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace dissipcert {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace numeric {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Central-difference step used across the library.
inline double fd_step(double x) { return 1e-5 * std::max(1.0, std::abs(x)); }

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Fourth-order first derivative.
inline double five_point_diff(const std::function<double(double)>& f, double x, double h) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
}

/// Fourth-order second derivative.
inline double five_point_second(const std::function<double(double)>& f, double x, double h) {
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) /
           (12.0 * h * h);
}

/// `count` points log-spaced on [lo, hi], both ends included.
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

inline std::vector<double> lin_grid(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = count == 1 ? lo
                            : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
}

struct BisectOptions {
    /// Stop once |f(x) - target| falls below this.
    double value_tol = 0.0;
    /// Stop once the bracket is narrower than this.
    double width_tol = 0.0;
    int max_iter = 400;
};

/// Bisection for f(x) = target on [lo, hi] where f(lo) - target and f(hi) - target
/// have opposite signs (given by `sign_lo`). Endpoints are never evaluated, which keeps
/// the routine usable on open intervals bounded by poles. Returns the final bracket; when
/// the value tolerance fired, both ends equal the accepted point.
inline std::pair<double, double> bisect_interval(const std::function<double(double)>& f, double target,
                                                 double lo, double hi, int sign_lo,
                                                 const BisectOptions& opts = {}) {
    for (int it = 0; it < opts.max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double r = f(mid) - target;
        if (std::abs(r) <= opts.value_tol) return {mid, mid};
        if ((r > 0) == (sign_lo > 0)) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= opts.width_tol) break;
    }
    return {lo, hi};
}

inline double bisect(const std::function<double(double)>& f, double target, double lo, double hi,
                     int sign_lo, const BisectOptions& opts = {}) {
    const auto [a, b] = bisect_interval(f, target, lo, hi, sign_lo, opts);
    return 0.5 * (a + b);
}

inline double max_abs(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// Orthonormal basis (as columns) of the orthogonal complement of the row space of `rows`.
inline Mat null_space(const Mat& rows, double rank_tol = 1e-12) {
    const Eigen::Index n = rows.cols();
    if (rows.rows() == 0) return Mat::Identity(n, n);
    Eigen::JacobiSVD<Mat> svd(rows, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rank_tol * std::max(1.0, smax)) ++rank;
    }
    return svd.matrixV().rightCols(n - rank);
}

}  // namespace numeric
}  // namespace dissipcert
