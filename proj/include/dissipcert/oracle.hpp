#pragma once

#include "errors.hpp"
#include "hyperplane.hpp"
#include "numeric.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

namespace dissipcert {

/// Brute-force local maxima of f on a square patch of the hyperplane.
struct OracleResult {
    struct Maximum {
        Vec x;
        double value = 0.0;
    };
    std::vector<Maximum> maxima;
    double resolution = 0.0;
    double box_radius = 0.0;
    /// Grid-local maxima on the edge of the search box. Not refined, not in `maxima`.
    std::size_t boundary_hits = 0;
    /// Interior grid-local maxima whose ascent did not converge (flat or escaping ridges).
    std::size_t refine_failures = 0;
};

struct AscentOptions {
    double grad_tol = 1e-9;
    int max_iter = 10'000;
    /// Iterates beyond this norm are treated as an unbounded ascent.
    double divergence_norm = 1e8;
};

/// Default oracle window half-width per transfer function.
inline double default_box_radius(const TransferFunction& tf) { return tf.name == "arctan" ? 20.0 : 6.0; }

namespace detail {

/// Orthonormal basis of l^⊥ (columns) and the point of the plane closest to the origin.
struct PlaneFrame {
    Mat basis;
    Vec center;
    Vec unit_normal;
};

inline PlaneFrame plane_frame(const Vec& l, double b) {
    const double norm2 = l.squaredNorm();
    if (!(norm2 > 0.0)) throw InvalidArgument("hyperplane normal must be non-zero");
    PlaneFrame fr;
    fr.basis = numeric::null_space(l.transpose());
    fr.center = (b / norm2) * l;
    fr.unit_normal = l / std::sqrt(norm2);
    return fr;
}

inline Vec project_onto_plane(const Vec& x, const Vec& l, double b) {
    return x - l * ((l.dot(x) - b) / l.squaredNorm());
}

}  // namespace detail

/// Ascent of f along the plane l·x = b: Newton steps in tangent coordinates while the
/// tangent Hessian is negative definite, gradient steps otherwise, both with Armijo
/// backtracking. Stops at projected gradient < grad_tol with a short Newton step.
inline Vec projected_ascent(const RawProblem& p, const Vec& x_start, const AscentOptions& opts = {}) {
    const Eigen::Index n = p.c.size();
    if (p.l.size() != n || x_start.size() != n) throw InvalidArgument("projected_ascent: length mismatch");
    if (std::abs(p.l.dot(x_start) - p.b) > 1e-8 * (1.0 + std::abs(p.b))) {
        throw InvalidArgument("projected_ascent: start point is not on the hyperplane");
    }
    const auto fr = detail::plane_frame(p.l, p.b);
    auto f = [&](const Vec& x) { return objective(p.tf, p.c, x); };
    auto last = [](const Vec& x) { return std::vector<double>(x.data(), x.data() + x.size()); };

    Vec x = detail::project_onto_plane(x_start, p.l, p.b);
    double fx = f(x);
    int stalled = 0;
    int pure_newton = 0;
    for (int it = 0; it < opts.max_iter; ++it) {
        const Vec gu = fr.basis.transpose() * objective_gradient(p.tf, p.c, x);
        Vec d2(n);
        for (Eigen::Index i = 0; i < n; ++i) d2(i) = p.c(i) * p.tf.phi_double_prime(x(i));
        const Mat neg_h = -(fr.basis.transpose() * d2.asDiagonal() * fr.basis);
        Eigen::LLT<Mat> llt(neg_h);
        const bool newton = llt.info() == Eigen::Success;

        Vec dir;
        double step = 1.0;
        if (newton) {
            dir = llt.solve(gu);
            if (gu.norm() < opts.grad_tol && dir.norm() <= 1e-6 * (1.0 + x.norm())) return x;
            // Close to the top, f changes below its rounding level and a line search sees no
            // progress; full Newton steps still converge quadratically there.
            if (gu.norm() < 1e-6 && dir.norm() <= 1e-3 * (1.0 + x.norm())) {
                if (++pure_newton > 50) {
                    throw ConvergenceFailure("projected_ascent: Newton polish does not settle", last(x));
                }
                x = detail::project_onto_plane(x + fr.basis * dir, p.l, p.b);
                fx = f(x);
                continue;
            }
            const double len = dir.norm();
            if (len > 10.0) step = 10.0 / len;
        } else {
            const double gn = gu.norm();
            if (gn == 0.0) {
                throw ConvergenceFailure("projected_ascent: stationary point is not a strict maximum",
                                         last(x));
            }
            dir = gu / gn;
        }
        const double slope = gu.dot(dir);
        bool accepted = false;
        for (int k = 0; k < 60; ++k, step *= 0.5) {
            const Vec trial = detail::project_onto_plane(x + fr.basis * (step * dir), p.l, p.b);
            const double ft = f(trial);
            if (ft >= fx + 1e-4 * step * slope && ft >= fx) {
                stalled = ft > fx ? 0 : stalled + 1;
                x = trial;
                fx = ft;
                accepted = true;
                break;
            }
        }
        if (!accepted || stalled > 50) {
            throw ConvergenceFailure("projected_ascent: no ascent progress", last(x));
        }
        if (x.norm() > opts.divergence_norm) {
            throw ConvergenceFailure("projected_ascent: iterates diverge (unbounded ascent)", last(x));
        }
    }
    throw ConvergenceFailure("projected_ascent: iteration limit reached", last(x));
}

namespace detail {

/// Values of f on the (n−1)-dimensional grid, lexicographic order (last axis fastest).
struct GridScan {
    PlaneFrame frame;
    int dims = 0;
    int steps = 0;
    double h = 0.0;
    double radius = 0.0;
    std::vector<double> values;

    Vec point(const std::vector<int>& idx) const {
        Vec u(dims);
        for (int a = 0; a < dims; ++a) u(a) = -radius + h * idx[a];
        return frame.center + frame.basis * u;
    }
    std::vector<int> unflatten(std::size_t flat) const {
        std::vector<int> idx(dims);
        for (int a = dims - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(flat % steps);
            flat /= steps;
        }
        return idx;
    }
    std::size_t flatten(const std::vector<int>& idx) const {
        std::size_t flat = 0;
        for (int a = 0; a < dims; ++a) flat = flat * steps + idx[a];
        return flat;
    }
};

enum class CellKind { Plain, InteriorMax, EdgeMax };

inline GridScan scan_grid(const RawProblem& p, double box_radius, int steps) {
    const auto n = p.c.size();
    if (n < 2 || p.l.size() != n) throw InvalidArgument("oracle: invalid problem dimensions");
    if (n > 4) throw UnsupportedDimension(static_cast<std::size_t>(n));
    if (steps < 64) throw InvalidArgument("oracle: steps_per_axis must be at least 64");
    if (!(box_radius >= 0.0)) throw InvalidArgument("oracle: box radius must be non-negative");
    GridScan g;
    g.frame = plane_frame(p.l, p.b);
    g.dims = static_cast<int>(n - 1);
    g.steps = steps;
    g.radius = box_radius;
    g.h = 2.0 * box_radius / (steps - 1);
    std::size_t total = 1;
    for (int a = 0; a < g.dims; ++a) total *= static_cast<std::size_t>(steps);
    g.values.resize(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
        g.values[flat] = objective(p.tf, p.c, g.point(g.unflatten(flat)));
    }
    return g;
}

/// Strict grid-local maximum test against all existing neighbours (tie tolerance 1e-12).
inline CellKind classify_cell(const GridScan& g, std::size_t flat) {
    const auto idx = g.unflatten(flat);
    const double v = g.values[flat];
    const double tie = 1e-12 * std::max(1.0, std::abs(v));
    bool edge = false;
    for (int a = 0; a < g.dims; ++a) edge = edge || idx[a] == 0 || idx[a] == g.steps - 1;

    std::vector<int> off(g.dims, -1);
    for (;;) {
        bool centre = true;
        bool inside = true;
        std::vector<int> nb(g.dims);
        for (int a = 0; a < g.dims; ++a) {
            centre = centre && off[a] == 0;
            nb[a] = idx[a] + off[a];
            inside = inside && nb[a] >= 0 && nb[a] < g.steps;
        }
        if (!centre && inside && !(v - g.values[g.flatten(nb)] > tie)) return CellKind::Plain;
        int a = g.dims - 1;
        while (a >= 0 && off[a] == 1) off[a--] = -1;
        if (a < 0) break;
        ++off[a];
    }
    return edge ? CellKind::EdgeMax : CellKind::InteriorMax;
}

}  // namespace detail

/// Dense scan of the plane patch [−R, R]^{n−1} around (b/‖l‖²)·l, grid-local maxima refined
/// by projected ascent and merged within 3·resolution.
inline OracleResult grid_local_maxima(const RawProblem& p, double box_radius, int steps_per_axis) {
    const auto g = detail::scan_grid(p, box_radius, steps_per_axis);
    OracleResult out;
    out.resolution = g.h;
    out.box_radius = box_radius;
    if (box_radius == 0.0) return out;

    for (std::size_t flat = 0; flat < g.values.size(); ++flat) {
        switch (detail::classify_cell(g, flat)) {
            case detail::CellKind::Plain: break;
            case detail::CellKind::EdgeMax: ++out.boundary_hits; break;
            case detail::CellKind::InteriorMax: {
                Vec x;
                try {
                    x = projected_ascent(p, g.point(g.unflatten(flat)));
                } catch (const ConvergenceFailure&) {
                    ++out.refine_failures;
                    break;
                }
                const double fx = objective(p.tf, p.c, x);
                bool merged = false;
                for (auto& m : out.maxima) {
                    if ((m.x - x).norm() <= 3.0 * g.h) {
                        if (fx > m.value) m = {x, fx};
                        merged = true;
                        break;
                    }
                }
                if (!merged) out.maxima.push_back({x, fx});
                break;
            }
        }
    }
    std::sort(out.maxima.begin(), out.maxima.end(), [](const auto& a, const auto& b) {
        return std::lexicographical_compare(a.x.data(), a.x.data() + a.x.size(), b.x.data(),
                                            b.x.data() + b.x.size());
    });
    return out;
}

/// CSV of the scanned grid: tangent coordinates u1..u_{n−1}, f, is_max.
inline void write_grid_csv(const RawProblem& p, double box_radius, int steps_per_axis, std::ostream& os) {
    const auto g = detail::scan_grid(p, box_radius, steps_per_axis);
    for (int a = 0; a < g.dims; ++a) os << 'u' << (a + 1) << ',';
    os << "f,is_max\n";
    os.precision(17);
    for (std::size_t flat = 0; flat < g.values.size(); ++flat) {
        const auto idx = g.unflatten(flat);
        for (int a = 0; a < g.dims; ++a) os << (-g.radius + g.h * idx[a]) << ',';
        const bool is_max = box_radius > 0.0 && detail::classify_cell(g, flat) == detail::CellKind::InteriorMax;
        os << g.values[flat] << ',' << (is_max ? 1 : 0) << '\n';
    }
}

}  // namespace dissipcert
