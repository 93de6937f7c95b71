#pragma once

#include "errors.hpp"
#include "hyperplane.hpp"
#include "log.hpp"
#include "numeric.hpp"
#include "transfer.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace dissipcert {

/// y_{k+1} = W φ(y_k).
struct RnnModel {
    Mat W;
    TransferFunction tf;

    Eigen::Index dim() const { return W.rows(); }
    void validate() const {
        if (W.rows() < 1 || W.rows() != W.cols()) throw InvalidArgument("W must be a non-empty square matrix");
    }
};

/// {x : ⟨l_j, x⟩ ≤ α_j for every row l_j of `directions`}, rows of unit length.
struct Polytope {
    Mat directions;
    Vec supports;

    Eigen::Index dim() const { return directions.cols(); }
    Eigen::Index size() const { return directions.rows(); }
    double radius() const { return supports.size() ? supports.maxCoeff() : 0.0; }

    bool contains(const Vec& x, double slack = 1e-9) const {
        for (Eigen::Index j = 0; j < directions.rows(); ++j)
            if (directions.row(j).dot(x) - supports(j) > slack * (1.0 + std::abs(supports(j)))) return false;
        return true;
    }
};

/// ±e_i and (±e_i ± e_j)/√2 for i < j: 2n + 2n(n−1) unit directions.
inline Mat default_directions(Eigen::Index n) {
    std::vector<Vec> rows;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (double s : {1.0, -1.0}) {
            Vec v = Vec::Zero(n);
            v(i) = s;
            rows.push_back(v);
        }
    }
    const double r = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            for (double si : {1.0, -1.0}) {
                for (double sj : {1.0, -1.0}) {
                    Vec v = Vec::Zero(n);
                    v(i) = si * r;
                    v(j) = sj * r;
                    rows.push_back(v);
                }
            }
        }
    }
    Mat out(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
    return out;
}

namespace detail {

inline bool next_combination(std::vector<int>& idx, int m) {
    const int k = static_cast<int>(idx.size());
    int i = k - 1;
    while (i >= 0 && idx[i] == m - k + i) --i;
    if (i < 0) return false;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    return true;
}

template <class F>
void for_each_subset(int m, int k, F&& f) {
    if (k > m || k <= 0) return;
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    do {
        f(idx);
    } while (next_combination(idx, m));
}

inline Mat rows_of(const Mat& a, const std::vector<int>& idx) {
    Mat out(static_cast<Eigen::Index>(idx.size()), a.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = a.row(idx[k]);
    return out;
}

/// True when the recession cone {d : L d ≤ 0} is {0}.
inline bool directions_positively_span(const Mat& L) {
    const auto n = static_cast<int>(L.cols());
    const auto m = static_cast<int>(L.rows());
    Eigen::FullPivLU<Mat> lu(L);
    lu.setThreshold(1e-12);
    if (lu.rank() < n) return false;
    if (n == 1) return (L.array() > 0).any() && (L.array() < 0).any();
    bool bounded = true;
    // Extreme rays of the cone lie on n−1 linearly independent active constraints.
    for_each_subset(m, n - 1, [&](const std::vector<int>& idx) {
        if (!bounded) return;
        const Mat ns = numeric::null_space(rows_of(L, idx), 1e-12);
        if (ns.cols() != 1) return;
        const Vec v = ns.col(0);
        const Vec s = L * v;
        const double tol = 1e-12;
        if ((s.array() <= tol).all() || (s.array() >= -tol).all()) bounded = false;
    });
    return bounded;
}

}  // namespace detail

/// Checks shape, unit rows and boundedness; throws on failure.
inline void validate_polytope(const Polytope& D) {
    const auto n = D.dim();
    if (n < 1) throw InvalidArgument("polytope dimension must be at least 1");
    if (D.supports.size() != D.size()) throw InvalidArgument("polytope: one support per direction required");
    if (D.size() < n + 1) throw UnboundedDomain("polytope needs at least n+1 directions to be bounded");
    for (Eigen::Index j = 0; j < D.size(); ++j) {
        if (std::abs(D.directions.row(j).norm() - 1.0) > 1e-12) {
            throw InvalidArgument("polytope direction " + std::to_string(j) + " is not a unit vector");
        }
    }
    if (!detail::directions_positively_span(D.directions)) {
        throw UnboundedDomain("polytope directions do not bound every axis");
    }
}

/// Box [−h, h]ⁿ described with `directions` (default set when empty). A direction l gets
/// support h‖l‖₁, the exact support of the box.
inline Polytope make_box(Eigen::Index n, double half_width, Mat directions = Mat()) {
    if (!(half_width >= 0.0)) throw InvalidArgument("box half-width must be non-negative");
    Polytope D;
    D.directions = directions.size() ? std::move(directions) : default_directions(n);
    if (D.directions.cols() != n) throw InvalidArgument("direction length does not match dimension");
    D.supports.resize(D.directions.rows());
    for (Eigen::Index j = 0; j < D.directions.rows(); ++j)
        D.supports(j) = half_width * D.directions.row(j).lpNorm<1>();
    validate_polytope(D);
    return D;
}

/// Box [−h, h]ⁿ with h = ‖W‖_∞ · sup|φ|. It contains W φ(ℝⁿ), so it is forward invariant
/// and every D_k grown from it contains W φ(D_{k−1}).
inline Polytope absorbing_box(const RnnModel& model, Mat directions = Mat()) {
    model.validate();
    const double bound = std::max(std::abs(model.tf.phi(1e300)), std::abs(model.tf.phi(-1e300)));
    if (!std::isfinite(bound)) throw InvalidArgument("absorbing_box: phi is not bounded");
    const double h = model.W.cwiseAbs().rowwise().sum().maxCoeff() * bound;
    return make_box(model.dim(), h, std::move(directions));
}

struct Certificate {
    enum class Verdict { Certified, Stalled, IterLimit };
    Verdict verdict = Verdict::IterLimit;
    int iterations = 0;
    std::vector<double> radius_trace;
    Polytope final_polytope;
    /// D_0 … D_iterations.
    std::vector<Polytope> history;
};

inline const char* to_string(Certificate::Verdict v) {
    switch (v) {
        case Certificate::Verdict::Certified: return "Certified";
        case Certificate::Verdict::Stalled: return "Stalled";
        case Certificate::Verdict::IterLimit: return "IterLimit";
    }
    return "?";
}

inline Vec step(const RnnModel& model, const Vec& y) {
    if (y.size() != model.dim()) throw InvalidArgument("step: state length does not match W");
    Vec p(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) p(i) = model.tf.phi(y(i));
    return model.W * p;
}

inline std::vector<Vec> simulate(const RnnModel& model, const Vec& y0, int steps) {
    if (steps < 1) throw InvalidArgument("simulate: steps must be at least 1");
    std::vector<Vec> traj{y0};
    traj.reserve(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k < steps; ++k) traj.push_back(step(model, traj.back()));
    return traj;
}

/// Vertices and bounding box of a bounded polytope.
struct PolytopeGeometry {
    std::vector<Vec> vertices;
    Vec lower;
    Vec upper;
};

inline PolytopeGeometry analyze(const Polytope& D) {
    const auto n = static_cast<int>(D.dim());
    const auto m = static_cast<int>(D.size());
    PolytopeGeometry g;
    detail::for_each_subset(m, n, [&](const std::vector<int>& idx) {
        const Mat a = detail::rows_of(D.directions, idx);
        Eigen::FullPivLU<Mat> lu(a);
        lu.setThreshold(1e-12);
        if (lu.rank() < n) return;
        Vec rhs(n);
        for (int k = 0; k < n; ++k) rhs(k) = D.supports(idx[k]);
        const Vec v = lu.solve(rhs);
        if (!D.contains(v)) return;
        for (const auto& w : g.vertices)
            if ((w - v).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + v.cwiseAbs().maxCoeff())) return;
        g.vertices.push_back(v);
    });
    if (g.vertices.empty()) throw InvalidArgument("polytope is empty");
    g.lower = g.upper = g.vertices.front();
    for (const auto& v : g.vertices) {
        g.lower = g.lower.cwiseMin(v);
        g.upper = g.upper.cwiseMax(v);
    }
    return g;
}

/// Where the support maximum was found.
struct SupportSearch {
    double value = -numeric::kInf;
    Vec argmax;
    std::string source;
    double grid_value = -numeric::kInf;
};

/// Direction-independent data shared by every support search over one polytope: faces
/// below facet level, and φ tabulated at vertices, edge samples and the coarse grid.
struct SupportCache {
    struct Edge {
        Vec a, b;
        Mat phi;
    };
    struct Face {
        Mat basis;
        std::vector<Vec> starts;
    };
    PolytopeGeometry geo;
    Mat vertex_phi;
    std::vector<Edge> edges;
    std::vector<Face> faces;
    Mat grid_points;
    Mat grid_phi;
};

namespace detail {

inline constexpr int kEdgeSamples = 257;
inline constexpr int kGridSteps = 33;

inline Vec phi_of(const TransferFunction& tf, const Vec& x) {
    Vec out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = tf.phi(x(i));
    return out;
}

/// Vertices of D that satisfy the rows in `active` with equality.
inline std::vector<Vec> tight_vertices(const Polytope& D, const PolytopeGeometry& g, const std::vector<int>& active) {
    std::vector<Vec> out;
    for (const auto& v : g.vertices) {
        bool tight = true;
        for (int j : active) {
            if (std::abs(D.directions.row(j).dot(v) - D.supports(j)) > 1e-9 * (1.0 + std::abs(D.supports(j)))) {
                tight = false;
                break;
            }
        }
        if (tight) out.push_back(v);
    }
    return out;
}

/// Maximum of Σ c_i φ(x_i) on an edge: the tabulated sweep, then golden-section refinement
/// around every interior sample that beats its neighbours.
inline std::pair<double, Vec> segment_max(const TransferFunction& tf, const Vec& c, const SupportCache::Edge& e) {
    auto h = [&](double t) { return objective(tf, c, e.a + t * (e.b - e.a)); };
    const Eigen::RowVectorXd vals = c.transpose() * e.phi;
    const auto last = vals.size() - 1;
    double best_t = vals(0) >= vals(last) ? 0.0 : 1.0;
    double best = std::max(vals(0), vals(last));
    for (Eigen::Index i = 1; i < last; ++i) {
        if (vals(i) > vals(i - 1) && vals(i) >= vals(i + 1)) {
            double lo = static_cast<double>(i - 1) / last;
            double hi = static_cast<double>(i + 1) / last;
            const double r = 0.5 * (std::sqrt(5.0) - 1.0);
            double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
            double f1 = h(x1), f2 = h(x2);
            for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
                if (f1 < f2) {
                    lo = x1, x1 = x2, f1 = f2, x2 = lo + r * (hi - lo), f2 = h(x2);
                } else {
                    hi = x2, x2 = x1, f2 = f1, x1 = hi - r * (hi - lo), f1 = h(x1);
                }
            }
            const double t = 0.5 * (lo + hi);
            const double v = h(t);
            if (v > best) best = v, best_t = t;
        }
    }
    return {best, e.a + best_t * (e.b - e.a)};
}

/// Gradient ascent with Armijo backtracking on the affine set {x0 + N u}; gives up (NaN)
/// once an iterate leaves D, since the face boundary is searched separately.
inline std::pair<double, Vec> face_ascent(const TransferFunction& tf, const Vec& c, const Polytope& D,
                                          const Vec& x0, const Mat& N) {
    Vec x = x0;
    double fx = objective(tf, c, x);
    for (int it = 0; it < 2000; ++it) {
        const Vec gu = N.transpose() * objective_gradient(tf, c, x);
        const double gn = gu.norm();
        if (gn < 1e-10) break;
        double step = 1.0;
        bool moved = false;
        for (int k = 0; k < 60; ++k, step *= 0.5) {
            const Vec trial = x + N * (step * gu / gn);
            const double ft = objective(tf, c, trial);
            if (ft > fx + 1e-4 * step * gn) {
                x = trial;
                fx = ft;
                moved = true;
                break;
            }
        }
        if (!moved) break;
        if (!D.contains(x, 1e-9)) return {numeric::kNaN, x};
    }
    return {fx, x};
}

}  // namespace detail

inline SupportCache prepare_support(const TransferFunction& tf, const Polytope& D) {
    const auto n = static_cast<int>(D.dim());
    const auto m = static_cast<int>(D.size());
    if (n > 4) throw UnsupportedDimension(static_cast<std::size_t>(n));
    SupportCache cache;
    cache.geo = analyze(D);
    const auto& geo = cache.geo;
    cache.vertex_phi.resize(n, static_cast<Eigen::Index>(geo.vertices.size()));
    for (std::size_t k = 0; k < geo.vertices.size(); ++k)
        cache.vertex_phi.col(static_cast<Eigen::Index>(k)) = detail::phi_of(tf, geo.vertices[k]);

    // Edges: n−1 active constraints.
    if (n >= 3) {
        detail::for_each_subset(m, n - 1, [&](const std::vector<int>& idx) {
            const auto tv = detail::tight_vertices(D, geo, idx);
            if (tv.size() < 2) return;
            const Mat ns = numeric::null_space(detail::rows_of(D.directions, idx), 1e-12);
            if (ns.cols() != 1) return;
            SupportCache::Edge e{tv.front(), tv.front(), Mat(n, detail::kEdgeSamples)};
            for (const auto& v : tv) {
                if (v.dot(ns.col(0)) < e.a.dot(ns.col(0))) e.a = v;
                if (v.dot(ns.col(0)) > e.b.dot(ns.col(0))) e.b = v;
            }
            for (int i = 0; i < detail::kEdgeSamples; ++i) {
                const double t = static_cast<double>(i) / (detail::kEdgeSamples - 1);
                e.phi.col(i) = detail::phi_of(tf, e.a + t * (e.b - e.a));
            }
            cache.edges.push_back(std::move(e));
        });
    }

    // Two-dimensional faces of a 4-polytope: two active constraints.
    if (n == 4) {
        detail::for_each_subset(m, 2, [&](const std::vector<int>& idx) {
            const auto tv = detail::tight_vertices(D, geo, idx);
            if (tv.size() < 3) return;
            const Mat ns = numeric::null_space(detail::rows_of(D.directions, idx), 1e-12);
            if (ns.cols() != 2) return;
            Vec centroid = Vec::Zero(n);
            for (const auto& v : tv) centroid += v;
            centroid /= static_cast<double>(tv.size());
            SupportCache::Face f{ns, {centroid}};
            for (const auto& v : tv) f.starts.push_back(0.5 * (v + centroid));
            cache.faces.push_back(std::move(f));
        });
    }

    // Coarse grid over the bounding box, kept to points of D.
    std::vector<Vec> pts;
    std::vector<int> idx(n, 0);
    Vec x(n);
    for (;;) {
        for (int a = 0; a < n; ++a) {
            const double t = static_cast<double>(idx[a]) / (detail::kGridSteps - 1);
            x(a) = geo.lower(a) + t * (geo.upper(a) - geo.lower(a));
        }
        if (D.contains(x)) pts.push_back(x);
        int a = n - 1;
        while (a >= 0 && idx[a] == detail::kGridSteps - 1) idx[a--] = 0;
        if (a < 0) break;
        ++idx[a];
    }
    cache.grid_points.resize(n, static_cast<Eigen::Index>(pts.size()));
    cache.grid_phi.resize(n, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t k = 0; k < pts.size(); ++k) {
        cache.grid_points.col(static_cast<Eigen::Index>(k)) = pts[k];
        cache.grid_phi.col(static_cast<Eigen::Index>(k)) = detail::phi_of(tf, pts[k]);
    }
    return cache;
}

/// max over x ∈ D of ⟨direction, W φ(x)⟩ = Σ c_i φ(x_i), c = Wᵀ·direction. Searched face by
/// face (facets through the hyperplane solver, lower faces by exact 1-D search or
/// multistart ascent, vertices enumerated), then cross-checked on a 33ⁿ grid.
inline SupportSearch support_search(const RnnModel& model, const Polytope& D, const SupportCache& cache,
                                    const Vec& direction) {
    const auto n = static_cast<int>(D.dim());
    const auto m = static_cast<int>(D.size());
    const Vec c = model.W.transpose() * direction;
    const auto& geo = cache.geo;
    SupportSearch best;
    auto consider = [&](double v, const Vec& x, const char* source) {
        if (v > best.value) {
            best.value = v;
            best.argmax = x;
            best.source = source;
        }
    };
    if (c.cwiseAbs().maxCoeff() == 0.0) {
        consider(0.0, geo.vertices.front(), "zero");
        best.grid_value = 0.0;
        return best;
    }
    const TransferFunction& tf = model.tf;

    const Eigen::RowVectorXd at_vertices = c.transpose() * cache.vertex_phi;
    for (Eigen::Index k = 0; k < at_vertices.size(); ++k)
        consider(at_vertices(k), geo.vertices[static_cast<std::size_t>(k)], "vertex");

    if (n >= 2) {
        for (int j = 0; j < m; ++j) {
            RawProblem p{c, D.directions.row(j).transpose(), D.supports(j), tf};
            try {
                const auto r = find_local_maxima(p, {.allow_coincident_q = true});
                for (const auto& mx : r.maxima)
                    if (D.contains(mx.x)) consider(mx.value, mx.x, "facet");
            } catch (const TheoremViolation& e) {
                log::info(std::string("facet search: ") + e.what());
            } catch (const ConvergenceFailure& e) {
                log::debug(std::string("facet search: ") + e.what());
            }
        }
    }
    for (const auto& e : cache.edges) {
        const auto [v, x] = detail::segment_max(tf, c, e);
        consider(v, x, "edge");
    }
    for (const auto& f : cache.faces) {
        for (const auto& s : f.starts) {
            const auto [v, x] = detail::face_ascent(tf, c, D, s, f.basis);
            if (!std::isnan(v)) consider(v, x, "face");
        }
    }

    if (cache.grid_phi.cols() > 0) {
        Eigen::Index at = 0;
        best.grid_value = (c.transpose() * cache.grid_phi).maxCoeff(&at);
        if (best.grid_value > best.value) {
            if (best.grid_value - best.value > 1e-6) {
                log::info("support search: grid sample exceeds face search by " +
                          std::to_string(best.grid_value - best.value));
            }
            best.value = best.grid_value;
            best.argmax = cache.grid_points.col(at);
            best.source = "grid";
        }
    }
    return best;
}

inline double max_over_polytope(const RnnModel& model, const Polytope& D, const Vec& direction) {
    model.validate();
    if (D.dim() != model.dim() || direction.size() != model.dim()) {
        throw InvalidArgument("max_over_polytope: dimension mismatch");
    }
    validate_polytope(D);
    return support_search(model, D, prepare_support(model.tf, D), direction).value;
}

/// D_{k+1}: same directions, supports min(α_j, max over D_k of ⟨l_j, W φ(x)⟩).
inline Polytope shrink(const RnnModel& model, const Polytope& D) {
    model.validate();
    if (D.dim() != model.dim()) throw InvalidArgument("shrink: dimension mismatch");
    validate_polytope(D);
    const auto cache = prepare_support(model.tf, D);
    Polytope next = D;
    for (Eigen::Index j = 0; j < D.size(); ++j) {
        const double s = support_search(model, D, cache, D.directions.row(j).transpose()).value;
        next.supports(j) = std::min(D.supports(j), s);
    }
    return next;
}

struct CertifyOptions {
    int max_iters = 100;
    double radius_tol = 1e-3;
    double stall_rel = 1e-6;
    int stall_window = 10;
};

/// Iterates shrink until the radius max_j α_j falls below radius_tol (Certified), fails to
/// drop by stall_rel relative for stall_window consecutive steps (Stalled), or max_iters
/// runs out (IterLimit).
inline Certificate certify(const RnnModel& model, const Polytope& D0, const CertifyOptions& opts = {}) {
    model.validate();
    validate_polytope(D0);
    if (!(D0.supports.array() > 0).all()) throw InvalidArgument("certify: the origin must be interior to D0");
    if (opts.max_iters < 1) throw InvalidArgument("certify: max_iters must be positive");
    Certificate cert;
    Polytope D = D0;
    cert.history.push_back(D);
    cert.radius_trace.push_back(D.radius());
    int flat = 0;
    for (int k = 1; k <= opts.max_iters; ++k) {
        D = shrink(model, D);
        cert.history.push_back(D);
        const double prev = cert.radius_trace.back();
        const double r = D.radius();
        cert.radius_trace.push_back(r);
        cert.iterations = k;
        log::debug("certify: iteration " + std::to_string(k) + " radius " + std::to_string(r));
        if (r < opts.radius_tol) {
            cert.verdict = Certificate::Verdict::Certified;
            cert.final_polytope = D;
            return cert;
        }
        flat = (prev - r) <= opts.stall_rel * prev ? flat + 1 : 0;
        if (flat >= opts.stall_window) {
            cert.verdict = Certificate::Verdict::Stalled;
            cert.final_polytope = D;
            return cert;
        }
    }
    cert.verdict = Certificate::Verdict::IterLimit;
    cert.final_polytope = D;
    return cert;
}

inline Certificate certify(const RnnModel& model, const Polytope& D0, int max_iters, double radius_tol) {
    return certify(model, D0, CertifyOptions{.max_iters = max_iters, .radius_tol = radius_tol});
}

/// CSV: iter,radius.
inline void write_trace_csv(const Certificate& cert, std::ostream& os) {
    os << "iter,radius\n";
    os.precision(17);
    for (std::size_t k = 0; k < cert.radius_trace.size(); ++k) os << k << ',' << cert.radius_trace[k] << '\n';
}

}  // namespace dissipcert
