#pragma once

#include "errors.hpp"
#include "numeric.hpp"
#include "spectra.hpp"
#include "transfer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dissipcert {

/// Maximize f(x) = Σ c_i φ(x_i) over the hyperplane l·x = b.
struct RawProblem {
    Vec c;
    Vec l;
    double b = 0.0;
    TransferFunction tf;
};

/// A problem after the sign normalization: every c_j > 0 and every l_j > 0.
struct NormalizedProblem {
    Vec c;
    Vec l;
    double b = 0.0;
    /// +1 / −1 per axis; raw x_j = flips_j · normalized x_j.
    Vec flips;
    /// q_j = l_j / c_j, pairwise distinct.
    Vec q;
    /// β_max · max(q) = s0.
    double beta_max = 0.0;
    Eigen::Index argmax_q = 0;
    /// Set when coincident ratios were let through by NormalizeOptions.
    bool coincident_q = false;
    TransferFunction tf;

    Eigen::Index size() const { return c.size(); }
};

/// Normalization settled the question without solving: there is no local maximum.
struct EarlyVerdict {
    std::string reason;
};

/// Which orthant a critical point lives in: all coordinates positive (main), or exactly
/// coordinate `negative_index` negative (side).
struct Orthant {
    Eigen::Index negative_index = -1;

    static Orthant main() { return {}; }
    static Orthant side(Eigen::Index k) { return {k}; }
    bool is_main() const { return negative_index < 0; }
    bool operator==(const Orthant&) const = default;
};

inline std::string to_string(const Orthant& o) {
    return o.is_main() ? std::string("main") : "side:" + std::to_string(o.negative_index);
}

/// A stationary point of f on the hyperplane, in the normalized frame.
struct CriticalPoint {
    double beta = 0.0;
    Vec x;
    Orthant orthant;
    SpectralReport spectral;
    /// Slope of the branch function at beta: f₁′(β) for main, g_k′(β) for side.
    double branch_slope = 0.0;
    bool is_boundary_degenerate = false;
};

/// A classified local maximum in the caller's (raw) coordinates.
struct LocalMaximum {
    double beta = 0.0;
    Vec x;
    Orthant orthant;  // orthant label in the normalized frame
    bool boundary_flag = false;
    double value = 0.0;
};

enum class MaximaVerdict { UniqueMax, NoMax, TheoremViolation };

inline const char* to_string(MaximaVerdict v) {
    switch (v) {
        case MaximaVerdict::UniqueMax: return "UniqueMax";
        case MaximaVerdict::NoMax: return "NoMax";
        case MaximaVerdict::TheoremViolation: return "TheoremViolation";
    }
    return "?";
}

struct MaximaReport {
    MaximaVerdict verdict = MaximaVerdict::NoMax;
    std::vector<CriticalPoint> candidates;
    std::vector<LocalMaximum> maxima;
    Vec flips;
    std::optional<std::string> early_reason;
    bool coincident_q = false;
};

/// Values of x_1 … x_3, y_1 … y_3, z_1 … z_3 for the two-side-orthant exclusion argument.
struct ThreePointWitness {
    double q1 = 0, q2 = 0, q3 = 0;
    double beta1 = 0, beta2 = 0;
    std::array<double, 3> x{}, y{}, z{};
    double expression_value = 0.0;
};

// ---------------------------------------------------------------------------

inline double objective(const TransferFunction& tf, const Vec& c, const Vec& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) s += c(i) * tf.phi(x(i));
    return s;
}

inline Vec objective_gradient(const TransferFunction& tf, const Vec& c, const Vec& x) {
    Vec g(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) g(i) = c(i) * tf.phi_prime(x(i));
    return g;
}

namespace tolerances {
inline constexpr double kQRelative = 1e-12;
inline constexpr double kSolveValue = 1e-10;
inline constexpr double kSolveWidth = 1e-14;
inline constexpr double kZero = 1e-7;
inline constexpr double kScanMargin = 1e-6;
inline constexpr std::size_t kScanPoints = 512;
inline constexpr int kBracketHalvings = 64;
}  // namespace tolerances

struct NormalizeOptions {
    /// Solve problems with coincident q_i = q_j instead of raising DegenerateQ. The
    /// enumeration is still exhaustive, but the at-most-one guarantee no longer applies
    /// and the root-count bound on g_k′ is not enforced.
    bool allow_coincident_q = false;
};

inline std::variant<NormalizedProblem, EarlyVerdict> normalize(const RawProblem& p,
                                                               const NormalizeOptions& opts = {}) {
    const Eigen::Index n = p.c.size();
    if (n < 2) throw InvalidArgument("problem dimension must be at least 2");
    if (p.l.size() != n) throw InvalidArgument("c and l lengths differ");

    NormalizedProblem np;
    np.tf = p.tf;
    np.c = p.c;
    np.l = p.l;
    np.b = p.b;
    np.flips = Vec::Ones(n);

    // φ is odd, so (c_j, e_j) -> (−c_j, −e_j) leaves f unchanged.
    for (Eigen::Index j = 0; j < n; ++j) {
        if (np.c(j) < 0.0) {
            np.c(j) = -np.c(j);
            np.l(j) = -np.l(j);
            np.flips(j) = -1.0;
        }
    }
    bool any_pos = false;
    bool any_neg = false;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (np.l(j) == 0.0) {
            return EarlyVerdict{"l[" + std::to_string(j) + "] = 0: f grows without bound along axis " +
                                std::to_string(j)};
        }
        (np.l(j) > 0.0 ? any_pos : any_neg) = true;
    }
    if (any_pos && any_neg) {
        return EarlyVerdict{"normal vector has mixed signs after normalization: f increases along the plane"};
    }
    if (any_neg) {
        np.l = -np.l;
        np.b = -np.b;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        if (np.c(j) == 0.0) {
            return EarlyVerdict{"c[" + std::to_string(j) +
                                "] = 0: the constraint is absorbed by that coordinate"};
        }
    }
    np.q = np.l.cwiseQuotient(np.c);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double scale = std::max(np.q(i), np.q(j));
            if (std::abs(np.q(i) - np.q(j)) <= tolerances::kQRelative * scale) {
                if (!opts.allow_coincident_q) {
                    throw DegenerateQ(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                }
                np.coincident_q = true;
            }
        }
    }
    np.beta_max = np.tf.s0 / np.q.maxCoeff(&np.argmax_q);
    return np;
}

namespace detail {

/// ψ(βq) with the argument clamped into (0, s0]; ψ(s0) = 0.
inline double psi_at(const NormalizedProblem& np, double beta, Eigen::Index j) {
    const double y = beta * np.q(j);
    if (j == np.argmax_q && beta >= np.beta_max) return 0.0;
    return np.tf.psi(std::min(y, np.tf.s0));
}

inline double solve_value_tol(double b) { return tolerances::kSolveValue * (1.0 + std::abs(b)); }

inline Vec branch_point(const NormalizedProblem& np, double beta, Orthant o) {
    Vec x(np.size());
    for (Eigen::Index j = 0; j < np.size(); ++j) {
        x(j) = psi_at(np, beta, j);
        if (j == o.negative_index) x(j) = -x(j);
    }
    return x;
}

inline CriticalPoint make_critical_point(const NormalizedProblem& np, double beta, Vec x, Orthant o,
                                         double slope) {
    CriticalPoint cp;
    cp.beta = beta;
    cp.orthant = o;
    cp.x = std::move(x);
    cp.branch_slope = slope;
    const double tol_zero = tolerances::kZero * (1.0 + numeric::max_abs(cp.x));
    cp.is_boundary_degenerate = (cp.x.cwiseAbs().array() < tol_zero).any();
    cp.spectral = classify(build_diagonal(np.tf, np.c, cp.x), np.l);
    return cp;
}

inline CriticalPoint make_critical_point(const NormalizedProblem& np, double beta, Orthant o,
                                         double slope) {
    return make_critical_point(np, beta, branch_point(np, beta, o), o, slope);
}

/// The critical curve of orthant o parametrized by t = |x_m|, m = argmax q. Near β_max the
/// coordinate x_m behaves like a square root of (β_max − β), so β alone cannot pin it down
/// to better than about 1e-8; t can.
inline Vec curve_point(const NormalizedProblem& np, double t, Orthant o) {
    const Eigen::Index m = np.argmax_q;
    const double y_m = np.tf.phi_prime(t);
    Vec x(np.size());
    for (Eigen::Index j = 0; j < np.size(); ++j) {
        x(j) = np.q(j) == np.q(m) ? t : np.tf.psi(std::min(y_m * np.q(j) / np.q(m), np.tf.s0));
        if (j == o.negative_index) x(j) = -x(j);
    }
    return x;
}

/// Final solve of l·x = b along the curve, starting from a converged β-bracket.
inline std::pair<double, Vec> polish_on_curve(const NormalizedProblem& np, Orthant o, double beta_lo,
                                              double beta_hi) {
    const Eigen::Index m = np.argmax_q;
    auto t_of = [&](double beta) { return psi_at(np, beta, m); };
    auto h = [&](double t) { return np.l.dot(curve_point(np, t, o)) - np.b; };
    double t_lo = t_of(beta_hi);
    double t_hi = t_of(beta_lo);
    double t = 0.5 * (t_lo + t_hi);
    if (t_lo < t_hi) {
        const double h_lo = h(t_lo);
        const double h_hi = h(t_hi);
        if (h_lo == 0.0) {
            t = t_lo;
        } else if (h_hi == 0.0) {
            t = t_hi;
        } else if ((h_lo > 0) != (h_hi > 0)) {
            t = numeric::bisect(h, 0.0, t_lo, t_hi, h_lo > 0 ? +1 : -1,
                                {.value_tol = 0.0, .width_tol = 0.0, .max_iter = 200});
        }
    }
    const double beta = std::min(np.tf.phi_prime(t) / np.q(m), np.beta_max);
    return {beta, curve_point(np, t, o)};
}

}  // namespace detail

/// f₁(β) = Σ l_j ψ(βq_j) and its derivative Σ l_j q_j ψ′(βq_j); the derivative is −∞ at β_max.
inline std::pair<double, double> main_branch(const NormalizedProblem& np, double beta) {
    double f = 0.0;
    double df = 0.0;
    for (Eigen::Index j = 0; j < np.size(); ++j) {
        f += np.l(j) * detail::psi_at(np, beta, j);
        const double y = beta * np.q(j);
        df += y < np.tf.s0 ? np.l(j) * np.q(j) * np.tf.psi_prime(y) : -numeric::kInf;
    }
    return {f, df};
}

/// g_k(β) = Σ_{j≠k} l_j ψ(βq_j) − l_k ψ(βq_k) and g_k′(β), for β in (0, β_max).
inline std::pair<double, double> side_branch_g(const NormalizedProblem& np, Eigen::Index k,
                                               double beta) {
    if (!(beta > 0.0 && beta < np.beta_max)) throw DomainError(beta, np.beta_max);
    double g = 0.0;
    double dg = 0.0;
    for (Eigen::Index j = 0; j < np.size(); ++j) {
        const double y = beta * np.q(j);
        const double sign = j == k ? -1.0 : 1.0;
        g += sign * np.l(j) * np.tf.psi(y);
        dg += sign * np.l(j) * np.q(j) * np.tf.psi_prime(y);
    }
    return {g, dg};
}

/// g_k at β_max, where ψ(β_max · max q) = 0.
inline double side_branch_at_max(const NormalizedProblem& np, Eigen::Index k) {
    double g = 0.0;
    for (Eigen::Index j = 0; j < np.size(); ++j) {
        g += (j == k ? -1.0 : 1.0) * np.l(j) * detail::psi_at(np, np.beta_max, j);
    }
    return g;
}

/// The stationary point in the main orthant, if any. f₁ is strictly decreasing on
/// (0, β_max] and unbounded as β → 0⁺, so the solution exists iff b ≥ f₁(β_max).
inline std::optional<CriticalPoint> main_orthant_candidate(const NormalizedProblem& np) {
    const double b = np.b;
    const double tol = detail::solve_value_tol(b);
    auto f1 = [&](double beta) { return main_branch(np, beta).first; };
    const double at_max = f1(np.beta_max);
    if (b < at_max - tol) return std::nullopt;
    if (std::abs(b - at_max) <= tol) {
        return detail::make_critical_point(np, np.beta_max, Orthant::main(), -numeric::kInf);
    }
    double lo = 0.5 * np.beta_max;
    int halvings = 0;
    while (!(f1(lo) > b)) {
        if (++halvings > tolerances::kBracketHalvings) {
            throw ConvergenceFailure("main orthant: cannot bracket f1(beta) = b");
        }
        lo *= 0.5;
    }
    const auto [a, c] = numeric::bisect_interval(
        f1, b, lo, np.beta_max, +1,
        {.value_tol = tol, .width_tol = tolerances::kSolveWidth * np.beta_max, .max_iter = 400});
    auto [beta, x] = detail::polish_on_curve(np, Orthant::main(), a, c);
    return detail::make_critical_point(np, beta, std::move(x), Orthant::main(), main_branch(np, beta).second);
}

/// Roots of g_k′ on (0, β_max), from a sign-change scan refined by bisection.
inline std::vector<double> side_branch_critical_betas(const NormalizedProblem& np, Eigen::Index k) {
    using namespace tolerances;
    const auto grid = numeric::log_grid(kScanMargin * np.beta_max, (1.0 - kScanMargin) * np.beta_max,
                                        kScanPoints);
    auto dg = [&](double beta) { return side_branch_g(np, k, beta).second; };
    std::vector<double> roots;
    double prev = dg(grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double cur = dg(grid[i]);
        if (cur == 0.0) {
            roots.push_back(grid[i]);
        } else if (prev != 0.0 && (prev > 0) != (cur > 0)) {
            roots.push_back(numeric::bisect(dg, 0.0, grid[i - 1], grid[i], prev > 0 ? +1 : -1,
                                            {.value_tol = 0.0, .width_tol = 0.0, .max_iter = 200}));
        }
        prev = cur;
    }
    const bool k_is_max = k == np.argmax_q;
    const std::size_t bound = k_is_max ? 1 : 2;
    if (!np.coincident_q && roots.size() > bound) {
        throw TheoremViolation("g_" + std::to_string(k) + "' has " + std::to_string(roots.size()) +
                               " roots on (0, beta_max); at most " + std::to_string(bound) +
                               " are possible");
    }
    return roots;
}

/// Stationary points in side orthant k that lie on increasing stretches of g_k (or on
/// its critical points when g_k touches b there).
inline std::vector<CriticalPoint> side_orthant_candidates(const NormalizedProblem& np, Eigen::Index k) {
    using namespace tolerances;
    const double b = np.b;
    const double tol = detail::solve_value_tol(b);
    const auto roots = side_branch_critical_betas(np, k);
    auto g = [&](double beta) { return side_branch_g(np, k, beta).first; };
    auto dg = [&](double beta) { return side_branch_g(np, k, beta).second; };

    std::vector<double> edges{0.0};
    edges.insert(edges.end(), roots.begin(), roots.end());
    edges.push_back(np.beta_max);

    std::vector<CriticalPoint> out;
    auto emit_point = [&](double beta, Vec x) {
        for (const auto& cp : out)
            if ((cp.x - x).cwiseAbs().maxCoeff() <= kZero * (1.0 + numeric::max_abs(x))) return;
        const double slope = beta < np.beta_max ? dg(beta) : numeric::kInf;
        out.push_back(detail::make_critical_point(np, beta, std::move(x), Orthant::side(k), slope));
    };
    auto emit = [&](double beta) { emit_point(beta, detail::branch_point(np, beta, Orthant::side(k))); };

    // Points where g_k touches b with zero slope.
    for (double r : roots) {
        if (std::abs(g(r) - b) <= tol) emit(r);
    }

    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        double a = edges[s];
        double c = edges[s + 1];
        const double probe = a == 0.0 ? std::min(kScanMargin * np.beta_max, 0.5 * c)
                           : c == np.beta_max ? std::max(0.5 * (a + c), a + 0.5 * (np.beta_max - a))
                                              : 0.5 * (a + c);
        if (!(dg(probe) > 0.0)) continue;

        // Upper end value.
        double g_hi;
        if (c == np.beta_max) {
            g_hi = side_branch_at_max(np, k);
            if (std::abs(g_hi - b) <= tol) {
                emit(np.beta_max);
                continue;
            }
        } else {
            g_hi = g(c);
        }
        if (b >= g_hi) continue;

        // Lower end: walk toward a until g drops below b.
        double lo;
        if (a == 0.0) {
            lo = probe;
            int halvings = 0;
            bool bracketed = g(lo) < b;
            while (!bracketed && halvings < kBracketHalvings) {
                lo *= 0.5;
                ++halvings;
                bracketed = g(lo) < b;
            }
            if (!bracketed) continue;
        } else {
            if (!(g(a) < b)) continue;
            lo = a;
        }
        const double hi = c;
        const auto [a_end, c_end] = numeric::bisect_interval(
            g, b, lo, hi, -1, {.value_tol = tol, .width_tol = kSolveWidth * np.beta_max, .max_iter = 400});
        auto [beta, x] = detail::polish_on_curve(np, Orthant::side(k), a_end, c_end);
        emit_point(beta, std::move(x));
    }
    return out;
}

inline LocalMaximum to_raw(const NormalizedProblem& np, const RawProblem& p, const CriticalPoint& cp) {
    LocalMaximum m;
    m.beta = cp.beta;
    m.x = np.flips.cwiseProduct(cp.x);
    m.orthant = cp.orthant;
    m.boundary_flag = cp.is_boundary_degenerate;
    m.value = objective(p.tf, p.c, m.x);
    return m;
}

/// All local maxima of f on the hyperplane. At most one exists when the transfer
/// function satisfies the audited assumptions; a second one yields TheoremViolation.
inline MaximaReport find_local_maxima(const RawProblem& p, const NormalizeOptions& opts = {}) {
    MaximaReport report;
    auto normalized = normalize(p, opts);
    if (auto* early = std::get_if<EarlyVerdict>(&normalized)) {
        report.verdict = MaximaVerdict::NoMax;
        report.early_reason = early->reason;
        report.flips = Vec::Ones(p.c.size());
        for (Eigen::Index j = 0; j < p.c.size(); ++j)
            if (p.c(j) < 0) report.flips(j) = -1.0;
        return report;
    }
    const auto& np = std::get<NormalizedProblem>(normalized);
    report.flips = np.flips;

    if (auto main = main_orthant_candidate(np)) report.candidates.push_back(std::move(*main));
    for (Eigen::Index k = 0; k < np.size(); ++k) {
        for (auto& cp : side_orthant_candidates(np, k)) {
            // The boundary point at β_max is shared by the main branch and side branch argmax_q.
            bool duplicate = false;
            for (const auto& other : report.candidates) {
                const double scale = 1.0 + numeric::max_abs(other.x);
                if ((other.x - cp.x).cwiseAbs().maxCoeff() <= tolerances::kZero * scale) duplicate = true;
            }
            if (!duplicate) report.candidates.push_back(std::move(cp));
        }
    }
    for (const auto& cp : report.candidates) {
        if (cp.spectral.verdict == SpectralVerdict::Maximum) report.maxima.push_back(to_raw(np, p, cp));
    }
    report.coincident_q = np.coincident_q;
    report.verdict = report.maxima.empty()       ? MaximaVerdict::NoMax
                     : report.maxima.size() == 1 ? MaximaVerdict::UniqueMax
                                                 : MaximaVerdict::TheoremViolation;
    return report;
}

/// The three-point expression x₃(z₁−z₂) + x₃x₁(y₁−y₂) + x₂(z₁−z₃) + x₂x₁(y₁−y₃)
/// + x₁(z₃−z₂) + (y₃−y₂)(x₁x₂ + x₃x₂ − x₃x₁), with ψ_β(βq) = q ψ′(βq),
/// x_j = ψ_β(β₂q_j)/ψ_β(β₁q_j), y_j = ψ(β₂q_j)/ψ_β(β₂q_j), z_j = ψ(β₁q_j)/ψ_β(β₁q_j).
inline ThreePointWitness three_point_expression(const TransferFunction& tf, double q1, double q2,
                                                double q3, double beta1, double beta2) {
    if (!(q1 > 0 && q2 > 0 && q3 > 0)) throw InvalidArgument("three-point q values must be positive");
    if (q1 == q2 || q1 == q3 || q2 == q3) throw InvalidArgument("three-point q values must be distinct");
    if (!(beta2 > 0 && beta2 <= beta1)) throw InvalidArgument("three-point requires 0 < beta2 <= beta1");
    ThreePointWitness w{q1, q2, q3, beta1, beta2};
    const std::array<double, 3> q{q1, q2, q3};
    for (std::size_t j = 0; j < 3; ++j) {
        for (double beta : {beta1, beta2}) {
            const double y = beta * q[j];
            if (!(y > 0.0 && y < tf.s0)) throw DomainError(y, tf.s0);
        }
        const double pb1 = q[j] * tf.psi_prime(beta1 * q[j]);
        const double pb2 = q[j] * tf.psi_prime(beta2 * q[j]);
        w.x[j] = pb2 / pb1;
        w.y[j] = tf.psi(beta2 * q[j]) / pb2;
        w.z[j] = tf.psi(beta1 * q[j]) / pb1;
    }
    const auto& [x1, x2, x3] = w.x;
    const auto& [y1, y2, y3] = w.y;
    const auto& [z1, z2, z3] = w.z;
    w.expression_value = x3 * (z1 - z2) + x3 * x1 * (y1 - y2) + x2 * (z1 - z3) + x2 * x1 * (y1 - y3) +
                         x1 * (z3 - z2) + (y3 - y2) * (x1 * x2 + x3 * x2 - x3 * x1);
    return w;
}

}  // namespace dissipcert
