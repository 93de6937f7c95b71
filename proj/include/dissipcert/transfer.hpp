#pragma once

#include "errors.hpp"
#include "numeric.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dissipcert {

using ScalarFn = std::function<double(double)>;

/// A sigmoid-like neuron nonlinearity together with the inverse of its slope.
///
/// `psi` inverts `phi_prime` on [0, inf): psi maps (0, s0] onto [0, inf) with
/// s0 = phi_prime(0). `psi_double_prime` is optional; when empty it is obtained by
/// central differences of `psi_prime`. Instances are immutable once built and may be
/// shared between threads.
struct TransferFunction {
    std::string name;
    ScalarFn phi;
    ScalarFn phi_prime;
    ScalarFn phi_double_prime;
    ScalarFn psi;
    ScalarFn psi_prime;
    ScalarFn psi_double_prime;
    double s0 = 1.0;

    /// ψ″, analytic when available.
    double psi_second(double y) const {
        if (psi_double_prime) return psi_double_prime(y);
        double h = numeric::fd_step(y);
        h = std::min({h, 0.25 * y, 0.25 * (s0 - y)});
        return numeric::central_diff(psi_prime, y, h);
    }
};

/// ψ(y) with its domain (0, s0] enforced.
inline double psi_checked(const TransferFunction& tf, double y) {
    if (!(y > 0.0) || y > tf.s0) throw DomainError(y, tf.s0);
    return tf.psi(y);
}

namespace detail {

inline TransferFunction make_tanh() {
    TransferFunction tf;
    tf.name = "tanh";
    tf.s0 = 1.0;
    tf.phi = [](double x) { return std::tanh(x); };
    tf.phi_prime = [](double x) {
        const double c = std::cosh(x);
        return 1.0 / (c * c);
    };
    tf.phi_double_prime = [](double x) {
        const double c = std::cosh(x);
        return -2.0 * std::tanh(x) / (c * c);
    };
    // arctanh(sqrt(1-y)) = ln((1 + sqrt(1-y)) / sqrt(y)); this form keeps full relative
    // precision as y -> 0 where 1 - sqrt(1-y) cancels.
    tf.psi = [](double y) {
        const double s = std::sqrt(std::max(0.0, 1.0 - y));
        return std::log1p(s) - 0.5 * std::log(y);
    };
    tf.psi_prime = [](double y) { return -1.0 / (2.0 * y * std::sqrt(1.0 - y)); };
    tf.psi_double_prime = [](double y) {
        const double dp = -1.0 / (2.0 * y * std::sqrt(1.0 - y));
        return dp * (-1.0 / y + 0.5 / (1.0 - y));
    };
    return tf;
}

inline TransferFunction make_arctan() {
    TransferFunction tf;
    tf.name = "arctan";
    tf.s0 = 1.0;
    tf.phi = [](double x) { return std::atan(x); };
    tf.phi_prime = [](double x) { return 1.0 / (1.0 + x * x); };
    tf.phi_double_prime = [](double x) {
        const double d = 1.0 + x * x;
        return -2.0 * x / (d * d);
    };
    tf.psi = [](double y) { return std::sqrt(std::max(0.0, 1.0 - y) / y); };
    tf.psi_prime = [](double y) { return -1.0 / (2.0 * y * std::sqrt(y) * std::sqrt(1.0 - y)); };
    tf.psi_double_prime = [](double y) {
        const double dp = -1.0 / (2.0 * y * std::sqrt(y) * std::sqrt(1.0 - y));
        return dp * (-1.5 / y + 0.5 / (1.0 - y));
    };
    return tf;
}

}  // namespace detail

/// The built-in transfer functions: "tanh" and "arctan".
inline TransferFunction make_builtin(std::string_view name) {
    if (name == "tanh") return detail::make_tanh();
    if (name == "arctan") return detail::make_arctan();
    throw UnknownTransfer(std::string(name));
}

/// Upper end of the bracket used when ψ has to be found numerically.
inline constexpr double kPsiBracketCap = 50.0;

/// A transfer function given only by φ and its first two derivatives. ψ is obtained by
/// bisection of φ′(x) = y over [0, kPsiBracketCap] and ψ′ through 1/φ″(ψ(y)).
inline TransferFunction make_custom(std::string name, ScalarFn phi, ScalarFn phi_prime,
                                    ScalarFn phi_double_prime) {
    TransferFunction tf;
    tf.name = std::move(name);
    tf.s0 = phi_prime(0.0);
    tf.phi = std::move(phi);
    tf.phi_prime = phi_prime;
    tf.phi_double_prime = phi_double_prime;
    const double s0 = tf.s0;
    tf.psi = [phi_prime, s0](double y) {
        if (y == s0) return 0.0;
        double lo = 0.0;
        double hi = kPsiBracketCap;
        if (!(phi_prime(lo) >= y && phi_prime(hi) <= y)) {
            throw ConvergenceFailure("cannot bracket phi'(x) = " + std::to_string(y) +
                                     " on [0, " + std::to_string(kPsiBracketCap) + "]");
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (phi_prime(mid) > y) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };
    auto psi = tf.psi;
    tf.psi_prime = [psi, phi_double_prime](double y) { return 1.0 / phi_double_prime(psi(y)); };
    return tf;
}

// ---------------------------------------------------------------------------
// Assumption audit
// ---------------------------------------------------------------------------

enum class AssumptionVerdict { Pass, Fail };

inline const char* to_string(AssumptionVerdict v) {
    return v == AssumptionVerdict::Pass ? "pass" : "fail";
}

enum class WitnessStatus { Ok, Violated, Skipped };

inline const char* to_string(WitnessStatus s) {
    switch (s) {
        case WitnessStatus::Ok: return "ok";
        case WitnessStatus::Violated: return "violated";
        case WitnessStatus::Skipped: return "skipped";
    }
    return "?";
}

struct Witness {
    int assumption = 0;  // 1..5
    std::vector<double> point;
    double value = 0.0;
    WitnessStatus status = WitnessStatus::Ok;
};

struct AssumptionTally {
    std::size_t checked = 0;
    std::size_t violated = 0;
    std::size_t skipped = 0;
    double worst_margin = numeric::kInf;
};

struct AssumptionReport {
    std::string transfer;
    std::array<AssumptionVerdict, 5> verdicts{};
    std::array<AssumptionTally, 5> tallies{};
    int a3_sign = 0;
    double worst_margin = numeric::kInf;
    /// Thinned witness list: evenly strided samples, every violation (capped) and the
    /// worst witness of each assumption.
    std::vector<Witness> witnesses;

    bool all_pass() const {
        for (auto v : verdicts)
            if (v != AssumptionVerdict::Pass) return false;
        return true;
    }
};

struct GridSpec {
    std::size_t n_x = 256;
    std::size_t n_beta = 256;
    std::size_t n_q = 256;
};

/// Relative margin kept away from the open ends of ψ's domain.
inline constexpr double kEdgeMargin = 1e-4;

namespace audit {

/// y · (ln|ψ′(y)|)′, the quantity that must increase for assumption 2.
inline double log_slope_elasticity(const TransferFunction& tf, double y) {
    return y * tf.psi_second(y) / tf.psi_prime(y);
}

/// Finite-difference step for a point of (0, s0), shrunk near either end. Returns 0 when
/// the step would underflow relative to y.
inline double interior_step(const TransferFunction& tf, double y) {
    double h = numeric::fd_step(y);
    h = std::min({h, 0.25 * y, 0.25 * (tf.s0 - y)});
    if (!(h > 1e-13 * std::max(1.0, std::abs(y)))) return 0.0;
    return h;
}

/// d/dy of log_slope_elasticity, five-point stencil. NaN when the step underflows.
inline double elasticity_derivative(const TransferFunction& tf, double y) {
    const double h = interior_step(tf, y);
    if (h == 0.0) return numeric::kNaN;
    return numeric::five_point_diff([&](double t) { return log_slope_elasticity(tf, t); }, y, h);
}

/// x · d/dx(ψ(x) / (x ψ′(x))), the inner quantity of assumption 5.
inline double a5_inner(const TransferFunction& tf, double x) {
    const double p = tf.psi(x);
    const double dp = tf.psi_prime(x);
    const double ddp = tf.psi_second(x);
    const double ratio_prime = 1.0 / x - p * (dp + x * ddp) / (x * x * dp * dp);
    return x * ratio_prime;
}

inline double a5_derivative(const TransferFunction& tf, double x) {
    const double h = interior_step(tf, x);
    if (h == 0.0) return numeric::kNaN;
    return numeric::five_point_diff([&](double t) { return a5_inner(tf, t); }, x, h);
}

/// d/dβ (ψ(βp) / ψ(βq)) by the chain rule.
inline double a4_derivative(const TransferFunction& tf, double beta, double p, double q) {
    const double a = tf.psi(beta * p);
    const double b = tf.psi(beta * q);
    const double da = p * tf.psi_prime(beta * p);
    const double db = q * tf.psi_prime(beta * q);
    return (da * b - a * db) / (b * b);
}

/// h_β(β, q_a, q_n) for h = ψ′(βq_a) / ψ′(βq_n).
inline double h_beta(const TransferFunction& tf, double beta, double qa, double qn) {
    const double pa = tf.psi_prime(beta * qa);
    const double pn = tf.psi_prime(beta * qn);
    const double sa = tf.psi_second(beta * qa);
    const double sn = tf.psi_second(beta * qn);
    return (qa * sa * pn - qn * pa * sn) / (pn * pn);
}

/// ∂/∂β [h_β(β,q_j,q_n) / h_β(β,q_l,q_n)], five-point stencil in β.
inline double a3_derivative(const TransferFunction& tf, double beta, double qj, double qn,
                            double ql) {
    const double top = beta * std::max({qj, qn, ql});
    double h = numeric::fd_step(beta);
    h = std::min({h, 0.25 * beta, 0.25 * (tf.s0 - top) / std::max({qj, qn, ql})});
    if (!(h > 1e-13 * std::max(1.0, beta))) return numeric::kNaN;
    auto ratio = [&](double b) { return h_beta(tf, b, qj, qn) / h_beta(tf, b, ql, qn); };
    return numeric::five_point_diff(ratio, beta, h);
}

}  // namespace audit

namespace detail {

class WitnessSink {
public:
    WitnessSink(AssumptionReport& report, int assumption, std::size_t expected)
        : report_(report), index_(assumption - 1),
          stride_(std::max<std::size_t>(1, expected / kKeepStrided)) {
        report_.tallies[index_] = {};
    }

    /// Records one witness. `margin` is positive when the inequality holds.
    void add(std::vector<double> point, double value, double margin, double tol) {
        auto& tally = report_.tallies[index_];
        Witness w{index_ + 1, std::move(point), value, WitnessStatus::Ok};
        if (!std::isfinite(value) || !std::isfinite(margin)) {
            w.status = WitnessStatus::Skipped;
            ++tally.skipped;
        } else {
            ++tally.checked;
            if (margin < -tol) {
                w.status = WitnessStatus::Violated;
                ++tally.violated;
            }
            if (margin < tally.worst_margin) {
                tally.worst_margin = margin;
                worst_ = w;
                have_worst_ = true;
            }
        }
        const bool keep_violation = w.status == WitnessStatus::Violated && kept_violations_ < kKeepViolations;
        if (keep_violation) ++kept_violations_;
        if (keep_violation || (seen_++ % stride_ == 0)) report_.witnesses.push_back(std::move(w));
    }

    void finish() {
        if (have_worst_) report_.witnesses.push_back(worst_);
        const auto& tally = report_.tallies[index_];
        report_.verdicts[index_] = (tally.violated == 0 && tally.checked > 0)
                                       ? AssumptionVerdict::Pass
                                       : AssumptionVerdict::Fail;
    }

private:
    static constexpr std::size_t kKeepStrided = 32;
    static constexpr std::size_t kKeepViolations = 32;
    AssumptionReport& report_;
    int index_;
    std::size_t stride_;
    std::size_t seen_ = 0;
    std::size_t kept_violations_ = 0;
    Witness worst_;
    bool have_worst_ = false;
};

template <class F>
double guarded(F&& f) {
    try {
        return f();
    } catch (const Error&) {
        return numeric::kNaN;
    }
}

}  // namespace detail

/// Audits assumptions 1-5 on sample grids. Verdicts are empirical: a pass means no
/// sampled witness violated the inequality beyond tolerance.
inline AssumptionReport check_assumptions(const TransferFunction& tf, const GridSpec& grid = {}) {
    if (grid.n_x < 16 || grid.n_beta < 16 || grid.n_q < 16) {
        throw InvalidArgument("grid sizes must be at least 16");
    }
    AssumptionReport report;
    report.transfer = tf.name;
    const double s0 = tf.s0;
    const double y_lo = kEdgeMargin * s0;
    const double y_hi = (1.0 - kEdgeMargin) * s0;

    // A1: odd, increasing, x φ″(x) < 0 off the origin, bounded.
    {
        const auto xs = numeric::log_grid(1e-3, 20.0, grid.n_x);
        detail::WitnessSink sink(report, 1, 2 * xs.size());
        for (double mag : xs) {
            for (double x : {mag, -mag}) {
                const double odd = std::abs(tf.phi(-x) + tf.phi(x));
                const double slope = tf.phi_prime(x);
                const double curv = x * tf.phi_double_prime(x);
                // Worst of the three normalized margins.
                double margin = std::min({slope, -curv, 1e-12 * (1.0 + std::abs(tf.phi(x))) - odd});
                sink.add({x}, curv, margin, 0.0);
            }
        }
        const double far = tf.phi(1e3);
        const double farther = tf.phi(1e6);
        const double drift = std::abs(farther - far);
        sink.add({1e3, 1e6}, drift, 1e-2 * (1.0 + std::abs(far)) - drift, 0.0);
        sink.finish();
    }

    // A2: y (ln|ψ′|)′ increasing on (0, s0).
    {
        const auto ys = numeric::log_grid(y_lo, y_hi, grid.n_x);
        detail::WitnessSink sink(report, 2, ys.size());
        for (double y : ys) {
            const double d = detail::guarded([&] { return audit::elasticity_derivative(tf, y); });
            sink.add({y}, d, d, 1e-9);
        }
        sink.finish();
    }

    // A3: ∂/∂β[h_β(j)/h_β(l)] has one sign for q_j < q_n < q_l. The quantity is invariant
    // under (β, q) -> (tβ, q/t), so q_n is pinned to 1 and β sweeps (0, s0 / q_l).
    {
        const std::size_t m = std::max<std::size_t>(16, grid.n_q / 8);
        const auto betas = numeric::log_grid(1e-3 * s0, 0.98 * s0, grid.n_beta);
        const auto lower = numeric::log_grid(0.01, 0.98, m);
        const auto frac = numeric::lin_grid(0.02, 0.98, m);
        std::vector<std::pair<std::vector<double>, double>> raw;
        raw.reserve(betas.size() * m * m);
        for (double beta : betas) {
            for (double rj : lower) {
                for (double f : frac) {
                    const double rl = 1.0 + f * (s0 / beta - 1.0);
                    if (!(rl * beta < y_hi) || rl <= 1.0 + 1e-9) continue;
                    const double v = detail::guarded([&] { return audit::a3_derivative(tf, beta, rj, 1.0, rl); });
                    raw.push_back({{beta, rj, 1.0, rl}, v});
                }
            }
        }
        long pos = 0;
        long neg = 0;
        for (const auto& [pt, v] : raw) {
            if (std::isfinite(v)) {
                if (v > 0) ++pos;
                if (v < 0) ++neg;
            }
        }
        report.a3_sign = pos >= neg ? 1 : -1;
        detail::WitnessSink sink(report, 3, raw.size());
        for (auto& [pt, v] : raw) {
            const double margin = report.a3_sign * v;
            sink.add(std::move(pt), v, margin, 1e-9 * std::max(1.0, std::abs(v)));
        }
        sink.finish();
    }

    // A4: d/dβ(ψ(βp)/ψ(βq)) < 0 for p > q. Pinned β = 1, p = u, q = u / ρ.
    {
        const auto us = numeric::log_grid(y_lo, y_hi, grid.n_beta);
        const auto rhos = numeric::log_grid(1.001, 1e3, grid.n_q);
        detail::WitnessSink sink(report, 4, us.size() * rhos.size());
        for (double u : us) {
            for (double rho : rhos) {
                const double v = detail::guarded([&] { return audit::a4_derivative(tf, 1.0, u, u / rho); });
                sink.add({1.0, u, u / rho}, v, -v, 0.0);
            }
        }
        sink.finish();
    }

    // A5: d/dx(x d/dx(ψ/(xψ′))) >= 0.
    {
        const auto xs = numeric::log_grid(y_lo, y_hi, grid.n_x);
        detail::WitnessSink sink(report, 5, xs.size());
        for (double x : xs) {
            const double v = detail::guarded([&] { return audit::a5_derivative(tf, x); });
            sink.add({x}, v, v, 1e-9 * std::max(1.0, std::abs(v)));
        }
        sink.finish();
    }

    for (const auto& t : report.tallies) report.worst_margin = std::min(report.worst_margin, t.worst_margin);
    return report;
}

}  // namespace dissipcert
