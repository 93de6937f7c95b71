#pragma once

#include "errors.hpp"
#include "numeric.hpp"
#include "transfer.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace dissipcert {

enum class SpectralVerdict { Maximum, NotMaximum, Degenerate };

inline const char* to_string(SpectralVerdict v) {
    switch (v) {
        case SpectralVerdict::Maximum: return "Maximum";
        case SpectralVerdict::NotMaximum: return "NotMaximum";
        case SpectralVerdict::Degenerate: return "Degenerate";
    }
    return "?";
}

/// Curvature of f restricted to a hyperplane at one critical point.
struct SpectralReport {
    Vec d;
    /// Normal vector scaled to unit length.
    Vec l;
    /// Eigenvalues of the projected Hessian K, ascending, from a dense eigensolver.
    std::vector<double> eigs_direct;
    /// The same spectrum from secular-equation roots plus the forced zero, ascending.
    std::vector<double> eigs_secular;
    /// g′(0); empty when some d_j vanishes.
    std::optional<double> g_prime_zero;
    double tol_eig = 0.0;
    SpectralVerdict verdict = SpectralVerdict::Degenerate;
};

/// d_j = c_j φ″(x_j).
inline Vec build_diagonal(const TransferFunction& tf, const Vec& c, const Vec& x0) {
    if (c.size() != x0.size()) throw InvalidArgument("build_diagonal: length mismatch");
    Vec d(c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) d(j) = c(j) * tf.phi_double_prime(x0(j));
    return d;
}

/// g(λ) = Σ λ l_i² / (‖l‖² (λ − d_i)).
inline double secular_g(double lambda, const Vec& d, const Vec& l) {
    const double norm2 = l.squaredNorm();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (std::abs(lambda - d(i)) <= 1e-14) throw PoleError(lambda, static_cast<std::size_t>(i));
        sum += lambda * l(i) * l(i) / (norm2 * (lambda - d(i)));
    }
    return sum;
}

/// g′(0) = −Σ l_j² / (d_j ‖l‖²).
inline double g_prime_at_zero(const Vec& d, const Vec& l) {
    const double norm2 = l.squaredNorm();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < d.size(); ++j) {
        if (d(j) == 0.0) throw DegenerateCurvature(static_cast<std::size_t>(j));
        sum -= l(j) * l(j) / (d(j) * norm2);
    }
    return sum;
}

/// K = P D P with P = I − l lᵀ/‖l‖².
inline Mat projected_hessian(const Vec& d, const Vec& l) {
    const Eigen::Index n = d.size();
    const Vec u = l / l.norm();
    const Mat p = Mat::Identity(n, n) - u * u.transpose();
    return p * d.asDiagonal() * p;
}

namespace detail {

struct Pole {
    double d;
    double weight;
};

/// Non-zero spectrum of K from the reduced secular function s(λ) = g(λ)/λ = Σ w_i/(λ − d_i),
/// which is strictly decreasing between consecutive poles.
inline std::vector<double> secular_roots(const Vec& d, const Vec& l) {
    const Eigen::Index n = d.size();
    const double norm2 = l.squaredNorm();
    const double scale = std::max(1.0, numeric::max_abs(d));
    const double merge_tol = 1e-14 * scale;

    std::vector<std::pair<double, double>> entries;
    std::vector<double> eigs;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = l(i) * l(i) / norm2;
        if (w <= 1e-300) {
            eigs.push_back(d(i));  // e_i is an eigenvector of K
        } else {
            entries.emplace_back(d(i), w);
        }
    }
    std::sort(entries.begin(), entries.end());

    // A value repeated k+1 times contributes k eigenvalues at that value.
    std::vector<Pole> poles;
    for (const auto& [di, wi] : entries) {
        if (!poles.empty() && std::abs(di - poles.back().d) <= merge_tol) {
            poles.back().weight += wi;
            eigs.push_back(poles.back().d);
        } else {
            poles.push_back({di, wi});
        }
    }

    auto s = [&](double lambda) {
        double sum = 0.0;
        for (const auto& p : poles) sum += p.weight / (lambda - p.d);
        return sum;
    };
    for (std::size_t j = 0; j + 1 < poles.size(); ++j) {
        // s → +∞ at the left pole and −∞ at the right one.
        eigs.push_back(numeric::bisect(s, 0.0, poles[j].d, poles[j + 1].d, +1,
                                       {.value_tol = 0.0, .width_tol = 0.0, .max_iter = 2000}));
    }
    return eigs;
}

}  // namespace detail

/// Eigenvalues of K by both routes and the local-maximum verdict: Maximum iff n−1
/// eigenvalues are below −tol and one is within ±tol of zero; NotMaximum iff some
/// eigenvalue exceeds +tol; Degenerate otherwise.
inline SpectralReport classify(const Vec& d, const Vec& l) {
    if (d.size() != l.size()) throw InvalidArgument("classify: length mismatch");
    const double lnorm = l.norm();
    if (!(lnorm > 0.0)) throw InvalidArgument("classify: zero normal vector");

    SpectralReport r;
    r.d = d;
    r.l = l / lnorm;
    r.tol_eig = 1e-9 * std::max(1.0, numeric::max_abs(d));

    Eigen::SelfAdjointEigenSolver<Mat> es(projected_hessian(d, l), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    r.eigs_direct.assign(ev.data(), ev.data() + ev.size());
    std::sort(r.eigs_direct.begin(), r.eigs_direct.end());

    r.eigs_secular = detail::secular_roots(d, l);
    r.eigs_secular.push_back(0.0);
    std::sort(r.eigs_secular.begin(), r.eigs_secular.end());

    try {
        r.g_prime_zero = g_prime_at_zero(d, l);
    } catch (const DegenerateCurvature&) {
        r.g_prime_zero.reset();
    }

    std::size_t negative = 0;
    std::size_t near_zero = 0;
    std::size_t positive = 0;
    for (double e : r.eigs_direct) {
        if (e < -r.tol_eig) {
            ++negative;
        } else if (e > r.tol_eig) {
            ++positive;
        } else {
            ++near_zero;
        }
    }
    const auto n = static_cast<std::size_t>(d.size());
    if (positive > 0) {
        r.verdict = SpectralVerdict::NotMaximum;
    } else if (negative + 1 == n && near_zero == 1) {
        r.verdict = SpectralVerdict::Maximum;
    } else {
        r.verdict = SpectralVerdict::Degenerate;
    }
    return r;
}

}  // namespace dissipcert
