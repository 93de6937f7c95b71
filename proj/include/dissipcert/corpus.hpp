#pragma once

#include "hyperplane.hpp"
#include "transfer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

namespace dissipcert::corpus {

using Intervals = std::vector<std::pair<double, double>>;

/// Half-width of the cube that sampled maxima stay in.
inline double default_cap(const TransferFunction& tf) { return tf.name == "arctan" ? 10.0 : 3.0; }

/// b-values (a union of intervals) for which l·x = b has a local maximum of a positive
/// problem inside [−cap, cap]ⁿ: the main curve, plus the stretches of each side curve where
/// g_k increases, for β from φ′(cap)/min q up to β_max. Empty when no such β exists.
inline Intervals attainable_b(const RawProblem& p, double cap, int points = 4097) {
    auto normalized = normalize(p, {.allow_coincident_q = true});
    if (!std::holds_alternative<NormalizedProblem>(normalized)) return {};
    const auto& np = std::get<NormalizedProblem>(normalized);
    const double beta_lo = p.tf.phi_prime(cap) / np.q.minCoeff();
    if (!(beta_lo < np.beta_max)) return {};
    std::vector<double> betas(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        betas[i] = beta_lo * std::pow(np.beta_max / beta_lo, static_cast<double>(i) / (points - 1));
    betas.back() = np.beta_max;

    Intervals raw;
    auto curve = [&](double beta, Eigen::Index k) {
        if (k < 0) return main_branch(np, beta).first;
        return beta < np.beta_max ? side_branch_g(np, k, beta).first : side_branch_at_max(np, k);
    };
    for (Eigen::Index k = -1; k < np.size(); ++k) {
        double prev = curve(betas[0], k);
        for (int i = 1; i < points; ++i) {
            const double cur = curve(betas[i], k);
            if (k < 0) {
                raw.emplace_back(cur, prev);
            } else if (cur > prev) {
                raw.emplace_back(prev, cur);
            }
            prev = cur;
        }
    }
    std::sort(raw.begin(), raw.end());
    Intervals merged;
    for (const auto& iv : raw) {
        if (!merged.empty() && iv.first <= merged.back().second) {
            merged.back().second = std::max(merged.back().second, iv.second);
        } else {
            merged.push_back(iv);
        }
    }
    return merged;
}

/// Positive problem with c, l log-uniform in [0.1, 10], distinct q, and b uniform over
/// attainable_b. Draws with an empty attainable set are repeated.
inline RawProblem random_problem(std::mt19937_64& rng, const TransferFunction& tf, int n) {
    std::uniform_real_distribution<double> logu(std::log(0.1), std::log(10.0));
    RawProblem p;
    p.tf = tf;
    p.c.resize(n);
    p.l.resize(n);
    for (;;) {
        for (int i = 0; i < n; ++i) {
            p.c(i) = std::exp(logu(rng));
            p.l(i) = std::exp(logu(rng));
        }
        bool distinct = true;
        for (int i = 0; i < n && distinct; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double qi = p.l(i) / p.c(i), qj = p.l(j) / p.c(j);
                if (std::abs(qi - qj) <= 1e-9 * std::max(qi, qj)) distinct = false;
            }
        }
        if (!distinct) continue;
        const auto set = attainable_b(p, default_cap(tf));
        if (set.empty()) continue;
        double total = 0.0;
        for (const auto& [a, b] : set) total += b - a;
        double t = std::uniform_real_distribution<double>(0.0, total)(rng);
        p.b = set.back().second;
        for (const auto& [a, b] : set) {
            if (t <= b - a) {
                p.b = a + t;
                break;
            }
            t -= b - a;
        }
        return p;
    }
}

}  // namespace dissipcert::corpus
