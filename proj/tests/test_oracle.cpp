#include <dissipcert/corpus.hpp>
#include <dissipcert/oracle.hpp>

#include <gtest/gtest.h>

#include "problems.hpp"

#include <sstream>

using namespace dissipcert;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

RawProblem problem(const char* tf, Vec c, Vec l, double b) {
    return RawProblem{std::move(c), std::move(l), b, make_builtin(tf)};
}

}  // namespace

TEST(Oracle, SymmetricTanh) {
    const auto r = grid_local_maxima(problem("tanh", vec({1, 1}), vec({1, 1}), 1), 6.0, 801);
    ASSERT_EQ(r.maxima.size(), 1u);
    EXPECT_NEAR(r.maxima[0].x(0), 0.5, 1e-3);
    EXPECT_NEAR(r.maxima[0].x(1), 0.5, 1e-3);
    EXPECT_NEAR(r.resolution, 12.0 / 800, 1e-15);
    EXPECT_EQ(r.boundary_hits, 0u);
}

TEST(Oracle, MixedSignNormalHasOnlyEdgeMaxima) {
    const auto r = grid_local_maxima(problem("tanh", vec({1, 1}), vec({1, -1}), 0), 6.0, 801);
    EXPECT_TRUE(r.maxima.empty());
    EXPECT_GT(r.boundary_hits, 0u);
}

TEST(Oracle, DegenerateBox) {
    const auto p = problem("tanh", vec({1, 2}), vec({1, 1}), 1);
    const auto r = grid_local_maxima(p, 0.0, 64);
    EXPECT_TRUE(r.maxima.empty());
    const auto tiny = grid_local_maxima(p, 1e-12, 64);
    EXPECT_LE(tiny.maxima.size(), 1u);
}

TEST(Oracle, Preconditions) {
    const auto p4 = problem("tanh", vec({1, 2, 3, 4, 5}), vec({1, 1, 1, 1, 1}), 1);
    EXPECT_THROW(grid_local_maxima(p4, 6.0, 64), UnsupportedDimension);
    EXPECT_THROW(grid_local_maxima(problem("tanh", vec({1, 2}), vec({1, 1}), 1), 6.0, 32), InvalidArgument);
}

TEST(Oracle, AgreesWithSolverOnThreeDimExample) {
    for (double b : {2.0, 3.0}) {
        const auto p = problem("arctan", vec({3, 1, 2}), vec({1, 1, 1}), b);
        const auto o = grid_local_maxima(p, 20.0, 401);
        const auto s = find_local_maxima(p);
        ASSERT_EQ(o.maxima.size(), s.maxima.size()) << "b=" << b;
        if (!s.maxima.empty()) {
            EXPECT_LT((o.maxima[0].x - s.maxima[0].x).cwiseAbs().maxCoeff(), 1e-3);
        }
    }
}

TEST(Oracle, CsvExport) {
    std::ostringstream os;
    write_grid_csv(problem("tanh", vec({1, 1}), vec({1, 1}), 1), 6.0, 65, os);
    const std::string csv = os.str();
    EXPECT_EQ(csv.rfind("u1,f,is_max\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 66);
    EXPECT_NE(csv.find(",1\n"), std::string::npos);
}

TEST(ProjectedAscent, FixedPoint) {
    const auto p = problem("tanh", vec({1, 1}), vec({1, 1}), 1);
    const Vec x = projected_ascent(p, vec({0.5, 0.5}));
    EXPECT_NEAR(x(0), 0.5, 1e-9);
    EXPECT_NEAR(x(1), 0.5, 1e-9);
}

TEST(ProjectedAscent, ConvergesToUniqueMaximum) {
    const auto p = problem("tanh", vec({1, 1}), vec({1, 1}), 1);
    const Vec x = projected_ascent(p, vec({0.9, 0.1}));
    EXPECT_NEAR(x(0), 0.5, 1e-6);
    EXPECT_NEAR(x(1), 0.5, 1e-6);
    EXPECT_NEAR(p.l.dot(x), p.b, 1e-10);
}

TEST(ProjectedAscent, UnboundedAscentFails) {
    const auto p = problem("tanh", vec({1, 1}), vec({1, -1}), 0);
    try {
        projected_ascent(p, vec({0.3, 0.3}));
        FAIL() << "expected ConvergenceFailure";
    } catch (const ConvergenceFailure& e) {
        ASSERT_EQ(e.last_iterate().size(), 2u);
        EXPECT_GT(e.last_iterate()[0], 0.3);
    }
}

TEST(ProjectedAscent, RejectsOffPlaneStart) {
    const auto p = problem("tanh", vec({1, 2}), vec({1, 1}), 1);
    EXPECT_THROW(projected_ascent(p, vec({1, 1})), InvalidArgument);
}

// Oracle count ≥ solver count, and refined oracle maxima keep at most one negative coordinate.
TEST(OracleProperty, NeverMissesSolverMaxima) {
    std::mt19937_64 rng(31);
    for (const char* tf : {"tanh", "arctan"}) {
        for (int n = 2; n <= 3; ++n) {
            for (int trial = 0; trial < (n == 2 ? 40 : 8); ++trial) {
                const auto p = problems::corpus_problem(rng, tf, n);
                const auto o = grid_local_maxima(p, default_box_radius(p.tf), n == 2 ? 1001 : 201);
                const auto s = find_local_maxima(p);
                EXPECT_GE(o.maxima.size(), s.maxima.size());
                for (const auto& m : o.maxima) {
                    EXPECT_LE((m.x.array() < 0).count(), 1);
                    EXPECT_NEAR(p.l.dot(m.x), p.b, 1e-10 * (1 + std::abs(p.b)));
                }
            }
        }
    }
}

// The library sampler's b-range matches the test-side one built on the independent ψ.
TEST(Corpus, AttainableSetMatchesReference) {
    std::mt19937_64 rng(8);
    for (const char* tf : {"tanh", "arctan"}) {
        for (int n = 2; n <= 4; ++n) {
            for (int trial = 0; trial < 20; ++trial) {
                const auto p = problems::positive_problem(rng, tf, n);
                const double cap = problems::coordinate_cap(tf);
                const auto ref = problems::attainable_set(p, cap);
                const auto lib = corpus::attainable_b(p, cap);
                ASSERT_EQ(lib.empty(), ref.empty());
                if (ref.empty()) continue;
                EXPECT_NEAR(lib.front().first, ref.front().first, 1e-6 * (1 + std::abs(ref.front().first)));
                EXPECT_NEAR(lib.back().second, ref.back().second, 1e-6 * (1 + std::abs(ref.back().second)));
            }
        }
    }
}

TEST(Corpus, SampledProblemsHaveMaximaInsideCap) {
    std::mt19937_64 rng(9);
    for (const char* tf : {"tanh", "arctan"}) {
        const auto t = make_builtin(tf);
        for (int n = 2; n <= 4; ++n) {
            for (int trial = 0; trial < 30; ++trial) {
                const auto p = corpus::random_problem(rng, t, n);
                const auto r = find_local_maxima(p);
                ASSERT_EQ(r.verdict, MaximaVerdict::UniqueMax) << tf << " n=" << n;
                EXPECT_LE(r.maxima[0].x.cwiseAbs().maxCoeff(), corpus::default_cap(t) + 1e-6);
            }
        }
    }
}
