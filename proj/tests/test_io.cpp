#include <dissipcert/io.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace dissipcert;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Io, ProblemRoundTrip) {
    const RawProblem p{vec({1.0, 0.1}), vec({1.0 / 3.0, 2.0}), 0.7000000000000001, make_builtin("arctan")};
    const auto text = io::dump(io::to_json(p));
    const auto q = io::problem_from_json(io::parse(text));
    EXPECT_EQ(q.tf.name, "arctan");
    EXPECT_EQ(q.c, p.c);
    EXPECT_EQ(q.l, p.l);
    EXPECT_EQ(q.b, p.b);
}

TEST(Io, ReportRoundTrip) {
    const RawProblem p{vec({3, 1, 2}), vec({1, 1, 1}), 3.0, make_builtin("arctan")};
    const auto r = find_local_maxima(p);
    ASSERT_EQ(r.verdict, MaximaVerdict::UniqueMax);
    const auto j = io::to_json(r);
    EXPECT_EQ(j["verdict"], "UniqueMax");
    const auto back = io::report_from_json(io::parse(io::dump(j)));
    EXPECT_EQ(back.verdict, r.verdict);
    ASSERT_EQ(back.maxima.size(), 1u);
    EXPECT_EQ(back.maxima[0].x, r.maxima[0].x);
    EXPECT_EQ(back.maxima[0].beta, r.maxima[0].beta);
    EXPECT_EQ(to_string(back.maxima[0].orthant), to_string(r.maxima[0].orthant));
    ASSERT_EQ(back.candidates.size(), r.candidates.size());
    for (std::size_t k = 0; k < r.candidates.size(); ++k) {
        EXPECT_EQ(back.candidates[k].spectral.verdict, r.candidates[k].spectral.verdict);
        EXPECT_EQ(back.candidates[k].spectral.eigs_secular, r.candidates[k].spectral.eigs_secular);
    }
    EXPECT_EQ(io::dump(io::to_json(back)), io::dump(j));
}

TEST(Io, EarlyVerdictSerializes) {
    const auto r = find_local_maxima({vec({1, 1}), vec({1, -1}), 0.0, make_builtin("tanh")});
    const auto j = io::to_json(r);
    EXPECT_EQ(j["verdict"], "NoMax");
    EXPECT_TRUE(j["early_reason"].is_string());
    EXPECT_TRUE(j["maxima"].empty());
}

TEST(Io, AssumptionReportDocument) {
    const auto j = io::to_json(check_assumptions(make_builtin("tanh"), {64, 64, 64}));
    EXPECT_EQ(j["version"], 1);
    EXPECT_EQ(j["transfer"], "tanh");
    for (const char* a : {"A1", "A2", "A3", "A4", "A5"}) EXPECT_EQ(j["verdicts"][a], "pass") << a;
    EXPECT_EQ(j["a3_sign"], 1);
    EXPECT_FALSE(j["witnesses"].empty());
}

TEST(Io, SpectralRoundTrip) {
    const auto r = classify(vec({-1, 2, 3}), vec({1, 1, 2}));
    const auto back = io::spectral_from_json(io::parse(io::dump(io::to_json(r))));
    EXPECT_EQ(back.verdict, r.verdict);
    EXPECT_EQ(back.eigs_direct, r.eigs_direct);
    EXPECT_EQ(back.g_prime_zero, r.g_prime_zero);
}

TEST(Io, ModelAndCertificateRoundTrip) {
    const RnnModel m{(Mat(2, 2) << 0.5, 0.1, -0.2, 0.5).finished(), make_builtin("tanh")};
    const auto mj = io::parse(R"({"transfer": "tanh", "W": [[0.5, 0.1], [-0.2, 0.5]]})");
    const auto m2 = io::model_from_json(mj);
    EXPECT_EQ(m2.W, m.W);
    EXPECT_EQ(io::to_json(m2), mj);

    const auto cert = certify(m, make_box(2, 1.0), 100, 1e-3);
    const auto back = io::certificate_from_json(io::parse(io::dump(io::to_json(cert))));
    EXPECT_EQ(back.verdict, cert.verdict);
    EXPECT_EQ(back.iterations, cert.iterations);
    EXPECT_EQ(back.radius_trace, cert.radius_trace);
    EXPECT_EQ(back.final_polytope.supports, cert.final_polytope.supports);
}

TEST(Io, ParseErrorsAreLineAnchored) {
    try {
        io::parse("{\n  \"transfer\": \"tanh\",\n  \"c\": [1, 2,,]\n}", "p.json");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(std::string(e.what()).rfind("p.json:3:", 0), 0u) << e.what();
    }
}

TEST(Io, SemanticErrors) {
    EXPECT_THROW(io::problem_from_json(io::parse(R"({"transfer": "tanh", "c": [1], "l": [1]})")), InvalidArgument);
    EXPECT_THROW(io::problem_from_json(io::parse(R"({"transfer": "relu", "c": [1], "l": [1], "b": 0})")),
                 UnknownTransfer);
    EXPECT_THROW(io::model_from_json(io::parse(R"({"transfer": "tanh", "W": [[1, 2], [3]]})")), InvalidArgument);
    EXPECT_THROW(io::model_from_json(io::parse(R"({"transfer": "tanh", "W": [[1, 2]]})")), InvalidArgument);
    EXPECT_THROW(io::problem_from_json(io::parse(R"({"transfer": "tanh", "c": "x", "l": [1], "b": 0})")),
                 InvalidArgument);
}

TEST(Io, NonFiniteBecomesNull) {
    EXPECT_TRUE(io::num(numeric::kInf).is_null());
    EXPECT_TRUE(io::num(numeric::kNaN).is_null());
    EXPECT_EQ(io::num(0.1).get<double>(), 0.1);
}

TEST(Io, AtomicWrite) {
    const auto dir = std::filesystem::temp_directory_path() / "dissipcert_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.json";
    io::write_atomic(path.string(), "first\n");
    io::write_atomic(path.string(), "second\n");
    EXPECT_EQ(slurp(path), "second\n");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
    EXPECT_EQ(files, 1u);
    EXPECT_THROW(io::write_atomic((dir / "missing" / "x.json").string(), "x"), InvalidArgument);
    std::filesystem::remove_all(dir);
}
