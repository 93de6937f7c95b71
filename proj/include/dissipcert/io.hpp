#pragma once

#include "dissipativity.hpp"
#include "errors.hpp"
#include "hyperplane.hpp"
#include "spectra.hpp"
#include "transfer.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <unistd.h>

namespace dissipcert::io {

using Json = nlohmann::ordered_json;

/// Non-finite numbers become null.
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json vec_json(const Vec& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

inline Json vec_json(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

inline Json mat_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(Vec(m.row(i).transpose())));
    return rows;
}

/// Parses JSON text; syntax errors carry `source:line:column`.
inline Json parse(const std::string& text, const std::string& source = "<input>") {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        if (const auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
        throw ParseError(source, line, col, what);
    }
}

inline Json read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

/// Writes through a temporary file in the target directory and renames it into place.
inline void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidArgument("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw InvalidArgument("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw InvalidArgument("cannot rename into '" + path + "': " + ec.message());
    }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

namespace detail {

inline const Json& field(const Json& j, const char* key) {
    if (!j.is_object()) throw InvalidArgument("expected a JSON object");
    const auto it = j.find(key);
    if (it == j.end()) throw InvalidArgument(std::string("missing field '") + key + "'");
    return *it;
}

inline double number(const Json& j, const char* what) {
    if (j.is_null()) return numeric::kInf;
    if (!j.is_number()) throw InvalidArgument(std::string("field '") + what + "' must be a number");
    return j.get<double>();
}

inline Vec vec(const Json& j, const char* what) {
    if (!j.is_array()) throw InvalidArgument(std::string("field '") + what + "' must be an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], what);
    return v;
}

inline std::vector<double> list(const Json& j, const char* what) {
    const Vec v = vec(j, what);
    return {v.data(), v.data() + v.size()};
}

inline Mat mat(const Json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw InvalidArgument(std::string("field '") + what + "' must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const Vec first = vec(j[0], what);
    Mat m(rows, first.size());
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Vec r = vec(j[static_cast<std::size_t>(i)], what);
        if (r.size() != m.cols()) throw InvalidArgument(std::string("field '") + what + "' has ragged rows");
        m.row(i) = r.transpose();
    }
    return m;
}

inline std::string text(const Json& j, const char* what) {
    if (!j.is_string()) throw InvalidArgument(std::string("field '") + what + "' must be a string");
    return j.get<std::string>();
}

inline Orthant orthant(const std::string& s) {
    if (s == "main") return Orthant::main();
    if (s.rfind("side:", 0) == 0) {
        try {
            return Orthant::side(static_cast<Eigen::Index>(std::stol(s.substr(5))));
        } catch (const std::exception&) {
        }
    }
    throw InvalidArgument("bad orthant label '" + s + "'");
}

template <class E, std::size_t N>
E enum_from(const std::string& s, const std::array<E, N>& values) {
    for (E v : values)
        if (s == to_string(v)) return v;
    throw InvalidArgument("unknown verdict '" + s + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline Json to_json(const AssumptionReport& r) {
    Json verdicts = Json::object();
    Json tallies = Json::object();
    for (int a = 0; a < 5; ++a) {
        const std::string key = "A" + std::to_string(a + 1);
        verdicts[key] = to_string(r.verdicts[a]);
        tallies[key] = {{"checked", r.tallies[a].checked},
                        {"violated", r.tallies[a].violated},
                        {"skipped", r.tallies[a].skipped},
                        {"worst_margin", num(r.tallies[a].worst_margin)}};
    }
    Json w = Json::array();
    for (const auto& x : r.witnesses) {
        w.push_back({{"assumption", x.assumption},
                     {"point", vec_json(x.point)},
                     {"value", num(x.value)},
                     {"status", to_string(x.status)}});
    }
    return {{"version", 1},         {"transfer", r.transfer}, {"verdicts", verdicts},
            {"a3_sign", r.a3_sign}, {"worst_margin", num(r.worst_margin)},
            {"tallies", tallies},   {"witnesses", w}};
}

inline Json to_json(const SpectralReport& r) {
    return {{"d", vec_json(r.d)},
            {"l", vec_json(r.l)},
            {"eigs_direct", vec_json(r.eigs_direct)},
            {"eigs_secular", vec_json(r.eigs_secular)},
            {"g_prime_zero", r.g_prime_zero ? num(*r.g_prime_zero) : Json(nullptr)},
            {"tol_eig", num(r.tol_eig)},
            {"verdict", to_string(r.verdict)}};
}

inline SpectralReport spectral_from_json(const Json& j) {
    using detail::field;
    SpectralReport r;
    r.d = detail::vec(field(j, "d"), "d");
    r.l = detail::vec(field(j, "l"), "l");
    r.eigs_direct = detail::list(field(j, "eigs_direct"), "eigs_direct");
    r.eigs_secular = detail::list(field(j, "eigs_secular"), "eigs_secular");
    if (const auto& g = field(j, "g_prime_zero"); !g.is_null()) r.g_prime_zero = detail::number(g, "g_prime_zero");
    r.tol_eig = detail::number(field(j, "tol_eig"), "tol_eig");
    r.verdict = detail::enum_from(detail::text(field(j, "verdict"), "verdict"),
                                  std::array{SpectralVerdict::Maximum, SpectralVerdict::NotMaximum,
                                             SpectralVerdict::Degenerate});
    return r;
}

inline Json to_json(const RawProblem& p) {
    return {{"transfer", p.tf.name}, {"c", vec_json(p.c)}, {"l", vec_json(p.l)}, {"b", num(p.b)}};
}

/// {transfer, c, l, b}; the transfer must be a built-in.
inline RawProblem problem_from_json(const Json& j) {
    using detail::field;
    RawProblem p;
    p.tf = make_builtin(detail::text(field(j, "transfer"), "transfer"));
    p.c = detail::vec(field(j, "c"), "c");
    p.l = detail::vec(field(j, "l"), "l");
    p.b = detail::number(field(j, "b"), "b");
    if (!std::isfinite(p.b)) throw InvalidArgument("field 'b' must be finite");
    return p;
}

inline Json to_json(const MaximaReport& r) {
    Json maxima = Json::array();
    for (const auto& m : r.maxima) {
        maxima.push_back({{"beta", num(m.beta)},
                          {"x", vec_json(m.x)},
                          {"orthant", to_string(m.orthant)},
                          {"boundary_flag", m.boundary_flag},
                          {"value", num(m.value)}});
    }
    Json cands = Json::array();
    for (const auto& c : r.candidates) {
        cands.push_back({{"beta", num(c.beta)},
                         {"x", vec_json(c.x)},
                         {"orthant", to_string(c.orthant)},
                         {"branch_slope", num(c.branch_slope)},
                         {"boundary_degenerate", c.is_boundary_degenerate},
                         {"spectral", to_json(c.spectral)}});
    }
    return {{"verdict", to_string(r.verdict)},
            {"maxima", maxima},
            {"candidates", cands},
            {"flips", vec_json(r.flips)},
            {"early_reason", r.early_reason ? Json(*r.early_reason) : Json(nullptr)},
            {"coincident_q", r.coincident_q}};
}

inline MaximaReport report_from_json(const Json& j) {
    using detail::field;
    MaximaReport r;
    r.verdict = detail::enum_from(
        detail::text(field(j, "verdict"), "verdict"),
        std::array{MaximaVerdict::UniqueMax, MaximaVerdict::NoMax, MaximaVerdict::TheoremViolation});
    const auto& maxima = field(j, "maxima");
    if (!maxima.is_array()) throw InvalidArgument("field 'maxima' must be an array");
    for (const auto& m : maxima) {
        LocalMaximum lm;
        lm.beta = detail::number(field(m, "beta"), "beta");
        lm.x = detail::vec(field(m, "x"), "x");
        lm.orthant = detail::orthant(detail::text(field(m, "orthant"), "orthant"));
        lm.boundary_flag = field(m, "boundary_flag").get<bool>();
        if (m.contains("value")) lm.value = detail::number(m["value"], "value");
        r.maxima.push_back(std::move(lm));
    }
    if (j.contains("candidates")) {
        for (const auto& c : j["candidates"]) {
            CriticalPoint cp;
            cp.beta = detail::number(field(c, "beta"), "beta");
            cp.x = detail::vec(field(c, "x"), "x");
            cp.orthant = detail::orthant(detail::text(field(c, "orthant"), "orthant"));
            cp.branch_slope = detail::number(field(c, "branch_slope"), "branch_slope");
            cp.is_boundary_degenerate = field(c, "boundary_degenerate").get<bool>();
            cp.spectral = spectral_from_json(field(c, "spectral"));
            r.candidates.push_back(std::move(cp));
        }
    }
    if (j.contains("flips")) r.flips = detail::vec(j["flips"], "flips");
    if (j.contains("early_reason") && !j["early_reason"].is_null())
        r.early_reason = detail::text(j["early_reason"], "early_reason");
    if (j.contains("coincident_q")) r.coincident_q = j["coincident_q"].get<bool>();
    return r;
}

inline Json to_json(const RnnModel& m) { return {{"transfer", m.tf.name}, {"W", mat_json(m.W)}}; }

/// {transfer, W}; W is an array of rows.
inline RnnModel model_from_json(const Json& j) {
    using detail::field;
    RnnModel m{detail::mat(field(j, "W"), "W"), make_builtin(detail::text(field(j, "transfer"), "transfer"))};
    m.validate();
    return m;
}

inline Json to_json(const Polytope& p) {
    return {{"directions", mat_json(p.directions)}, {"supports", vec_json(p.supports)}};
}

inline Polytope polytope_from_json(const Json& j) {
    using detail::field;
    Polytope p{detail::mat(field(j, "directions"), "directions"), detail::vec(field(j, "supports"), "supports")};
    validate_polytope(p);
    return p;
}

inline Json to_json(const Certificate& c) {
    return {{"verdict", to_string(c.verdict)},
            {"iterations", c.iterations},
            {"radius_trace", vec_json(c.radius_trace)},
            {"final_polytope", to_json(c.final_polytope)}};
}

inline Certificate certificate_from_json(const Json& j) {
    using detail::field;
    Certificate c;
    c.verdict = detail::enum_from(detail::text(field(j, "verdict"), "verdict"),
                                  std::array{Certificate::Verdict::Certified, Certificate::Verdict::Stalled,
                                             Certificate::Verdict::IterLimit});
    c.iterations = field(j, "iterations").get<int>();
    c.radius_trace = detail::list(field(j, "radius_trace"), "radius_trace");
    c.final_polytope = polytope_from_json(field(j, "final_polytope"));
    return c;
}

}  // namespace dissipcert::io
