#pragma once

#include "corpus.hpp"
#include "dissipativity.hpp"
#include "hyperplane.hpp"
#include "io.hpp"
#include "log.hpp"
#include "oracle.hpp"
#include "transfer.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace dissipcert::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kNegative = 2;

/// Parses "1,2.5,-3" into a vector.
inline Vec parse_list(const std::string& s, const std::string& what) {
    std::vector<double> vals;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (item.empty() || used != item.size()) throw InvalidArgument("--" + what + ": '" + item + "' is not a number");
        vals.push_back(v);
    }
    if (vals.empty()) throw InvalidArgument("--" + what + " is empty");
    return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

struct Options {
    std::string output;
    std::string format = "json";
    std::uint64_t seed = 42;

    // solve / oracle-compare
    std::string input;
    std::string transfer;
    std::string c, l;
    std::optional<double> b;

    // check-transfer
    std::string name;
    std::size_t grid = 256;

    // certify / simulate
    std::string model;
    double box = 1.0;
    double tol = 1e-3;
    int max_iters = 100;
    std::string trace;
    std::string y0;
    int steps = 0;

    // oracle-compare
    int corpus = 0;
    int dim = 2;
    double radius = 0.0;
};

namespace detail {

inline void emit(const Options& o, const std::string& content, std::ostream& out) {
    if (o.output.empty()) {
        out << content;
    } else {
        io::write_atomic(o.output, content);
    }
}

inline void require_format(const Options& o, std::initializer_list<const char*> allowed, const char* cmd) {
    for (const char* f : allowed)
        if (o.format == f) return;
    throw InvalidArgument(std::string("--format ") + o.format + " is not available for " + cmd);
}

inline std::string csv_number(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

inline RawProblem problem_from_options(const Options& o) {
    const bool inline_given = !o.transfer.empty() || !o.c.empty() || !o.l.empty() || o.b.has_value();
    if (!o.input.empty()) {
        if (inline_given) log::info("warning: both --input and inline problem flags given; using " + o.input);
        return io::problem_from_json(io::read_file(o.input));
    }
    if (o.transfer.empty() || o.c.empty() || o.l.empty() || !o.b) {
        throw InvalidArgument("solve needs --input or all of --transfer, --c, --l, --b");
    }
    RawProblem p{parse_list(o.c, "c"), parse_list(o.l, "l"), *o.b, make_builtin(o.transfer)};
    if (!std::isfinite(p.b)) throw InvalidArgument("--b must be finite");
    return p;
}

inline MaximaReport solve_allowing_ties(const RawProblem& p) {
    try {
        return find_local_maxima(p);
    } catch (const DegenerateQ& e) {
        log::info(std::string("warning: ") + e.what() + "; solving without the uniqueness guarantee");
        return find_local_maxima(p, {.allow_coincident_q = true});
    }
}

inline int solve(const Options& o, std::ostream& out) {
    require_format(o, {"json", "csv"}, "solve");
    const auto p = problem_from_options(o);
    const auto r = solve_allowing_ties(p);
    if (o.format == "json") {
        io::Json j = io::to_json(p);
        j["report"] = io::to_json(r);
        emit(o, io::dump(j), out);
    } else {
        std::string s = "beta,orthant,boundary_flag,value";
        for (Eigen::Index i = 0; i < p.c.size(); ++i) s += ",x" + std::to_string(i + 1);
        s += "\n";
        for (const auto& m : r.maxima) {
            s += csv_number(m.beta) + "," + to_string(m.orthant) + "," + (m.boundary_flag ? "1" : "0") + "," +
                 csv_number(m.value);
            for (Eigen::Index i = 0; i < m.x.size(); ++i) s += "," + csv_number(m.x(i));
            s += "\n";
        }
        emit(o, s, out);
    }
    switch (r.verdict) {
        case MaximaVerdict::UniqueMax: return kOk;
        case MaximaVerdict::NoMax: return kNegative;
        case MaximaVerdict::TheoremViolation:
            log::info("error: more than one local maximum found");
            return kError;
    }
    return kError;
}

inline int check_transfer(const Options& o, std::ostream& out) {
    require_format(o, {"json"}, "check-transfer");
    const auto r = check_assumptions(make_builtin(o.name), {o.grid, o.grid, o.grid});
    emit(o, io::dump(io::to_json(r)), out);
    return r.all_pass() ? kOk : kNegative;
}

inline int certify_cmd(const Options& o, std::ostream& out) {
    require_format(o, {"json", "csv"}, "certify");
    const auto m = io::model_from_json(io::read_file(o.model));
    const auto cert = certify(m, make_box(m.dim(), o.box), {.max_iters = o.max_iters, .radius_tol = o.tol});
    std::ostringstream csv;
    write_trace_csv(cert, csv);
    if (!o.trace.empty()) io::write_atomic(o.trace, csv.str());
    emit(o, o.format == "json" ? io::dump(io::to_json(cert)) : csv.str(), out);
    return cert.verdict == Certificate::Verdict::Certified ? kOk : kNegative;
}

inline int simulate_cmd(const Options& o, std::ostream& out) {
    require_format(o, {"json", "csv"}, "simulate");
    const auto m = io::model_from_json(io::read_file(o.model));
    const Vec y0 = parse_list(o.y0, "y0");
    const auto traj = simulate(m, y0, o.steps);
    if (o.format == "json") {
        io::Json states = io::Json::array();
        for (const auto& y : traj) states.push_back(io::vec_json(y));
        emit(o, io::dump({{"steps", o.steps}, {"trajectory", states}}), out);
    } else {
        std::string s = "k";
        for (Eigen::Index i = 0; i < y0.size(); ++i) s += ",y" + std::to_string(i + 1);
        s += "\n";
        for (std::size_t k = 0; k < traj.size(); ++k) {
            s += std::to_string(k);
            for (Eigen::Index i = 0; i < traj[k].size(); ++i) s += "," + csv_number(traj[k](i));
            s += "\n";
        }
        emit(o, s, out);
    }
    return kOk;
}

inline int default_steps(Eigen::Index n) { return n == 2 ? 2001 : n == 3 ? 401 : 65; }

inline int oracle_compare(const Options& o, std::ostream& out) {
    require_format(o, {"json"}, "oracle-compare");
    std::vector<RawProblem> problems;
    if (!o.input.empty()) {
        const auto j = io::read_file(o.input);
        if (j.is_array()) {
            for (const auto& e : j) problems.push_back(io::problem_from_json(e));
        } else {
            problems.push_back(io::problem_from_json(j));
        }
    } else if (o.corpus > 0) {
        if (o.transfer.empty()) throw InvalidArgument("--corpus needs --transfer");
        const auto tf = make_builtin(o.transfer);
        std::mt19937_64 rng(o.seed);
        for (int k = 0; k < o.corpus; ++k) problems.push_back(corpus::random_problem(rng, tf, o.dim));
    } else {
        problems.push_back(problem_from_options(o));
    }

    io::Json rows = io::Json::array();
    std::size_t agreed = 0;
    for (std::size_t k = 0; k < problems.size(); ++k) {
        const auto& p = problems[k];
        if (p.c.size() > 4) throw UnsupportedDimension(static_cast<std::size_t>(p.c.size()));
        const auto r = solve_allowing_ties(p);
        const double radius = o.radius > 0.0 ? o.radius : default_box_radius(p.tf);
        const int steps = o.steps > 0 ? o.steps : default_steps(p.c.size());
        const auto g = grid_local_maxima(p, radius, steps);
        double distance = 0.0;
        for (const auto& m : r.maxima) {
            double best = numeric::kInf;
            for (const auto& q : g.maxima) best = std::min(best, (m.x - q.x).norm());
            distance = std::max(distance, best);
        }
        const bool agree = r.maxima.size() == g.maxima.size() && distance < 1e-3;
        agreed += agree ? 1 : 0;
        rows.push_back({{"index", k},
                        {"verdict", to_string(r.verdict)},
                        {"solver_count", r.maxima.size()},
                        {"oracle_count", g.maxima.size()},
                        {"distance", r.maxima.empty() ? io::Json(nullptr) : io::num(distance)},
                        {"boundary_hits", g.boundary_hits},
                        {"agree", agree}});
    }
    emit(o, io::dump({{"agreed", agreed}, {"total", problems.size()}, {"instances", rows}}), out);
    return agreed == problems.size() ? kOk : kNegative;
}

}  // namespace detail

/// Entry point shared by the executable and the tests. Machine output goes to `out`,
/// diagnostics to standard error.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout) {
    CLI::App app{"Local-maximum analysis on hyperplanes and dissipativity certificates for y' = W phi(y)"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-o,--output", o.output, "Write the result here (atomically) instead of stdout");
        sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--seed", o.seed, "Seed for randomized suites");
    };
    auto add_problem = [&](CLI::App* sub) {
        sub->add_option("--input", o.input, "Problem JSON {transfer, c, l, b}");
        sub->add_option("--transfer", o.transfer, "tanh or arctan");
        sub->add_option("--c", o.c, "Comma-separated coefficients");
        sub->add_option("--l", o.l, "Comma-separated hyperplane normal");
        sub->add_option("--b", o.b, "Hyperplane offset");
    };

    auto* solve = app.add_subcommand("solve", "Local maxima of sum c_i phi(x_i) on l.x = b");
    add_common(solve);
    add_problem(solve);

    auto* check = app.add_subcommand("check-transfer", "Audit a transfer function's assumptions");
    add_common(check);
    check->add_option("--name", o.name, "tanh or arctan")->required();
    check->add_option("--grid", o.grid, "Samples per audit axis")->check(CLI::PositiveNumber);

    auto* cert = app.add_subcommand("certify", "Shrink a box domain until it collapses or stalls");
    add_common(cert);
    cert->add_option("--model", o.model, "Model JSON {transfer, W}")->required();
    cert->add_option("--box", o.box, "Half-width of the starting box")->check(CLI::PositiveNumber);
    cert->add_option("--tol", o.tol, "Radius below which the model is certified")->check(CLI::PositiveNumber);
    cert->add_option("--max-iters", o.max_iters, "Iteration limit")->check(CLI::PositiveNumber);
    cert->add_option("--trace", o.trace, "Also write the radius trace CSV here");

    auto* sim = app.add_subcommand("simulate", "Iterate y <- W phi(y)");
    add_common(sim);
    sim->add_option("--model", o.model, "Model JSON {transfer, W}")->required();
    sim->add_option("--y0", o.y0, "Comma-separated initial state")->required();
    sim->add_option("--steps", o.steps, "Number of steps")->required();

    auto* cmp = app.add_subcommand("oracle-compare", "Compare the solver with the grid oracle");
    add_common(cmp);
    add_problem(cmp);
    cmp->add_option("--corpus", o.corpus, "Generate this many random problems instead");
    cmp->add_option("--dim", o.dim, "Dimension of generated problems")->check(CLI::Range(2, 4));
    cmp->add_option("--steps", o.steps, "Oracle grid steps per axis (default depends on n)");
    cmp->add_option("--radius", o.radius, "Oracle window half-width (default depends on transfer)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kError;
    }

    try {
        if (solve->parsed()) return detail::solve(o, out);
        if (check->parsed()) return detail::check_transfer(o, out);
        if (cert->parsed()) return detail::certify_cmd(o, out);
        if (sim->parsed()) return detail::simulate_cmd(o, out);
        if (cmp->parsed()) return detail::oracle_compare(o, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    }
    return kError;
}

}  // namespace dissipcert::cli
