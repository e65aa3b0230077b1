// gfuzz: typecheck, run, and certify graded-Fuzz programs.
//
// Subcommands: check, run, verify, div, lemmas.  Exit code 0 on success or
// pass, 1 on check/verify failure, 2 on usage errors.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gfuzz/divergence.hpp"
#include "gfuzz/interp.hpp"
#include "gfuzz/metricspace.hpp"
#include "gfuzz/typecheck.hpp"
#include "gfuzz/verify.hpp"

namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw gfuzz::Error("io", "cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

json diagnostics_json(const gfuzz::Error& err) {
    json d;
    d["code"] = err.code();
    if (const auto* diag = dynamic_cast<const gfuzz::Diagnostic*>(&err)) {
        d["line"] = diag->line();
        d["col"] = diag->col();
        d["message"] = diag->message();
    } else {
        d["message"] = err.what();
    }
    return json::array({d});
}

int report_error(const gfuzz::Error& err, bool as_json) {
    if (as_json) {
        json out;
        out["ok"] = false;
        out["diagnostics"] = diagnostics_json(err);
        std::cout << out.dump(2) << "\n";
    } else {
        std::cerr << "error[" << err.code() << "] " << err.what() << "\n";
    }
    return 1;
}

json usage_json(const gfuzz::SensMap& usage) {
    json u = json::object();
    for (const auto& [x, s] : usage) u[x] = s.str();
    return u;
}

int cmd_check(const std::string& file, bool as_json) {
    try {
        gfuzz::TermPtr program = gfuzz::parse_term(slurp(file));
        gfuzz::Judgment j = gfuzz::infer({}, program);
        if (as_json) {
            json out;
            out["ok"] = true;
            out["type"] = gfuzz::type_str(j.type);
            out["usage"] = usage_json(j.usage);
            std::cout << out.dump(2) << "\n";
        } else {
            std::cout << gfuzz::type_str(j.type) << "\n";
            std::cout << "usage: " << gfuzz::sensmap_str(j.usage) << "\n";
        }
        return 0;
    } catch (const gfuzz::Error& err) {
        return report_error(err, as_json);
    }
}

gfuzz::EvalConfig make_config(const std::string& grid_spec) {
    gfuzz::EvalConfig cfg;
    if (!grid_spec.empty()) cfg.grid = gfuzz::Grid::parse(grid_spec);
    return cfg;
}

int cmd_run(const std::string& file, const std::string& input, const std::string& grid_spec,
            bool as_json) {
    try {
        gfuzz::EvalConfig cfg = make_config(grid_spec);
        std::optional<gfuzz::Database> db;
        if (!input.empty()) {
            json j = json::parse(slurp(input));
            db = gfuzz::database_from_json(j);
            if (j.is_object() && j.contains("predicates")) {
                gfuzz::DbUniverse u = gfuzz::DbUniverse::from_json(j);
                cfg.predicates = u.predicates;
            }
        }
        gfuzz::RunResult r = gfuzz::run_program(slurp(file), db, cfg);
        if (as_json) {
            json out;
            out["ok"] = true;
            out["type"] = gfuzz::type_str(r.judgment.type);
            if (r.value.kind == gfuzz::Value::Kind::Dist) {
                json support = json::array();
                for (const auto& [v, p] : r.value.dist->support())
                    support.push_back({{"value", v.str()}, {"probability", p.value()}});
                out["distribution"] = support;
            } else {
                out["value"] = r.value.str();
            }
            std::cout << out.dump(2) << "\n";
        } else if (r.value.kind == gfuzz::Value::Kind::Dist) {
            gfuzz::write_dist(std::cout, *r.value.dist,
                              [](const gfuzz::Value& v) { return v.str(); });
        } else {
            std::cout << r.value.str() << "\n";
        }
        return 0;
    } catch (const gfuzz::Error& err) {
        return report_error(err, as_json);
    }
}

int cmd_verify(const std::string& file, const std::string& universe, std::optional<int> k,
               const std::string& grid_spec, double tol, int jobs, bool timing, bool as_json) {
    try {
        gfuzz::TermPtr program = gfuzz::parse_term(slurp(file));
        gfuzz::Judgment j = gfuzz::infer({}, program);
        gfuzz::DbUniverse u = gfuzz::DbUniverse::load(universe);
        gfuzz::VerifyReport report = gfuzz::verify_bound(file, program, j, u, k,
                                                         make_config(grid_spec), tol, jobs);
        if (as_json) {
            json out;
            out["program"] = report.program;
            out["type"] = report.type_string;
            out["family"] = gfuzz::family_name(report.family);
            out["k"] = report.k;
            out["bound"] = report.bound;
            out["bound_desc"] = report.bound_desc;
            out["pair_count"] = report.pair_count;
            out["max_measured"] = report.max_measured;
            out["tolerance"] = report.tolerance;
            out["grid"] = report.grid;
            out["pass"] = report.pass;
            if (timing) out["runtime_ms"] = report.runtime_ms;
            json pairs = json::array();
            for (const auto& p : report.pairs)
                pairs.push_back({{"left", p.left}, {"right", p.right}, {"measured", p.measured}});
            out["pairs"] = pairs;
            std::cout << out.dump(2) << "\n";
        } else {
            std::cout << "program: " << report.program << "\n";
            std::cout << "type:    " << report.type_string << "\n";
            std::cout << "family:  " << gfuzz::family_name(report.family) << "  k: " << report.k
                      << "  grid: " << report.grid << "\n";
            std::cout << "bound:   " << report.bound_desc << "  (tolerance " <<
                gfuzz::format_double(report.tolerance) << ")\n";
            std::cout << "pairs:   " << report.pair_count << "\n";
            std::cout << "max measured: " << gfuzz::format_double(report.max_measured) << "\n";
            if (timing) std::cout << "runtime: " << report.runtime_ms << " ms\n";
            std::cout << (report.pass ? "PASS" : "FAIL") << "\n";
        }
        return report.pass ? 0 : 1;
    } catch (const gfuzz::Error& err) {
        return report_error(err, as_json);
    }
}

std::string ext_str(double v) { return gfuzz::format_double(v); }

int cmd_div(const std::string& file_a, const std::string& file_b, double eps, bool as_json) {
    try {
        std::ifstream ia(file_a), ib(file_b);
        if (!ia) throw gfuzz::Error("io", "cannot open " + file_a);
        if (!ib) throw gfuzz::Error("io", "cannot open " + file_b);
        gfuzz::Dist<std::string> a = gfuzz::read_dist(ia);
        gfuzz::Dist<std::string> b = gfuzz::read_dist(ib);
        double md = gfuzz::max_div(a, b);
        double sd = gfuzz::stat_dist(a, b);
        double ad = gfuzz::skew_div(eps, a, b);
        double kl = gfuzz::kl_div(a, b);
        double xd = gfuzz::chi2_div(a, b);
        double hd = gfuzz::hellinger(a, b);
        if (as_json) {
            json out;
            out["MD"] = ext_str(md);
            out["SD"] = sd;
            out["AD"] = ad;
            out["AD_eps"] = eps;
            out["KL"] = ext_str(kl);
            out["XD"] = ext_str(xd);
            out["HD"] = hd;
            std::cout << out.dump(2) << "\n";
        } else {
            std::cout << "MD\t" << ext_str(md) << "\n";
            std::cout << "SD\t" << ext_str(sd) << "\n";
            std::cout << "AD(" << ext_str(eps) << ")\t" << ext_str(ad) << "\n";
            std::cout << "KL\t" << ext_str(kl) << "\n";
            std::cout << "XD\t" << ext_str(xd) << "\n";
            std::cout << "HD\t" << ext_str(hd) << "\n";
        }
        return 0;
    } catch (const gfuzz::Error& err) {
        return report_error(err, as_json);
    }
}

int cmd_lemmas(std::uint64_t seed, int trials, int samples, double tol, bool as_json) {
    try {
        gfuzz::LemmasReport lemmas = gfuzz::check_lemmas(samples, seed);
        std::vector<gfuzz::CompReport> comps;
        for (auto fam : {gfuzz::DivFamily::MD, gfuzz::DivFamily::SD, gfuzz::DivFamily::ED,
                         gfuzz::DivFamily::KL, gfuzz::DivFamily::XD, gfuzz::DivFamily::HD})
            comps.push_back(gfuzz::check_composability(fam, trials, seed, tol));
        bool pass = lemmas.pass();
        for (const auto& c : comps) pass = pass && c.pass();
        if (as_json) {
            json out;
            json jl = json::array();
            for (const auto& c : lemmas.checks)
                jl.push_back({{"name", c.name}, {"cases", c.cases}, {"failures", c.failures}});
            json jc = json::array();
            for (const auto& c : comps)
                jc.push_back({{"family", gfuzz::family_name(c.family)},
                              {"trials", c.trials},
                              {"violations", c.violations},
                              {"max_violation", c.max_violation}});
            out["lemmas"] = jl;
            out["composability"] = jc;
            out["pass"] = pass;
            std::cout << out.dump(2) << "\n";
        } else {
            for (const auto& c : lemmas.checks)
                std::cout << "[lemma] " << c.name << ": cases=" << c.cases
                          << " failures=" << c.failures << "\n";
            for (const auto& c : comps)
                std::cout << "[comp]  " << gfuzz::family_name(c.family) << ": trials=" << c.trials
                          << " violations=" << c.violations
                          << " max=" << gfuzz::format_double(c.max_violation) << "\n";
            std::cout << (pass ? "PASS" : "FAIL") << "\n";
        }
        return pass ? 0 : 1;
    } catch (const gfuzz::Error& err) {
        return report_error(err, as_json);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"graded Fuzz: sensitivity typechecking and privacy-bound certification"};
    app.require_subcommand(1);

    std::string file, input, universe, grid_spec, file_b;
    bool as_json = false, timing = false;
    double tol = 1e-9, eps = 0.0;
    int jobs = 1, trials = 1000, samples = 100;
    std::uint64_t seed = 42;
    std::optional<int> k;

    auto* check = app.add_subcommand("check", "infer the type and usage of a program");
    check->add_option("file", file, "program file (.gfuzz)")->required();
    check->add_flag("--json", as_json, "machine-readable output");

    auto* run = app.add_subcommand("run", "evaluate a program");
    run->add_option("file", file, "program file (.gfuzz)")->required();
    run->add_option("--input", input, "database JSON for Db -o ... programs");
    run->add_option("--grid", grid_spec, "mechanism grid lo,hi,step")->envname("GFUZZ_GRID");
    run->add_flag("--json", as_json, "machine-readable output");

    auto* verify = app.add_subcommand("verify", "certify the divergence bound of a program");
    verify->add_option("file", file, "program file (.gfuzz)")->required();
    verify->add_option("--universe", universe, "universe JSON file")->required();
    verify->add_option("--k", k, "adjacency distance (defaults to the bang annotation)");
    verify->add_option("--grid", grid_spec, "mechanism grid lo,hi,step")->envname("GFUZZ_GRID");
    verify->add_option("--tol", tol, "verification tolerance");
    verify->add_option("--jobs", jobs, "worker threads");
    verify->add_flag("--timing", timing, "include runtime in the report");
    verify->add_flag("--json", as_json, "machine-readable output");

    auto* div = app.add_subcommand("div", "divergence table between two distribution files");
    div->add_option("a", file, "first distribution file")->required();
    div->add_option("b", file_b, "second distribution file")->required();
    div->add_option("--eps", eps, "skew divergence parameter");
    div->add_flag("--json", as_json, "machine-readable output");

    auto* lemmas = app.add_subcommand("lemmas", "run the lemma and composability suites");
    lemmas->add_option("--seed", seed, "random seed");
    lemmas->add_option("--trials", trials, "composability trials per family");
    lemmas->add_option("--samples", samples, "sampled instances per lemma");
    lemmas->add_option("--tol", tol, "violation tolerance");
    lemmas->add_flag("--json", as_json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    if (check->parsed()) return cmd_check(file, as_json);
    if (run->parsed()) return cmd_run(file, input, grid_spec, as_json);
    if (verify->parsed()) return cmd_verify(file, universe, k, grid_spec, tol, jobs, timing, as_json);
    if (div->parsed()) return cmd_div(file, file_b, eps, as_json);
    if (lemmas->parsed()) return cmd_lemmas(seed, trials, samples, tol, as_json);
    return 2;
}
