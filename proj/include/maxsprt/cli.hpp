#pragma once

// Command-line surface: solve critical values, evaluate operating
// characteristics, reproduce the reference tables and figure datasets,
// monitor an observed event stream, and run the Monte Carlo check.
//
// Exit codes: 0 success, 2 usage/parse error, 3 unachievable target,
// 4 numerical non-convergence, 1 I/O failure.

#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "csv.hpp"
#include "engine.hpp"
#include "jsonw.hpp"
#include "mc.hpp"
#include "monitor.hpp"
#include "solve.hpp"
#include "tables.hpp"

namespace maxsprt {
namespace cli {

struct Flags {
    double alpha = 0.05;
    double t = 0.0;
    std::int64_t m = 1;
    double d = 0.0;
    double rr = 1.0;
    double cv = 0.0;
    bool has_cv = false;
    std::int64_t reps = 1'000'000;
    std::uint64_t seed = 1;
    std::string backend = "auto";
    std::string out;
    bool json = false;
    std::string config;
    int threads = static_cast<int>(std::thread::hardware_concurrency());
};

inline Backend parse_backend(const std::string& s) {
    if (s == "poly") return Backend::Poly;
    if (s == "quad") return Backend::Quad;
    if (s == "auto") return Backend::Auto;
    throw std::domain_error("--backend must be one of poly, quad, auto");
}

// key=value config files act as defaults; explicit flags override them.
inline void load_config(const std::string& path, Flags& f) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::domain_error("config line " + std::to_string(lineno) +
                                    ": expected key=value");
        auto trim = [](std::string s) {
            std::size_t a = s.find_first_not_of(" \t");
            std::size_t b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "alpha") f.alpha = std::stod(val);
            else if (key == "t") f.t = std::stod(val);
            else if (key == "m") f.m = std::stoll(val);
            else if (key == "d") f.d = std::stod(val);
            else if (key == "rr") f.rr = std::stod(val);
            else if (key == "cv") { f.cv = std::stod(val); f.has_cv = true; }
            else if (key == "reps") f.reps = std::stoll(val);
            else if (key == "seed") f.seed = std::stoull(val);
            else if (key == "backend") f.backend = val;
            else if (key == "out") f.out = val;
            else if (key == "threads") f.threads = std::stoi(val);
            else throw std::domain_error("unknown key '" + key + "'");
        } catch (const std::domain_error&) {
            throw;
        } catch (const std::exception&) {
            throw std::domain_error("config line " + std::to_string(lineno) +
                                    ": bad value for '" + key + "'");
        }
    }
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open output file " + path);
    os << content;
    if (!os) throw std::runtime_error("failed writing output file " + path);
}

inline std::string csv_text(const TableOutput& t) {
    std::ostringstream os;
    csv_write_row(os, t.header);
    for (const auto& r : t.rows) csv_write_row(os, r);
    return os.str();
}

inline void emit_csv(const TableOutput& t, const std::string& out_path,
                     std::ostream& stdout_stream) {
    std::string text = csv_text(t);
    if (out_path.empty() || out_path == "-")
        stdout_stream << text;
    else
        write_text_file(out_path, text);
}

inline void json_cv_solution(JsonWriter& w, const CvSolution& s) {
    w.key("status").value(to_string(s.status));
    if (s.status == CvSolution::Status::Unachievable) {
        w.key("alpha_max").value(s.alpha_max);
        return;
    }
    w.key("cv_cons").value(s.cv_cons);
    w.key("alpha_cons").value(s.alpha_cons);
    w.key("cv_lib").value(s.cv_lib);
    w.key("alpha_lib").value(s.alpha_lib);
    w.key("alpha_max").value(s.alpha_max);
}

inline void json_report(JsonWriter& w, const EvalReport& r) {
    w.key("reject_prob").value(r.reject_prob);
    w.key("ets_conditional");
    if (r.ets_conditional) w.value(*r.ets_conditional); else w.null();
    w.key("signal_at_start_mass").value(r.signal_at_start_mass);
    w.key("accept_mass").value(r.accept_mass);
    w.key("mass_defect").value(r.mass_defect);
    w.key("reject_mass_by_count").begin_array();
    for (const auto& rm : r.reject_mass_by_count) {
        w.begin_object();
        w.key("count").value(rm.count);
        w.key("mass").value(rm.mass);
        w.key("mu_mass").value(rm.mu_mass);
        w.end_object();
    }
    w.end_array();
}

struct SolvedCv {
    double cv = 0.0;
    bool solved = false;
    CvSolution solution;
};

// Resolves the critical value for commands that accept either --cv or
// --alpha. Returns nullopt when the target alpha is unachievable (the
// caller exits 3).
inline std::optional<SolvedCv> resolve_cv(const Flags& f, const EngineConfig& cfg) {
    if (f.has_cv) {
        if (!(f.cv > 0.0)) throw std::domain_error("--cv must be positive");
        return SolvedCv{f.cv, false, {}};
    }
    CvSolution s = solve_cv(f.alpha, f.t, f.m, f.d, cfg);
    if (s.status == CvSolution::Status::Unachievable) return std::nullopt;
    return SolvedCv{s.cv_cons, true, s};
}

inline void check_design_flags(const Flags& f) {
    if (!(f.t > 0.0)) throw std::domain_error("--t is required and must be positive");
    if (!(f.alpha > 0.0 && f.alpha < 1.0))
        throw std::domain_error("--alpha must lie in (0, 1)");
    if (f.m < 1) throw std::domain_error("--m must be at least 1");
    if (!(f.d >= 0.0 && f.d < f.t))
        throw std::domain_error("--d must satisfy 0 <= D < T");
    if (!(f.rr >= 1.0)) throw std::domain_error("--rr must be at least 1");
}

inline int cmd_cv(const Flags& f, const EngineConfig& cfg, std::ostream& out) {
    check_design_flags(f);
    CvSolution s = solve_cv(f.alpha, f.t, f.m, f.d, cfg);
    if (f.json) {
        JsonWriter w;
        w.begin_object();
        json_cv_solution(w, s);
        w.end_object();
        out << w.str() << '\n';
    } else if (s.status == CvSolution::Status::Unachievable) {
        out << "status unachievable\n";
        out << "alpha_max " << fmt(s.alpha_max, "%.8f") << '\n';
    } else if (s.status == CvSolution::Status::Exact) {
        out << "cv " << fmt(s.cv_cons, "%.6f") << '\n';
        out << "alpha " << fmt(s.alpha_cons, "%.8f") << '\n';
        out << "status exact\n";
    } else {
        out << "cv_cons " << fmt(s.cv_cons, "%.6f") << '\n';
        out << "alpha_cons " << fmt(s.alpha_cons, "%.8f") << '\n';
        out << "cv_lib " << fmt(s.cv_lib, "%.6f") << '\n';
        out << "alpha_lib " << fmt(s.alpha_lib, "%.8f") << '\n';
        out << "status discrete\n";
    }
    return s.status == CvSolution::Status::Unachievable ? 3 : 0;
}

inline int cmd_evaluate(const Flags& f, const EngineConfig& cfg, std::ostream& out) {
    check_design_flags(f);
    auto solved = resolve_cv(f, cfg);
    if (!solved) {
        out << "status unachievable\n";
        out << "alpha_max " << fmt(alpha_max(f.t, f.m, f.d, cfg), "%.8f") << '\n';
        return 3;
    }
    SequentialDesign design{solved->cv, f.t, f.m, f.d, f.rr};
    EvalReport r = evaluate(design, cfg);
    if (f.json) {
        JsonWriter w;
        w.begin_object();
        w.key("t").value(f.t);
        w.key("m").value(f.m);
        w.key("d").value(f.d);
        w.key("rr").value(f.rr);
        w.key("cv").value(solved->cv);
        if (solved->solved) {
            w.key("cv_solution").begin_object();
            json_cv_solution(w, solved->solution);
            w.end_object();
        }
        json_report(w, r);
        w.end_object();
        out << w.str() << '\n';
    } else {
        out << "cv " << fmt(solved->cv, "%.6f") << '\n';
        out << "power " << fmt(r.reject_prob, "%.3f") << '\n';
        if (r.ets_conditional)
            out << "ets " << fmt(*r.ets_conditional, "%.2f") << '\n';
        else
            out << "ets n/a\n";
    }
    if (!f.out.empty() && f.out != "-") {
        TableOutput t;
        t.header = {"t", "m", "d", "rr", "cv", "power", "ets"};
        t.rows.push_back({fmt_num(f.t), std::to_string(f.m), fmt_num(f.d), fmt_num(f.rr),
                          fmt(solved->cv, "%.6f"), fmt(r.reject_prob, "%.17g"),
                          r.ets_conditional ? fmt(*r.ets_conditional, "%.17g") : ""});
        write_text_file(f.out, csv_text(t));
    }
    return 0;
}

inline int cmd_table(int id, const std::string& only, const Flags& f,
                     const EngineConfig& cfg, std::ostream& out) {
    if (!(f.alpha > 0.0 && f.alpha < 1.0))
        throw std::domain_error("--alpha must lie in (0, 1)");
    GridFilter filter = only.empty() ? GridFilter{} : GridFilter::parse(only);
    TableOutput t = make_table(id, filter, f.alpha, cfg, f.threads);
    emit_csv(t, f.out, out);
    return 0;
}

inline int cmd_figure(int id, const FigureOptions& opt, const Flags& f,
                      const EngineConfig& cfg, std::ostream& out) {
    TableOutput t = make_figure(id, opt, cfg, f.threads);
    emit_csv(t, f.out, out);
    return 0;
}

inline int cmd_monitor(const std::string& events_path, const Flags& f,
                       const EngineConfig& cfg, std::ostream& out) {
    check_design_flags(f);
    auto solved = resolve_cv(f, cfg);
    if (!solved) {
        out << "status unachievable\n";
        out << "alpha_max " << fmt(alpha_max(f.t, f.m, f.d, cfg), "%.8f") << '\n';
        return 3;
    }
    std::ifstream is(events_path);
    if (!is) throw std::runtime_error("cannot open events file " + events_path);
    std::vector<EventRecord> events = read_events(is);
    for (const EventRecord& e : events)
        if (e.mu > f.t)
            throw std::domain_error("event at mu=" + fmt_num(e.mu) + " lies beyond T");

    SequentialDesign design{solved->cv, f.t, f.m, f.d, f.rr};
    MonitorVerdict v = monitor(design, events);

    auto status_text = [&]() {
        if (v.status == MonitorStatus::Signal)
            return "signal at event " + std::to_string(v.signal_event);
        return std::string(to_string(v.status));
    };

    if (f.json) {
        JsonWriter w;
        w.begin_object();
        w.key("cv").value(solved->cv);
        w.key("status").value(status_text());
        w.key("signal_event").value(v.signal_event);
        w.key("rows").begin_array();
        for (const auto& row : v.rows) {
            w.begin_object();
            w.key("n").value(row.n);
            w.key("mu").value(row.mu);
            w.key("llr").value(row.llr_value);
            w.key("tau").value(row.tau);
            w.key("signal").value(row.signaled);
            w.end_object();
        }
        w.end_array();
        w.end_object();
        out << w.str() << '\n';
    } else {
        out << "n,mu,llr,tau,signal\n";
        for (const auto& row : v.rows) {
            out << row.n << ',' << fmt(row.mu, "%.6f") << ',' << fmt(row.llr_value, "%.6f")
                << ',' << fmt(row.tau, "%.6f") << ',' << (row.signaled ? "yes" : "no")
                << '\n';
        }
        out << "status " << status_text() << '\n';
    }
    if (!f.out.empty() && f.out != "-") {
        TableOutput t;
        t.header = {"n", "mu", "llr", "tau", "signal"};
        for (const auto& row : v.rows)
            t.rows.push_back({std::to_string(row.n), fmt(row.mu, "%.17g"),
                              fmt(row.llr_value, "%.17g"), fmt(row.tau, "%.17g"),
                              row.signaled ? "yes" : "no"});
        write_text_file(f.out, csv_text(t));
    }
    return 0;
}

inline int cmd_simulate(const Flags& f, const EngineConfig& cfg, std::ostream& out) {
    check_design_flags(f);
    if (f.reps < 1) throw std::domain_error("--reps must be positive");
    auto solved = resolve_cv(f, cfg);
    if (!solved) {
        out << "status unachievable\n";
        out << "alpha_max " << fmt(alpha_max(f.t, f.m, f.d, cfg), "%.8f") << '\n';
        return 3;
    }
    SimConfig sim;
    sim.design = {solved->cv, f.t, f.m, f.d, f.rr};
    sim.replications = f.reps;
    sim.seed = f.seed;
    SimReport r = simulate(sim);
    if (f.json) {
        JsonWriter w;
        w.begin_object();
        w.key("cv").value(solved->cv);
        w.key("replications").value(r.replications);
        w.key("seed").value(static_cast<std::int64_t>(f.seed));
        w.key("signals").value(r.signals);
        w.key("reject_rate").value(r.reject_rate);
        w.key("reject_se").value(r.reject_se);
        w.key("ets_mean");
        if (r.ets_mean) w.value(*r.ets_mean); else w.null();
        w.key("ets_se");
        if (r.ets_se) w.value(*r.ets_se); else w.null();
        w.key("signal_time_histogram").begin_array();
        for (const auto& b : r.signal_time_histogram) {
            w.begin_object();
            w.key("lo").value(b.lo);
            w.key("count").value(b.count);
            w.end_object();
        }
        w.end_array();
        w.end_object();
        out << w.str() << '\n';
    } else {
        out << "cv " << fmt(solved->cv, "%.6f") << '\n';
        out << "replications " << r.replications << '\n';
        out << "signals " << r.signals << '\n';
        out << "reject_rate " << fmt(r.reject_rate, "%.6f") << '\n';
        out << "reject_se " << fmt(r.reject_se, "%.6f") << '\n';
        if (r.ets_mean) out << "ets_mean " << fmt(*r.ets_mean, "%.4f") << '\n';
        if (r.ets_se) out << "ets_se " << fmt(*r.ets_se, "%.4f") << '\n';
    }
    return 0;
}

inline void add_common_flags(CLI::App* sub, Flags& f, bool with_rr, bool with_sim) {
    sub->add_option("--alpha", f.alpha, "target type-1 error (used when --cv is absent)");
    sub->add_option("--t", f.t, "surveillance length T in expected events under the null");
    sub->add_option("--m", f.m, "minimum number of events required to signal");
    sub->add_option("--d", f.d, "delayed start D in expected events under the null");
    if (with_rr) sub->add_option("--rr", f.rr, "true relative risk");
    sub->add_option("--cv", f.cv, "critical value (skips the alpha solve)");
    if (with_sim) {
        sub->add_option("--reps", f.reps, "Monte Carlo replications");
        sub->add_option("--seed", f.seed, "RNG seed");
    }
    sub->add_option("--backend", f.backend, "integration backend")
        ->check(CLI::IsMember({"poly", "quad", "auto"}));
    sub->add_option("--out", f.out, "output file ('-' for stdout)");
    sub->add_flag("--json", f.json, "emit JSON");
    sub->add_option("--config", f.config, "key=value config file (flags override)");
    sub->add_option("--threads", f.threads, "worker threads for grid commands");
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
    Flags f;

    // config acts as defaults, so load it before the real parse
    for (std::size_t i = 0; i < args.size(); ++i) {
        try {
            if (args[i] == "--config" && i + 1 < args.size())
                load_config(args[i + 1], f);
            else if (args[i].rfind("--config=", 0) == 0)
                load_config(args[i].substr(9), f);
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return 2;
        }
    }

    CLI::App app{"Exact design and evaluation of continuous Poisson sequential surveillance"};
    app.name("maxsprt");
    app.require_subcommand(1);

    auto* cv_cmd = app.add_subcommand("cv", "solve the critical value for a target alpha");
    add_common_flags(cv_cmd, f, false, false);

    auto* eval_cmd = app.add_subcommand("evaluate", "exact power / alpha and time to signal");
    add_common_flags(eval_cmd, f, true, false);

    int table_id = 0;
    std::string only;
    auto* table_cmd = app.add_subcommand("table", "emit a reference table as CSV");
    table_cmd->add_option("id", table_id, "table id (1-5)")->required();
    table_cmd->add_option("--only", only, "filter cells, e.g. T=20 or T=20,M=3");
    add_common_flags(table_cmd, f, false, false);

    int fig_id = 0;
    FigureOptions fig_opt;
    auto* fig_cmd = app.add_subcommand("figure", "emit a figure dataset as CSV");
    fig_cmd->add_option("id", fig_id, "figure id (1 or 2)")->required();
    fig_cmd->add_option("--design-rr", fig_opt.design_rrs, "relative risks the designs target");
    fig_cmd->add_option("--power", fig_opt.powers, "target power grid");
    fig_cmd->add_option("--m-set", fig_opt.m_set, "M values (figure 1)");
    fig_cmd->add_option("--d-set", fig_opt.d_set, "D values (figure 2)");
    fig_cmd->add_option("--true-rr", fig_opt.true_rrs, "true relative risks to evaluate");
    fig_cmd->add_option("--t-ceiling", fig_opt.t_ceiling, "largest T the length solver may try");
    add_common_flags(fig_cmd, f, false, false);

    std::string events_path;
    auto* mon_cmd = app.add_subcommand("monitor", "apply the stopping rule to observed events");
    mon_cmd->add_option("events", events_path, "CSV of observed events (header mu,label)")
        ->required();
    add_common_flags(mon_cmd, f, false, false);

    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo check of a design");
    add_common_flags(sim_cmd, f, true, true);

    std::vector<const char*> argv;
    argv.push_back("maxsprt");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    for (const CLI::App* sub : app.get_subcommands())
        if (sub->count("--cv") > 0) f.has_cv = true;

    try {
        EngineConfig cfg;
        cfg.backend = parse_backend(f.backend);
        fig_opt.alpha = f.alpha;
        if (cv_cmd->parsed()) return cmd_cv(f, cfg, out);
        if (eval_cmd->parsed()) return cmd_evaluate(f, cfg, out);
        if (table_cmd->parsed()) return cmd_table(table_id, only, f, cfg, out);
        if (fig_cmd->parsed()) return cmd_figure(fig_id, fig_opt, f, cfg, out);
        if (mon_cmd->parsed()) return cmd_monitor(events_path, f, cfg, out);
        if (sim_cmd->parsed()) return cmd_simulate(f, cfg, out);
        err << "error: no command\n";
        return 2;
    } catch (const CsvError& e) {
        err << "error: line " << e.line << ": " << e.what() << '\n';
        return 2;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace cli
} // namespace maxsprt
