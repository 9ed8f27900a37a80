#pragma once

// Reference parameter grids and the CSV row generators behind the `table`
// and `figure` commands. Cells are independent, so generation fans out over
// a worker pool; rows are emitted in grid order regardless of completion
// order.

#include <atomic>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "solve.hpp"

namespace maxsprt {

inline std::string fmt(double v, const char* format) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

inline std::string fmt_num(double v) {
    std::string s = fmt(v, "%.6f");
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

template <class F>
inline void parallel_cells(std::size_t n, F&& fn, int threads) {
    if (threads < 1) threads = 1;
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    int used = std::min<int>(threads, static_cast<int>(n));
    pool.reserve(static_cast<std::size_t>(used));
    for (int t = 0; t < used; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

inline const std::vector<double>& table1_t_grid() {
    static const std::vector<double> g = {1,  1.5, 2,  2.5, 3,   4,   5,   6,   8,   10,
                                          12, 15,  20, 25,  30,  40,  50,  60,  80,  100,
                                          120, 150, 200, 250, 300, 400, 500, 600, 800, 1000};
    return g;
}

inline const std::vector<std::int64_t>& table1_m_grid() {
    static const std::vector<std::int64_t> g = {1, 2, 3, 4, 6, 8, 10};
    return g;
}

inline const std::vector<double>& table3_t_grid() {
    static const std::vector<double> g = {1.5, 2,  2.5, 3,   4,   5,   6,   8,   10,  12,
                                          15,  20, 25,  30,  40,  50,  60,  80,  100, 120,
                                          150, 200, 250, 300, 400, 500, 600, 800, 1000};
    return g;
}

inline const std::vector<double>& table3_d_grid() {
    static const std::vector<double> g = {0, 1, 2, 3, 4, 6, 8, 10};
    return g;
}

inline const std::vector<std::pair<double, std::int64_t>>& table2_designs() {
    static const std::vector<std::pair<double, std::int64_t>> g = {
        {1, 1},  {1, 3},  {2, 1},  {2, 3},  {5, 1},   {5, 3},   {5, 6},
        {10, 1}, {10, 3}, {10, 6}, {10, 10}, {20, 1},  {20, 3},  {20, 6},
        {20, 10}, {50, 1}, {50, 3}, {50, 6}, {50, 10}, {100, 1}, {100, 3},
        {100, 6}, {100, 10}, {200, 1}, {200, 3}, {200, 6}, {200, 10}};
    return g;
}

inline const std::vector<std::pair<double, double>>& table5_designs() {
    static const std::vector<std::pair<double, double>> g = {
        {5, 0},  {5, 3},  {10, 0}, {10, 3}, {10, 6},  {20, 0},  {20, 3},
        {20, 6}, {20, 10}, {50, 0}, {50, 3}, {50, 6},  {50, 10}, {100, 0},
        {100, 3}, {100, 6}, {100, 10}, {200, 0}, {200, 3}, {200, 6}, {200, 10}};
    return g;
}

inline const std::vector<std::pair<double, double>>& table4_pairs() {
    static const std::vector<std::pair<double, double>> g = {
        {5, 1},  {10, 2}, {10, 4}, {10, 8},  {15, 10}, {20, 3},
        {60, 4}, {60, 6}, {80, 8}, {800, 3}, {1000, 1}, {1000, 8}};
    return g;
}

inline const std::vector<double>& table_rr_grid() {
    static const std::vector<double> g = {1.5, 2, 3, 4, 10};
    return g;
}

// --only "T=20,M=3": numeric equality filters on the row's grid keys.
struct GridFilter {
    std::vector<std::pair<std::string, double>> terms;

    static GridFilter parse(const std::string& expr) {
        GridFilter f;
        std::size_t pos = 0;
        while (pos < expr.size()) {
            std::size_t comma = expr.find(',', pos);
            std::string term = expr.substr(pos, comma == std::string::npos ? comma : comma - pos);
            pos = comma == std::string::npos ? expr.size() : comma + 1;
            if (term.empty()) continue;
            std::size_t eq = term.find('=');
            if (eq == std::string::npos)
                throw std::domain_error("--only terms must look like KEY=VALUE");
            f.terms.emplace_back(term.substr(0, eq), std::stod(term.substr(eq + 1)));
        }
        return f;
    }

    bool pass(std::initializer_list<std::pair<const char*, double>> keys) const {
        for (const auto& [k, v] : terms) {
            bool matched = false;
            for (const auto& [name, val] : keys)
                if (k == name) {
                    matched = std::fabs(val - v) < 1e-9;
                    break;
                }
            if (!matched) return false;
        }
        return true;
    }
};

struct TableOutput {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline TableOutput make_table(int id, const GridFilter& filter, double alpha,
                              const EngineConfig& cfg, int threads) {
    TableOutput out;
    switch (id) {
        case 1: {
            out.header = {"T", "M", "cv", "status"};
            struct Cell { double t; std::int64_t m; };
            std::vector<Cell> cells;
            for (double t : table1_t_grid())
                for (std::int64_t m : table1_m_grid())
                    if (filter.pass({{"T", t}, {"M", static_cast<double>(m)}}))
                        cells.push_back({t, m});
            out.rows.resize(cells.size());
            parallel_cells(cells.size(), [&](std::size_t i) {
                CvSolution s = solve_cv(alpha, cells[i].t, cells[i].m, 0.0, cfg);
                bool ok = s.status != CvSolution::Status::Unachievable;
                out.rows[i] = {fmt_num(cells[i].t), std::to_string(cells[i].m),
                               ok ? fmt(s.cv_cons, "%.6f") : "", to_string(s.status)};
            }, threads);
            break;
        }
        case 3: {
            out.header = {"T", "D", "cv", "status"};
            struct Cell { double t, d; };
            std::vector<Cell> cells;
            for (double t : table3_t_grid())
                for (double d : table3_d_grid())
                    if (filter.pass({{"T", t}, {"D", d}})) cells.push_back({t, d});
            out.rows.resize(cells.size());
            parallel_cells(cells.size(), [&](std::size_t i) {
                const auto [t, d] = cells[i];
                if (d >= t) { // no sequential analysis remains: no critical value exists
                    out.rows[i] = {fmt_num(t), fmt_num(d), "", "unachievable"};
                    return;
                }
                CvSolution s = solve_cv(alpha, t, 1, d, cfg);
                bool ok = s.status != CvSolution::Status::Unachievable;
                out.rows[i] = {fmt_num(t), fmt_num(d),
                               ok ? fmt(s.cv_cons, "%.6f") : "", to_string(s.status)};
            }, threads);
            break;
        }
        case 2:
        case 5: {
            out.header = {"T", "M_or_D", "rr", "power", "ets"};
            struct Cell { double t; double m_or_d; };
            std::vector<Cell> cells;
            if (id == 2) {
                for (const auto& [t, m] : table2_designs())
                    if (filter.pass({{"T", t}, {"M", static_cast<double>(m)}}))
                        cells.push_back({t, static_cast<double>(m)});
            } else {
                for (const auto& [t, d] : table5_designs())
                    if (filter.pass({{"T", t}, {"D", d}})) cells.push_back({t, d});
            }
            const auto& rrs = table_rr_grid();
            std::vector<std::vector<std::vector<std::string>>> chunks(cells.size());
            parallel_cells(cells.size(), [&](std::size_t i) {
                const auto [t, v] = cells[i];
                std::int64_t m = id == 2 ? static_cast<std::int64_t>(v) : 1;
                double d = id == 2 ? 0.0 : v;
                CvSolution s = solve_cv(alpha, t, m, d, cfg);
                for (double rr : rrs) {
                    if (s.status == CvSolution::Status::Unachievable) {
                        chunks[i].push_back({fmt_num(t), fmt_num(v), fmt_num(rr), "", ""});
                        continue;
                    }
                    EvalReport r = evaluate({s.cv_cons, t, m, d, rr}, cfg);
                    chunks[i].push_back({fmt_num(t), fmt_num(v), fmt_num(rr),
                                         fmt(r.reject_prob, "%.3f"),
                                         r.ets_conditional ? fmt(*r.ets_conditional, "%.2f")
                                                           : ""});
                }
            }, threads);
            for (auto& ch : chunks)
                for (auto& row : ch) out.rows.push_back(std::move(row));
            break;
        }
        case 4: {
            out.header = {"T", "D", "cv_cons", "alpha_cons", "cv_lib", "alpha_lib"};
            const auto& pairs = table4_pairs();
            std::vector<std::pair<double, double>> cells;
            for (const auto& [t, d] : pairs)
                if (filter.pass({{"T", t}, {"D", d}})) cells.emplace_back(t, d);
            out.rows.resize(cells.size());
            parallel_cells(cells.size(), [&](std::size_t i) {
                const auto [t, d] = cells[i];
                CvSolution s = solve_cv(alpha, t, 1, d, cfg);
                out.rows[i] = {fmt_num(t), fmt_num(d),
                               fmt(s.cv_cons, "%.6f"), fmt(s.alpha_cons, "%.5f"),
                               fmt(s.cv_lib, "%.6f"), fmt(s.alpha_lib, "%.5f")};
            }, threads);
            break;
        }
        default:
            throw std::domain_error("table id must be 1..5");
    }
    return out;
}

struct FigureOptions {
    std::vector<double> design_rrs = {1.5, 2.0};
    std::vector<double> powers = {0.50, 0.55, 0.60, 0.65, 0.70, 0.75,
                                  0.80, 0.85, 0.90, 0.95, 0.99};
    std::vector<std::int64_t> m_set = {1, 2, 3, 6, 10}; // figure 1
    std::vector<double> d_set = {0, 1, 3, 6, 10};        // figure 2
    std::vector<double> true_rrs = {1.5, 2, 3, 4, 10};
    double alpha = 0.05;
    double t_ceiling = 1e4;
};

inline TableOutput make_figure(int fig, const FigureOptions& opt,
                               const EngineConfig& cfg, int threads) {
    if (fig != 1 && fig != 2) throw std::domain_error("figure id must be 1 or 2");
    TableOutput out;
    out.header = {"fig", "design_rr", "target_power", "M_or_D",
                  "true_rr", "T_solved", "ets", "status"};
    struct Cell { double design_rr, power, m_or_d; };
    std::vector<Cell> cells;
    if (fig == 1) {
        for (double rr : opt.design_rrs)
            for (double p : opt.powers)
                for (std::int64_t m : opt.m_set)
                    cells.push_back({rr, p, static_cast<double>(m)});
    } else {
        for (double rr : opt.design_rrs)
            for (double p : opt.powers)
                for (double d : opt.d_set) cells.push_back({rr, p, d});
    }
    std::vector<std::vector<std::vector<std::string>>> chunks(cells.size());
    parallel_cells(cells.size(), [&](std::size_t i) {
        const Cell& c = cells[i];
        std::int64_t m = fig == 1 ? static_cast<std::int64_t>(c.m_or_d) : 1;
        double d = fig == 1 ? 0.0 : c.m_or_d;
        auto base_row = [&](double true_rr) {
            return std::vector<std::string>{std::to_string(fig), fmt_num(c.design_rr),
                                            fmt(c.power, "%.2f"), fmt_num(c.m_or_d),
                                            fmt_num(true_rr)};
        };
        try {
            DesignSolution sol =
                solve_t(c.power, c.design_rr, opt.alpha, m, d, cfg, opt.t_ceiling);
            for (double rr : opt.true_rrs) {
                EvalReport r = evaluate({sol.cv_at_t, sol.t_solved, m, d, rr}, cfg);
                auto row = base_row(rr);
                row.push_back(fmt(sol.t_solved, "%.6f"));
                row.push_back(r.ets_conditional ? fmt(*r.ets_conditional, "%.6f") : "");
                row.push_back("ok");
                chunks[i].push_back(std::move(row));
            }
        } catch (const std::exception&) {
            for (double rr : opt.true_rrs) {
                auto row = base_row(rr);
                row.push_back("");
                row.push_back("");
                row.push_back("failed");
                chunks[i].push_back(std::move(row));
            }
        }
    }, threads);
    for (auto& ch : chunks)
        for (auto& row : ch) out.rows.push_back(std::move(row));
    return out;
}

} // namespace maxsprt
