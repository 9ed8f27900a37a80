#pragma once

// Quadrature backend: propagates the arrival densities f_n themselves on a
// composite Gauss-Legendre grid. f_{n+1}(x) = r * C(x) where C is the
// running convolution of the surviving density with the exponential
// inter-arrival kernel; C is marched left to right so every exponent stays
// negative. Start-look atoms enter the convolution analytically as the
// initial value of C. The grid is refined (cells halved) until the total
// rejection probability stabilizes.

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "segments.hpp"

namespace maxsprt {

struct GaussLegendre {
    std::vector<double> node;   // on (-1, 1)
    std::vector<double> weight;
    std::vector<double> bary;   // barycentric weights for the nodes
};

inline const GaussLegendre& gauss_legendre(int q) {
    static std::map<int, GaussLegendre> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(q);
    if (it != cache.end()) return it->second;

    GaussLegendre gl;
    gl.node.resize(static_cast<std::size_t>(q));
    gl.weight.resize(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
        double dp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= q; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = q * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        gl.node[static_cast<std::size_t>(q - 1 - i)] = x;
        gl.weight[static_cast<std::size_t>(q - 1 - i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    gl.bary.assign(static_cast<std::size_t>(q), 1.0);
    for (int j = 0; j < q; ++j)
        for (int k = 0; k < q; ++k)
            if (k != j) gl.bary[static_cast<std::size_t>(j)] /= gl.node[j] - gl.node[k];
    return cache.emplace(q, std::move(gl)).first->second;
}

namespace detail {

// Lagrange interpolation through the cell's nodal values at reference
// coordinate t in [-1, 1].
inline double interp_cell(const GaussLegendre& gl, const double* v, double t) {
    const int q = static_cast<int>(gl.node.size());
    double num = 0.0, den = 0.0;
    for (int j = 0; j < q; ++j) {
        double d = t - gl.node[static_cast<std::size_t>(j)];
        if (std::fabs(d) < 1e-14) return v[j];
        double w = gl.bary[static_cast<std::size_t>(j)] / d;
        num += w * v[j];
        den += w;
    }
    return num / den;
}

struct QuadGrid {
    std::vector<double> edge;         // cell edges, edge[0] = plan.start
    std::vector<std::size_t> cut_cell; // per segment: #cells below its hi edge
    std::vector<double> node;          // flattened q nodes per cell
    std::vector<double> weight;
    int q = 0;

    std::size_t ncell() const { return edge.size() - 1; }
};

inline QuadGrid make_grid(const SegmentPlan& plan, double h, int q) {
    QuadGrid g;
    g.q = q;
    g.edge.push_back(plan.start);
    g.cut_cell.reserve(plan.segments.size());
    for (const Segment& s : plan.segments) {
        double w = s.hi - s.lo;
        if (w > 0.0) {
            int nc = static_cast<int>(std::ceil(w / h));
            for (int j = 1; j <= nc; ++j)
                g.edge.push_back(s.lo + w * static_cast<double>(j) / nc);
        }
        g.cut_cell.push_back(g.edge.size() - 1);
    }
    const GaussLegendre& gl = gauss_legendre(q);
    g.node.resize(g.ncell() * static_cast<std::size_t>(q));
    g.weight.resize(g.node.size());
    for (std::size_t c = 0; c < g.ncell(); ++c) {
        double a = g.edge[c], b = g.edge[c + 1];
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int j = 0; j < q; ++j) {
            g.node[c * q + j] = mid + half * gl.node[static_cast<std::size_t>(j)];
            g.weight[c * q + j] = half * gl.weight[static_cast<std::size_t>(j)];
        }
    }
    return g;
}

// Integral of f_prev(s) * exp(-rate*(b - s)) over (a, b), both endpoints in
// cell `cell`, with f_prev interpolated from that cell's nodes.
inline double local_conv(const QuadGrid& g, const GaussLegendre& gl,
                         const std::vector<double>& f_prev, std::size_t cell,
                         double a, double b, double rate) {
    if (b <= a) return 0.0;
    const int q = g.q;
    const double ca = g.edge[cell], cb = g.edge[cell + 1];
    const double inv_half_cell = 2.0 / (cb - ca);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    const double* v = f_prev.data() + cell * static_cast<std::size_t>(q);
    double sum = 0.0;
    for (int k = 0; k < q; ++k) {
        double s = mid + half * gl.node[static_cast<std::size_t>(k)];
        double t = (s - ca) * inv_half_cell - 1.0;
        sum += gl.weight[static_cast<std::size_t>(k)] *
               interp_cell(gl, v, t) * std::exp(-rate * (b - s));
    }
    return half * sum;
}

inline SweepResult sweep_quadrature_pass(const SegmentPlan& plan, const StartLook& look,
                                         double rate, double h, int q) {
    const QuadGrid g = make_grid(plan, h, q);
    const GaussLegendre& gl = gauss_legendre(q);
    const std::size_t nseg = plan.segments.size();

    SweepResult res;
    res.absorbed.assign(nseg, 0.0);
    res.absorbed_mu.assign(nseg, 0.0);

    std::vector<double> f_prev(g.node.size(), 0.0); // surviving density of event n-1
    std::vector<double> f(g.node.size(), 0.0);
    std::size_t support = 0;      // first active cell of the survivor
    double prev_mass = 0.0;       // mass of f_prev
    double exits = 0.0;

    for (std::int64_t n = 1; n <= plan.last_level(); ++n) {
        const double atom =
            (n - 1) < static_cast<std::int64_t>(look.atom_mass.size())
                ? look.atom_mass[static_cast<std::size_t>(n - 1)]
                : 0.0;
        const double in_mass = prev_mass + atom;

        double cum = atom; // running convolution value C
        double xprev = g.edge[support];
        for (std::size_t cell = support; cell < g.ncell(); ++cell) {
            for (int j = 0; j < q; ++j) {
                double x = g.node[cell * static_cast<std::size_t>(q) + j];
                cum = cum * std::exp(-rate * (x - xprev)) +
                      local_conv(g, gl, f_prev, cell, xprev, x, rate);
                f[cell * static_cast<std::size_t>(q) + j] = rate * cum;
                xprev = x;
            }
            double xe = g.edge[cell + 1];
            cum = cum * std::exp(-rate * (xe - xprev)) +
                  local_conv(g, gl, f_prev, cell, xprev, xe, rate);
            xprev = xe;
        }

        double tot = 0.0;
        for (std::size_t i = support * static_cast<std::size_t>(q); i < f.size(); ++i)
            tot += g.weight[i] * f[i];
        exits += in_mass - tot;

        if (n >= plan.first_level) {
            const std::size_t sidx = static_cast<std::size_t>(n - plan.first_level);
            const std::size_t cut = g.cut_cell[sidx];
            double abs_mass = 0.0, abs_mu = 0.0;
            for (std::size_t i = support * static_cast<std::size_t>(q);
                 i < cut * static_cast<std::size_t>(q); ++i) {
                abs_mass += g.weight[i] * f[i];
                abs_mu += g.weight[i] * g.node[i] * f[i];
            }
            res.absorbed[sidx] = abs_mass;
            res.absorbed_mu[sidx] = abs_mu;
            support = cut;
            prev_mass = tot - abs_mass;
        } else {
            prev_mass = tot;
        }
        f_prev.swap(f);
        std::fill(f.begin(), f.end(), 0.0);
    }

    res.accept_mass = exits;
    double reject = look.reject_mass;
    for (double a : res.absorbed) reject += a;
    res.max_defect = std::fabs(1.0 - reject - exits);
    return res;
}

} // namespace detail

inline SweepResult sweep_quadrature(const SegmentPlan& plan, const StartLook& look,
                                    double rate, const EngineConfig& cfg) {
    auto total = [](const SweepResult& r) {
        double t = 0.0;
        for (double a : r.absorbed) t += a;
        return t;
    };
    double h = cfg.quad_h0;
    SweepResult prev = detail::sweep_quadrature_pass(plan, look, rate, h, cfg.quad_order);
    for (int i = 0; i < cfg.quad_max_refine; ++i) {
        h *= 0.5;
        SweepResult cur = detail::sweep_quadrature_pass(plan, look, rate, h, cfg.quad_order);
        if (std::fabs(total(cur) - total(prev)) < cfg.quad_tol) return cur;
        prev = cur;
    }
    throw ConvergenceError(
        "quadrature backend: reject_prob did not stabilize within the refinement budget");
}

} // namespace maxsprt
