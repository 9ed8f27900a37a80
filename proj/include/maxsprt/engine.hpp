#pragma once

// Exact evaluation of a surveillance design by propagating the non-absorbed
// probability of the event process through the rejection boundary.
//
// Under rate r the arrival density of event n factors as
// f_n(mu) = r^n * exp(-r*mu) * W_{n-1}(mu), with W_0 = 1 and each W_k the
// running integral of its predecessor from that count's survival cut. In a
// basis shifted to a stretch's left endpoint the Taylor coefficients of W
// are the (scaled) W-values of the lower orders at that endpoint, all
// nonnegative, and the repeated integration by parts that yields absorbed
// mass closes into Poisson tail sums. Concretely the sweep below carries
// the survival ladder phi_c(a) = r^c exp(-r a) W_c(a) — the probability of
// sitting non-absorbed at count c when mu = a — across each stretch:
//
//   advance:  phi'_{c+k} += phi_c * pmf_k(x),  x = r * stretch width
//   absorb:   phi_c * P(Pois(x) >= level - c)
//   mu-mass:  phi_c * (a * P(Pois(x) >= m) + (m/r) * P(Pois(x) >= m+1))
//
// Every term is nonnegative, so the recursion is cancellation-free at any
// depth; the only inexactness is the floating point of pmf/tail values.

#include <algorithm>
#include <cmath>
#include <vector>

#include "design.hpp"
#include "llr.hpp"
#include "poisson.hpp"
#include "quad.hpp"
#include "segments.hpp"

namespace maxsprt {

/// Non-absorbed probability mass per event count, positioned at mu = at.
/// Between thresholds this is the full state of the process: inter-arrivals
/// are memoryless, so nothing else about the history matters.
struct SurvivalState {
    double at = 0.0;
    std::vector<double> mass;
};

inline SweepResult sweep_exact(const SegmentPlan& plan, const StartLook& look,
                               double rate) {
    const std::size_t nseg = plan.segments.size();
    SweepResult res;
    res.absorbed.assign(nseg, 0.0);
    res.absorbed_mu.assign(nseg, 0.0);

    SurvivalState st{plan.start, look.atom_mass};
    std::vector<double> next;
    std::vector<double> pmf;
    std::vector<double> qtail;

    for (std::size_t i = 0; i < nseg; ++i) {
        const Segment& seg = plan.segments[i];
        const double x = rate * (seg.hi - seg.lo);
        const std::int64_t lvl = seg.level;
        const std::int64_t khi = poisson_pmf_row(pmf, lvl, x);
        // qtail[m] = P(Pois(x) >= m); one tail evaluation seeds the cascade,
        // the rest is an all-positive suffix sum over the pmf row.
        qtail.assign(static_cast<std::size_t>(lvl + 2), 0.0);
        qtail[static_cast<std::size_t>(lvl + 1)] = poisson_tail_ge(lvl + 1, x);
        for (std::int64_t m = lvl; m >= 1; --m)
            qtail[static_cast<std::size_t>(m)] =
                qtail[static_cast<std::size_t>(m + 1)] + pmf[static_cast<std::size_t>(m)];
        next.assign(static_cast<std::size_t>(lvl), 0.0);

        double in = 0.0, absorbed = 0.0, absorbed_mu = 0.0;
        for (std::int64_t c = 0; c < static_cast<std::int64_t>(st.mass.size()); ++c) {
            const double pc = st.mass[static_cast<std::size_t>(c)];
            if (pc <= 0.0) continue;
            in += pc;
            const std::int64_t m = lvl - c; // arrivals needed to touch the boundary
            const double q_hit = qtail[static_cast<std::size_t>(m)];
            const double q_next = qtail[static_cast<std::size_t>(m + 1)];
            absorbed += pc * q_hit;
            absorbed_mu += pc * (seg.lo * q_hit + (static_cast<double>(m) / rate) * q_next);
            const std::int64_t kmax = std::min<std::int64_t>(m - 1, khi);
            for (std::int64_t k = 0; k <= kmax; ++k)
                next[static_cast<std::size_t>(c + k)] += pc * pmf[static_cast<std::size_t>(k)];
        }
        double out = 0.0;
        for (double& v : next) {
            if (v < 1e-280) v = 0.0; // keep deep recursions out of denormals
            out += v;
        }
        res.absorbed[i] = absorbed;
        res.absorbed_mu[i] = absorbed_mu;
        res.max_defect = std::max(res.max_defect, std::fabs(in - absorbed - out));
        st.mass.swap(next);
        st.at = seg.hi;
    }
    for (double v : st.mass) res.accept_mass += v;
    return res;
}

/// Exact rejection probability, expected time to signal and per-count
/// rejection mass for a design. Alpha when rr = 1, power when rr > 1.
inline EvalReport evaluate(const SequentialDesign& d, const EngineConfig& cfg = {}) {
    d.validate();
    auto boundary = boundary_cache().get(d.cv, d.t_cap);
    const SegmentPlan plan = build_segment_plan(*boundary, d.m_min, d.d_start);
    const StartLook look = start_look(plan, d.rr);

    const bool use_quad =
        cfg.backend == Backend::Quad ||
        (cfg.backend == Backend::Auto && cfg.quad_fallback_depth > 0 &&
         boundary->n_max() > cfg.quad_fallback_depth);
    const SweepResult sw = use_quad ? sweep_quadrature(plan, look, d.rr, cfg)
                                    : sweep_exact(plan, look, d.rr);

    EvalReport rep;
    rep.signal_at_start_mass = look.reject_mass;
    rep.accept_mass = sw.accept_mass;
    rep.mass_defect = sw.max_defect;
    double reject = look.reject_mass;
    double mu_mass = look.reject_mass * plan.start;
    rep.reject_mass_by_count.reserve(plan.segments.size());
    for (std::size_t i = 0; i < plan.segments.size(); ++i) {
        rep.reject_mass_by_count.push_back(
            {plan.segments[i].level, sw.absorbed[i], sw.absorbed_mu[i]});
        reject += sw.absorbed[i];
        mu_mass += sw.absorbed_mu[i];
    }
    rep.reject_prob = std::clamp(reject, 0.0, 1.0);
    if (rep.reject_prob > 0.0) rep.ets_conditional = mu_mass / rep.reject_prob;
    return rep;
}

/// Supremum of attainable alpha for (t_cap, m_min, d_start), taken as the
/// cv -> 0+ limit and evaluated at the configured cv floor.
inline double alpha_max(double t_cap, std::int64_t m_min, double d_start,
                        const EngineConfig& cfg = {}) {
    return evaluate({cfg.cv_floor, t_cap, m_min, d_start, 1.0}, cfg).reject_prob;
}

} // namespace maxsprt
