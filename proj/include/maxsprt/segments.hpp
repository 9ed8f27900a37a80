#pragma once

// Splits surveillance into stretches between consecutive rejection
// thresholds. The statistic only increases at event arrivals, so within
// (lo, hi] the boundary is crossed exactly when the event count reaches the
// stretch's level: earlier counts arrived above their own thresholds, and
// higher counts cannot be reached without passing through it.

#include <algorithm>
#include <limits>
#include <vector>

#include "design.hpp"
#include "llr.hpp"
#include "poisson.hpp"

namespace maxsprt {

struct Segment {
    double lo = 0.0;
    double hi = 0.0;
    std::int64_t level = 0;
};

struct SegmentPlan {
    double start = 0.0; // mu of the first look (0 when no delay)
    double t_cap = 0.0;
    std::int64_t c_star = 0;      // largest count whose threshold sits below start
    std::int64_t first_level = 0; // smallest count that can ever reject
    std::vector<Segment> segments;

    std::int64_t last_level() const { return segments.back().level; }
};

inline SegmentPlan build_segment_plan(const Boundary& b, std::int64_t m_min,
                                      double d_start) {
    SegmentPlan p;
    p.start = d_start;
    p.t_cap = b.t_cap;
    std::int64_t cs = 0;
    while (cs < b.n_max() && b.tau(cs + 1) < d_start) ++cs;
    p.c_star = cs;
    p.first_level = std::max(m_min, cs + 1);
    double lo = d_start;
    for (std::int64_t lvl = p.first_level;; ++lvl) {
        double tau = lvl <= b.n_max() ? b.tau(lvl)
                                      : std::numeric_limits<double>::infinity();
        p.segments.push_back({lo, std::min(tau, b.t_cap), lvl});
        if (tau >= b.t_cap) break;
        lo = p.segments.back().hi;
    }
    return p;
}

/// Count distribution at the start look. With a delayed start the count at
/// mu = start is Poisson(rate * start); counts at or above first_level
/// reject on the spot, the rest become atoms carried into the recursion.
/// Without a delay the whole unit mass sits at count zero.
struct StartLook {
    std::vector<double> atom_mass; // index = count, size = first_level
    double reject_mass = 0.0;
};

inline StartLook start_look(const SegmentPlan& p, double rate) {
    StartLook s;
    s.atom_mass.assign(static_cast<std::size_t>(p.first_level), 0.0);
    if (p.start == 0.0) {
        s.atom_mass[0] = 1.0;
        return s;
    }
    const double x = rate * p.start;
    for (std::int64_t c = 0; c < p.first_level; ++c)
        s.atom_mass[static_cast<std::size_t>(c)] = poisson_pmf(c, x);
    s.reject_mass = poisson_tail_ge(p.first_level, x);
    return s;
}

/// Common output of the two integration backends: absorbed probability and
/// mu-weighted absorbed mass per stretch, plus what survives to t_cap.
struct SweepResult {
    std::vector<double> absorbed;
    std::vector<double> absorbed_mu;
    double accept_mass = 0.0;
    double max_defect = 0.0;
};

} // namespace maxsprt
