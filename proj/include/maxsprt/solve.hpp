#pragma once

// Root-finding layers over the engine: the critical value attaining a
// target alpha (with conservative/liberal handling where the start-look
// atoms make alpha jump), and the surveillance length T attaining a target
// power.

#include <cmath>
#include <cstdint>
#include <string>

#include "engine.hpp"

namespace maxsprt {

// Published conservative/liberal pairs sit on this grid, one step apart.
inline constexpr double kCvGrid = 1e-6;
inline constexpr double kCvBracketHi = 20.0;

struct CvSolution {
    enum class Status { Exact, Discrete, Unachievable };

    Status status = Status::Exact;
    double cv_cons = 0.0;
    double alpha_cons = 0.0;
    double cv_lib = 0.0;
    double alpha_lib = 0.0;
    double alpha_max = 0.0; // attainable supremum, reported when unachievable
};

inline const char* to_string(CvSolution::Status s) {
    switch (s) {
        case CvSolution::Status::Exact: return "exact";
        case CvSolution::Status::Discrete: return "discrete";
        default: return "unachievable";
    }
}

/// Finds the critical value with alpha(cv) = target. Alpha is
/// non-increasing in cv and continuous when d_start = 0, so bisection
/// lands an exact solution there. With a delayed start alpha can jump at
/// the cv values where a start-look count enters or leaves the rejection
/// set; when the target falls inside a jump the conservative/liberal pair
/// straddling it on the 1e-6 grid is returned instead.
inline CvSolution solve_cv(double target_alpha, double t_cap, std::int64_t m_min,
                           double d_start, const EngineConfig& cfg = {}) {
    if (!(target_alpha > 0.0 && target_alpha < 1.0))
        throw std::domain_error("solve_cv: target alpha must lie in (0, 1)");
    auto alpha_at = [&](double cv) {
        return evaluate({cv, t_cap, m_min, d_start, 1.0}, cfg).reject_prob;
    };

    CvSolution s;
    s.alpha_max = alpha_at(cfg.cv_floor);
    if (s.alpha_max < target_alpha) {
        s.status = CvSolution::Status::Unachievable;
        return s;
    }
    double lo = cfg.cv_floor, hi = kCvBracketHi;
    double a_lo = s.alpha_max;
    if (alpha_at(hi) >= target_alpha)
        throw ConvergenceError("solve_cv: alpha at the cv bracket end still exceeds the target");

    const double width_goal = d_start > 0.0 ? 1e-12 : 1e-8;
    while (hi - lo > width_goal) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double am = alpha_at(mid);
        if (am >= target_alpha) {
            lo = mid;
            a_lo = am;
        } else {
            hi = mid;
        }
    }

    if (a_lo - target_alpha <= 1e-8) {
        s.status = CvSolution::Status::Exact;
        s.cv_cons = s.cv_lib = lo;
        s.alpha_cons = s.alpha_lib = a_lo;
        return s;
    }

    // The bracket collapsed onto a jump of alpha(cv). Snap the pair to the
    // reporting grid: cv_cons is the smallest grid point on the conservative
    // side, cv_lib sits one step below on the liberal side.
    double cons = std::floor(hi / kCvGrid) * kCvGrid;
    int guard = 0;
    while (alpha_at(cons) >= target_alpha) {
        cons += kCvGrid;
        if (++guard > 4)
            throw ConvergenceError("solve_cv: could not settle the conservative grid point");
    }
    guard = 0;
    while (alpha_at(cons - kCvGrid) < target_alpha) {
        cons -= kCvGrid;
        if (++guard > 4)
            throw ConvergenceError("solve_cv: could not settle the conservative grid point");
    }
    s.status = CvSolution::Status::Discrete;
    s.cv_cons = cons;
    s.alpha_cons = alpha_at(cons);
    s.cv_lib = cons - kCvGrid;
    s.alpha_lib = alpha_at(s.cv_lib);
    if (!(s.alpha_cons < target_alpha && s.alpha_lib > target_alpha))
        throw ConvergenceError("solve_cv: discrete pair failed verification");
    return s;
}

struct DesignSolution {
    double t_solved = 0.0;
    double cv_at_t = 0.0;
    double power_attained = 0.0;
    CvSolution cv_solution;
};

/// Smallest t_cap (relative tolerance 1e-4) whose design — critical value
/// re-solved at every trial length — reaches the target power at rr_design.
inline DesignSolution solve_t(double target_power, double rr_design, double target_alpha,
                              std::int64_t m_min, double d_start,
                              const EngineConfig& cfg = {}, double t_ceiling = 1e4) {
    if (!(target_alpha > 0.0 && target_alpha < 1.0))
        throw std::domain_error("solve_t: target alpha must lie in (0, 1)");
    if (!(target_power > 0.0 && target_power < 1.0))
        throw std::domain_error("solve_t: target power must lie in (0, 1)");
    if (target_power <= target_alpha)
        throw std::domain_error("solve_t: target power must exceed target alpha");
    if (!(rr_design > 1.0))
        throw std::domain_error("solve_t: design rr must exceed 1");
    if (!(d_start >= 0.0))
        throw std::domain_error("solve_t: d_start must be nonnegative");

    struct Trial {
        double power = 0.0;
        CvSolution cv;
    };
    auto power_at = [&](double t) -> Trial {
        if (t <= d_start) return {};
        CvSolution s = solve_cv(target_alpha, t, m_min, d_start, cfg);
        if (s.status == CvSolution::Status::Unachievable) return {0.0, s};
        double p = evaluate({s.cv_cons, t, m_min, d_start, rr_design}, cfg).reject_prob;
        return {p, s};
    };

    double lo = d_start;
    double hi = std::max(1.0, d_start + 0.5);
    Trial th = power_at(hi);
    while (th.power < target_power) {
        lo = hi;
        hi = d_start + (hi - d_start) * 2.0;
        if (hi > t_ceiling)
            throw ConvergenceError("solve_t: target power not reached below the t_cap ceiling " +
                                   std::to_string(t_ceiling));
        th = power_at(hi);
    }
    while (hi - lo > 1e-4 * hi) {
        double mid = 0.5 * (lo + hi);
        Trial tm = power_at(mid);
        if (tm.power >= target_power) {
            hi = mid;
            th = tm;
        } else {
            lo = mid;
        }
    }
    return {hi, th.cv.cv_cons, th.power, th.cv};
}

} // namespace maxsprt
