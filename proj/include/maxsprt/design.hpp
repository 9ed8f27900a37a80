#pragma once

// Core value types shared across the engine, the solvers and the CLI.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace maxsprt {

/// An iterative search failed to reach its tolerance. Raised instead of
/// returning a silently approximate answer.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Backend { Poly, Quad, Auto };

inline const char* to_string(Backend b) {
    switch (b) {
        case Backend::Poly: return "poly";
        case Backend::Quad: return "quad";
        default: return "auto";
    }
}

struct EngineConfig {
    Backend backend = Backend::Auto;
    // Auto uses the exact piecewise-polynomial recursion at every depth; the
    // shifted-basis form has no cancellation, so the quadrature route is kept
    // as an independent cross-check rather than a fallback. Set a positive
    // depth to divert recursions deeper than n_max thresholds to quadrature.
    std::int64_t quad_fallback_depth = 0;
    int quad_order = 12;        // Gauss-Legendre points per cell
    double quad_h0 = 0.5;       // initial cell width
    double quad_tol = 1e-9;     // refine until reject_prob moves less than this
    int quad_max_refine = 7;
    double cv_floor = 1e-6;     // stand-in for cv -> 0+ when probing attainable alpha
};

/// One surveillance plan: critical value, length of surveillance T in
/// mu-time, minimum events to signal M, delayed start D, and the relative
/// risk the event stream actually follows (1 = null).
struct SequentialDesign {
    double cv = 0.0;
    double t_cap = 0.0;
    std::int64_t m_min = 1;
    double d_start = 0.0;
    double rr = 1.0;

    void validate() const {
        if (!(cv > 0.0) || !std::isfinite(cv))
            throw std::domain_error("design: cv must be positive and finite");
        if (!(t_cap > 0.0) || !std::isfinite(t_cap))
            throw std::domain_error("design: t_cap must be positive and finite");
        if (m_min < 1)
            throw std::domain_error("design: m_min must be at least 1");
        if (!(d_start >= 0.0) || !std::isfinite(d_start))
            throw std::domain_error("design: d_start must be finite and nonnegative");
        if (d_start >= t_cap)
            throw std::domain_error(
                "design: d_start must be below t_cap (no sequential analysis remains)");
        if (!(rr >= 1.0) || !std::isfinite(rr))
            throw std::domain_error("design: rr must be finite and at least 1");
    }
};

/// Probability of first signalling at the n-th event, with the mu-weighted
/// mass that feeds the expected time to signal.
struct RejectAtCount {
    std::int64_t count = 0;
    double mass = 0.0;
    double mu_mass = 0.0;
};

/// Exact operating characteristics of a design: rejection probability
/// (alpha under rr = 1, power otherwise), expected mu at signal conditional
/// on signalling, and where the rejection mass sits.
struct EvalReport {
    double reject_prob = 0.0;
    std::optional<double> ets_conditional;
    std::vector<RejectAtCount> reject_mass_by_count;
    double signal_at_start_mass = 0.0;
    double accept_mass = 0.0; // survives to t_cap, null accepted
    double mass_defect = 0.0; // worst per-step accounting defect
};

} // namespace maxsprt
