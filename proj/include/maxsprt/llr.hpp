#pragma once

// The Poisson MaxSPRT log likelihood ratio and its inversion into
// event-count rejection thresholds in mu-time (mu = cumulative expected
// events under the null). The statistic is maximized over relative risks
// above one, so it floors at zero whenever the observed count does not
// exceed its expectation.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace maxsprt {

/// Log likelihood ratio for c observed events against mu expected:
/// (mu - c) + c*ln(c/mu) when c > mu, else 0. Evaluating at mu = 0 with
/// c > 0 returns +infinity.
inline double llr(std::int64_t c, double mu) {
    if (c < 0) throw std::domain_error("llr: event count must be nonnegative");
    if (!(mu >= 0.0) || !std::isfinite(mu))
        throw std::domain_error("llr: mu must be finite and nonnegative");
    if (c == 0) return 0.0;
    if (mu == 0.0) return std::numeric_limits<double>::infinity();
    const double cd = static_cast<double>(c);
    if (mu >= cd) return 0.0;
    const double u = (cd - mu) / cd;
    if (u < 0.5) {
        // near the c = mu boundary the direct form cancels badly
        return cd * (-u - std::log1p(-u));
    }
    return (mu - cd) + cd * std::log(cd / mu);
}

/// Solves llr(c, tau) = cv for the unique tau in (0, c). The statistic is
/// strictly decreasing in mu there, from +infinity down to 0, so a root
/// always exists; residual is held to ~1e-12 * max(1, cv).
inline double invert_boundary(std::int64_t c, double cv) {
    if (c < 1) throw std::domain_error("invert_boundary: need at least one event");
    if (!(cv > 0.0) || !std::isfinite(cv))
        throw std::domain_error("invert_boundary: cv must be positive and finite");
    const double cd = static_cast<double>(c);
    // Analytic bracket: at lo the statistic equals cv + lo, and at
    // min(c, e*lo) it has already fallen below cv.
    double lo = cd * std::exp(-(cv + cd) / cd);
    double hi = std::min(cd, lo * 2.7182818284590452);
    for (int i = 0; i < 120; ++i) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (llr(c, mid) > cv ? lo : hi) = mid;
    }
    double tau = 0.5 * (lo + hi);
    // Newton polish; g' = 1 - c/mu is bounded away from zero off the corner.
    for (int i = 0; i < 2; ++i) {
        double gp = 1.0 - cd / tau;
        if (std::fabs(gp) < 1e-8) break;
        double step = (llr(c, tau) - cv) / gp;
        double next = tau - step;
        if (next > 0.0 && next < cd) tau = next;
    }
    return tau;
}

/// Per-event-count rejection thresholds for one critical value, truncated
/// at the surveillance end. tau(n) is the largest mu at which the n-th
/// event still signals; thresholds are strictly increasing in n and the
///list stops at the first n whose threshold reaches t_cap.
struct Boundary {
    double cv = 0.0;
    double t_cap = 0.0;
    std::vector<double> taus; // taus[i] = tau_{i+1}

    std::int64_t n_max() const { return static_cast<std::int64_t>(taus.size()); }
    double tau(std::int64_t n) const { return taus[static_cast<std::size_t>(n - 1)]; }
};

inline Boundary build_boundary(double cv, double t_cap) {
    if (!(t_cap > 0.0) || !std::isfinite(t_cap))
        throw std::domain_error("build_boundary: t_cap must be positive and finite");
    Boundary b;
    b.cv = cv;
    b.t_cap = t_cap;
    for (std::int64_t n = 1;; ++n) {
        double t = invert_boundary(n, cv);
        b.taus.push_back(t);
        if (t >= t_cap) break;
        if (n > 50'000'000)
            throw std::runtime_error("build_boundary: threshold scan runaway");
    }
    return b;
}

// Critical-value searches re-evaluate the same design many times (alpha
// first, then power at the solved cv), so finished boundaries are memoized
// on the exact (cv, t_cap) bit patterns.
class BoundaryCache {
public:
    std::shared_ptr<const Boundary> get(double cv, double t_cap) {
        const Key key{bits(cv), bits(t_cap)};
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = map_.find(key);
            if (it != map_.end()) return it->second;
        }
        auto b = std::make_shared<const Boundary>(build_boundary(cv, t_cap));
        std::lock_guard<std::mutex> lock(mu_);
        if (map_.size() > 512) map_.clear();
        map_.emplace(key, b);
        return b;
    }

private:
    using Key = std::pair<std::uint64_t, std::uint64_t>;
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::uint64_t h = k.first * 0x9E3779B97F4A7C15ull;
            h ^= k.second + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
            return static_cast<std::size_t>(h);
        }
    };
    static std::uint64_t bits(double v) {
        std::uint64_t u;
        static_assert(sizeof(u) == sizeof(v));
        __builtin_memcpy(&u, &v, sizeof(u));
        return u;
    }

    std::mutex mu_;
    std::unordered_map<Key, std::shared_ptr<const Boundary>, KeyHash> map_;
};

inline BoundaryCache& boundary_cache() {
    static BoundaryCache cache;
    return cache;
}

} // namespace maxsprt
