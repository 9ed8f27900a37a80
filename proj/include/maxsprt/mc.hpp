#pragma once

// Seeded Monte Carlo implementation of the same stopping rule, kept
// deliberately independent of the engine's integration: paths are raw
// exponential inter-arrivals and the decisions compare llr against cv
// directly, never through the inverted boundary.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "design.hpp"
#include "llr.hpp"

namespace maxsprt {

// SplitMix64. Each replication gets its own stream derived from
// (seed, index), so aggregates do not depend on execution order.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline SplitMix64 replication_stream(std::uint64_t seed, std::int64_t rep) {
    return SplitMix64(mix64(seed + 0x9E3779B97F4A7C15ull) ^
                      mix64(static_cast<std::uint64_t>(rep) * 0xD1B54A32D192ED03ull +
                            0x2545F4914F6CDD1Dull));
}

/// One event path in mu-time: exponential inter-arrivals of mean 1/rate.
struct PathSampler {
    SplitMix64 rng;
    double rate;

    double next_gap() { return -std::log1p(-rng.next_double()) / rate; }
};

struct SimConfig {
    SequentialDesign design;
    std::int64_t replications = 1'000'000;
    std::uint64_t seed = 1;
    int histogram_bins = 50;
};

struct HistogramBin {
    double lo = 0.0;
    std::int64_t count = 0;
};

struct SimReport {
    std::int64_t replications = 0;
    std::int64_t signals = 0;
    double reject_rate = 0.0;
    double reject_se = 0.0;
    std::optional<double> ets_mean;
    std::optional<double> ets_se;
    std::vector<HistogramBin> signal_time_histogram;
};

namespace detail {

// Runs one replication; returns the signal time if the path signals.
inline std::optional<double> run_path(const SequentialDesign& d, PathSampler& path) {
    double mu = 0.0;
    std::int64_t count = 0;
    double pending;
    if (d.d_start > 0.0) {
        for (;;) {
            double g = path.next_gap();
            if (mu + g > d.d_start) {
                pending = mu + g;
                break;
            }
            mu += g;
            ++count;
        }
        if (count >= d.m_min && llr(count, d.d_start) >= d.cv) return d.d_start;
    } else {
        pending = path.next_gap();
    }
    for (;;) {
        if (pending > d.t_cap) return std::nullopt;
        ++count;
        if (count >= d.m_min && llr(count, pending) >= d.cv) return pending;
        pending += path.next_gap();
    }
}

} // namespace detail

/// Simulates the stopping rule; deterministic for a given config.
inline SimReport simulate(const SimConfig& cfg) {
    cfg.design.validate();
    if (cfg.replications < 1)
        throw std::domain_error("simulate: need at least one replication");

    SimReport rep;
    rep.replications = cfg.replications;
    rep.signal_time_histogram.resize(static_cast<std::size_t>(cfg.histogram_bins));
    const double span = cfg.design.t_cap - cfg.design.d_start;
    const double bin_w = span / cfg.histogram_bins;
    for (int b = 0; b < cfg.histogram_bins; ++b)
        rep.signal_time_histogram[static_cast<std::size_t>(b)].lo =
            cfg.design.d_start + b * bin_w;

    // Kahan sums keep the means independent of accumulation noise.
    double sum = 0.0, sum_c = 0.0, sumsq = 0.0, sumsq_c = 0.0;
    for (std::int64_t r = 0; r < cfg.replications; ++r) {
        PathSampler path{replication_stream(cfg.seed, r), cfg.design.rr};
        auto hit = detail::run_path(cfg.design, path);
        if (!hit) continue;
        ++rep.signals;
        double t = *hit;
        double y = t - sum_c;
        double s = sum + y;
        sum_c = (s - sum) - y;
        sum = s;
        double y2 = t * t - sumsq_c;
        double s2 = sumsq + y2;
        sumsq_c = (s2 - sumsq) - y2;
        sumsq = s2;
        int b = static_cast<int>((t - cfg.design.d_start) / bin_w);
        if (b >= cfg.histogram_bins) b = cfg.histogram_bins - 1;
        if (b < 0) b = 0;
        ++rep.signal_time_histogram[static_cast<std::size_t>(b)].count;
    }

    const double n = static_cast<double>(cfg.replications);
    rep.reject_rate = static_cast<double>(rep.signals) / n;
    rep.reject_se = std::sqrt(rep.reject_rate * (1.0 - rep.reject_rate) / n);
    if (rep.signals > 0) {
        const double ns = static_cast<double>(rep.signals);
        double mean = sum / ns;
        rep.ets_mean = mean;
        if (rep.signals > 1) {
            double var = (sumsq - ns * mean * mean) / (ns - 1.0);
            rep.ets_se = std::sqrt(std::max(0.0, var) / ns);
        }
    }
    return rep;
}

} // namespace maxsprt
