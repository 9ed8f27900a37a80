#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <maxsprt/engine.hpp>

using namespace maxsprt;

namespace {

// Closed-form Poisson tail, written out independently of the library.
double pois_ge(int m, double x) {
    double term = std::exp(-x);
    double cdf = 0.0;
    for (int k = 0; k < m; ++k) {
        cdf += term;
        term *= x / (k + 1);
    }
    return 1.0 - cdf;
}

EvalReport eval(double cv, double t, std::int64_t m, double d, double rr,
                Backend be = Backend::Auto) {
    EngineConfig cfg;
    cfg.backend = be;
    return evaluate({cv, t, m, d, rr}, cfg);
}

} // namespace

TEST_CASE("single-threshold designs reduce to a Poisson tail") {
    // With cv so small that every threshold clears T, rejection needs exactly
    // M events inside (0, T]: alpha = P(Pois(rr*T) >= M).
    for (double rr : {1.0, 2.0}) {
        EvalReport r = eval(1e-6, 1.0, 4, 0.0, rr);
        CHECK_THAT(r.reject_prob, Catch::Matchers::WithinAbs(pois_ge(4, rr), 1e-12));
    }
    CHECK_THAT(alpha_max(1.0, 4, 0.0),
               Catch::Matchers::WithinAbs(1.0 - std::exp(-1.0) * (1.0 + 1.0 + 0.5 + 1.0 / 6.0),
                                          1e-10));
    CHECK(alpha_max(1.5, 4, 0.0) > 0.05);
    CHECK(alpha_max(10.0, 1, 0.0) > 0.5);
}

TEST_CASE("two-threshold design matches a hand integration") {
    // cv = 3, T = 0.1: tau_1 ~= 0.0187 < T < tau_2, so
    // alpha = P(event1 <= tau_1) + P(event1 > tau_1) * P(two arrivals in the rest)
    const double cv = 3.0, t = 0.1;
    const double tau1 = invert_boundary(1, cv);
    REQUIRE(tau1 < t);
    REQUIRE(invert_boundary(2, cv) > t);
    for (double rr : {1.0, 2.0, 4.0}) {
        const double x1 = rr * tau1, x2 = rr * (t - tau1);
        const double expect = (1.0 - std::exp(-x1)) +
                              std::exp(-x1) * (1.0 - std::exp(-x2) * (1.0 + x2));
        EvalReport r = eval(cv, t, 1, 0.0, rr);
        CHECK_THAT(r.reject_prob, Catch::Matchers::WithinAbs(expect, 1e-12));

        // expected signal time, conditional on signalling
        auto q = [&](int m, double x) { return pois_ge(m, x); };
        double mu_mass = (1.0 / rr) * q(2, x1) +
                         std::exp(-x1) * (tau1 * q(2, x2) + (2.0 / rr) * q(3, x2));
        REQUIRE(r.ets_conditional.has_value());
        CHECK_THAT(*r.ets_conditional,
                   Catch::Matchers::WithinAbs(mu_mass / expect, 1e-11));
    }
}

TEST_CASE("reference alpha anchor") {
    EvalReport r = eval(3.467952, 10.0, 1, 0.0, 1.0);
    CHECK_THAT(r.reject_prob, Catch::Matchers::WithinAbs(0.05, 2e-6));
}

TEST_CASE("reference power and time-to-signal anchors") {
    EvalReport a = eval(3.288216, 20.0, 3, 0.0, 2.0);
    CHECK_THAT(a.reject_prob, Catch::Matchers::WithinAbs(0.936, 1e-3));
    REQUIRE(a.ets_conditional.has_value());
    CHECK_THAT(*a.ets_conditional, Catch::Matchers::WithinAbs(6.62, 0.015));

    EvalReport b = eval(2.087405, 10.0, 1, 6.0, 3.0);
    CHECK_THAT(b.reject_prob, Catch::Matchers::WithinAbs(0.997, 1e-3));
    REQUIRE(b.ets_conditional.has_value());
    // The conditional mean signal time for this delayed-start design is
    // 6.0535, pinned by a 2e6-replication Monte Carlo run (6.0533 +- 0.0002).
    // The reference table prints 6.07 for this cell; see the acceptance
    // suite's table-5 criterion for the full comparison.
    CHECK_THAT(*b.ets_conditional, Catch::Matchers::WithinAbs(6.053499, 1e-5));
}

TEST_CASE("mass accounting closes at every step") {
    for (double cv : {2.0, 3.0, 3.467952}) {
        for (double t : {1.0, 10.0, 50.0}) {
            for (std::int64_t m : {std::int64_t(1), std::int64_t(4)}) {
                for (double d : {0.0, 0.4}) {
                    for (double rr : {1.0, 2.0, 10.0}) {
                        EvalReport r = eval(cv, t, m, d * t, rr);
                        CHECK(r.mass_defect <= 1e-10);
                        CHECK(std::fabs(r.reject_prob + r.accept_mass - 1.0) <= 1e-10);
                        double sum = r.signal_at_start_mass;
                        for (const auto& rm : r.reject_mass_by_count) {
                            CHECK(rm.mass >= 0.0);
                            sum += rm.mass;
                        }
                        CHECK(std::fabs(sum - r.reject_prob) <= 1e-10);
                        if (r.ets_conditional) {
                            CHECK(*r.ets_conditional >= d * t - 1e-9);
                            CHECK(*r.ets_conditional <= t + 1e-9);
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("alpha monotone in cv, T and rr") {
    double prev = 1.0;
    for (double cv : {1.5, 2.0, 2.5, 3.0, 3.5, 4.0}) {
        double a = eval(cv, 5.0, 1, 0.0, 1.0).reject_prob;
        CHECK(a < prev); // strictly decreasing while positive, no delayed start
        prev = a;
    }
    prev = 0.0;
    for (double t : {1.0, 2.0, 5.0, 10.0, 50.0}) {
        double a = eval(3.0, t, 1, 0.0, 1.0).reject_prob;
        CHECK(a >= prev);
        prev = a;
    }
    prev = 0.0;
    for (double rr : {1.0, 1.5, 2.0, 4.0, 10.0}) {
        double p = eval(3.0, 5.0, 2, 0.0, rr).reject_prob;
        CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("power at rr = 1 is alpha") {
    EvalReport a = eval(3.064248, 10.0, 3, 0.0, 1.0);
    EvalReport b = eval(3.064248, 10.0, 3, 0.0, 1.0);
    CHECK(a.reject_prob == b.reject_prob);
    CHECK(std::fabs(a.reject_prob - 0.05) < 2e-6);
}

TEST_CASE("time to signal is pinned to the look when rejection is immediate") {
    // rr = 10 with D = 10: the start look all but surely rejects
    EvalReport r = eval(2.260811, 20.0, 1, 10.0, 10.0);
    CHECK_THAT(r.reject_prob, Catch::Matchers::WithinAbs(1.0, 1e-6));
    REQUIRE(r.ets_conditional.has_value());
    CHECK_THAT(*r.ets_conditional, Catch::Matchers::WithinAbs(10.0, 0.01));
}

TEST_CASE("delayed start degenerates to a single look as D -> T") {
    const double cv = 2.5, t = 8.0, rr = 1.0;
    const double d = t - 1e-6;
    EvalReport r = eval(cv, t, 1, d, rr);
    // rejection set at the look: counts with llr(c, d) >= cv
    std::int64_t thr = 1;
    while (llr(thr, d) < cv) ++thr;
    double expect = pois_ge(static_cast<int>(thr), rr * d);
    CHECK_THAT(r.reject_prob, Catch::Matchers::WithinAbs(expect, 2e-5));
    CHECK(r.signal_at_start_mass > 0.9 * r.reject_prob);
}

TEST_CASE("quadrature backend agrees with the exact recursion") {
    struct Case {
        double cv, t, d, rr;
        std::int64_t m;
    };
    const Case cases[] = {
        {3.467952, 10.0, 0.0, 1.0, 1},
        {3.064248, 10.0, 0.0, 2.0, 3},
        {2.087405, 10.0, 6.0, 3.0, 1},
        {3.288216, 20.0, 0.0, 1.0, 3},
        {2.6, 5.0, 1.0, 4.0, 2},
        {2.0, 2.0, 0.0, 10.0, 1},
    };
    for (const Case& c : cases) {
        EvalReport p = eval(c.cv, c.t, c.m, c.d, c.rr, Backend::Poly);
        EvalReport q = eval(c.cv, c.t, c.m, c.d, c.rr, Backend::Quad);
        CHECK(std::fabs(p.reject_prob - q.reject_prob) <= 1e-8);
        if (p.ets_conditional && q.ets_conditional)
            CHECK(std::fabs(*p.ets_conditional - *q.ets_conditional) <= 1e-6);
        CHECK(std::fabs(p.signal_at_start_mass - q.signal_at_start_mass) <= 1e-10);
    }
}

TEST_CASE("auto backend can divert deep recursions to quadrature") {
    EngineConfig cfg;
    cfg.quad_fallback_depth = 5; // boundary for T=10 runs ~20 deep
    EvalReport q = evaluate({3.467952, 10.0, 1, 0.0, 1.0}, cfg);
    EvalReport p = eval(3.467952, 10.0, 1, 0.0, 1.0, Backend::Poly);
    CHECK(std::fabs(p.reject_prob - q.reject_prob) <= 1e-8);
}

TEST_CASE("quadrature refinement failure is loud") {
    EngineConfig cfg;
    cfg.backend = Backend::Quad;
    cfg.quad_max_refine = 0;
    CHECK_THROWS_AS(evaluate({3.0, 5.0, 1, 0.0, 1.0}, cfg), ConvergenceError);
}

TEST_CASE("degenerate and invalid designs") {
    CHECK_THROWS_AS(eval(3.0, 10.0, 1, 10.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(eval(3.0, 10.0, 1, 12.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(eval(3.0, 10.0, 0, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(eval(3.0, 10.0, 1, 0.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(eval(-1.0, 10.0, 1, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(eval(3.0, -1.0, 1, 0.0, 1.0), std::domain_error);

    // no reachable rejection mass: ETS must be absent, not zero
    EvalReport r = eval(5.0, 1.0, 200, 0.0, 1.0);
    CHECK(r.reject_prob == 0.0);
    CHECK_FALSE(r.ets_conditional.has_value());
}
