#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <maxsprt/llr.hpp>

using namespace maxsprt;

TEST_CASE("llr floors at zero when the count does not exceed its expectation") {
    CHECK(llr(3, 3.0) == 0.0);
    CHECK(llr(2, 5.0) == 0.0);
    CHECK(llr(0, 0.0) == 0.0);
    CHECK(llr(0, 7.5) == 0.0);
}

TEST_CASE("llr direct evaluation") {
    // (0.01 - 1) + 1*ln(1/0.01) = -0.99 + ln(100)
    CHECK_THAT(llr(1, 0.01),
               Catch::Matchers::WithinAbs(-0.99 + std::log(100.0), 1e-12));
    CHECK_THAT(llr(4, 1.0),
               Catch::Matchers::WithinAbs(-3.0 + 4.0 * std::log(4.0), 1e-12));
    CHECK_THAT(llr(5, 1.0),
               Catch::Matchers::WithinAbs(-4.0 + 5.0 * std::log(5.0), 1e-12));
}

TEST_CASE("llr edge and error handling") {
    CHECK(std::isinf(llr(1, 0.0)));
    CHECK(std::isinf(llr(42, 0.0)));
    CHECK_THROWS_AS(llr(-1, 1.0), std::domain_error);
    CHECK_THROWS_AS(llr(1, -0.5), std::domain_error);
    CHECK_THROWS_AS(llr(1, std::numeric_limits<double>::infinity()), std::domain_error);
}

TEST_CASE("llr strictly decreasing in mu below the count") {
    std::mt19937_64 rng(991);
    std::uniform_int_distribution<std::int64_t> cd(1, 1000);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        std::int64_t c = cd(rng);
        double u1 = ud(rng), u2 = ud(rng);
        double m1 = c * std::min(u1, u2), m2 = c * std::max(u1, u2);
        if (m1 <= 0.0 || m2 >= c || m2 - m1 < 1e-12 * c) continue;
        CHECK(llr(c, m1) > llr(c, m2));
    }
}

TEST_CASE("invert_boundary hits the requested level") {
    const double cv = 2.853937;
    double tau = invert_boundary(1, cv);
    CHECK(tau > 0.021);
    CHECK(tau < 0.022);
    CHECK(std::fabs(llr(1, tau) - cv) <= 1e-12 * std::max(1.0, cv));

    // llr(4, 1) = 2.545 < cv <= llr(5, 1) = 4.047
    CHECK(invert_boundary(4, cv) < 1.0);
    CHECK(invert_boundary(5, cv) > 1.0);

    // cv -> 0+ pushes the root toward the count itself
    CHECK(invert_boundary(5, 1e-9) > 4.999);

    CHECK_THROWS_AS(invert_boundary(0, 1.0), std::domain_error);
    CHECK_THROWS_AS(invert_boundary(3, 0.0), std::domain_error);
    CHECK_THROWS_AS(invert_boundary(3, -1.0), std::domain_error);
}

TEST_CASE("invert_boundary residuals stay within tolerance across scales") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::int64_t> cd(1, 2000);
    std::uniform_real_distribution<double> cvd(1e-6, 12.0);
    for (int i = 0; i < 500; ++i) {
        std::int64_t c = cd(rng);
        double cv = cvd(rng);
        double tau = invert_boundary(c, cv);
        REQUIRE(tau > 0.0);
        REQUIRE(tau < static_cast<double>(c));
        CHECK(std::fabs(llr(c, tau) - cv) <= 1e-12 * std::max(1.0, cv));
    }
}

TEST_CASE("invert_boundary round-trips llr") {
    std::mt19937_64 rng(5150);
    std::uniform_int_distribution<std::int64_t> cd(1, 500);
    std::uniform_real_distribution<double> ud(1e-6, 1.0 - 1e-6);
    for (int i = 0; i < 1000; ++i) {
        std::int64_t c = cd(rng);
        double tau = c * ud(rng);
        double cv = llr(c, tau);
        if (cv < 1e-12) continue;
        double back = invert_boundary(c, cv);
        CHECK(std::fabs(back - tau) <= 1e-10 * std::max(1.0, tau));
    }
}

TEST_CASE("build_boundary truncates at the surveillance end") {
    Boundary b = build_boundary(2.853937, 1.0);
    CHECK(b.n_max() == 5);
    for (std::int64_t n = 1; n <= b.n_max(); ++n) {
        CHECK(b.tau(n) > 0.0);
        CHECK(b.tau(n) < static_cast<double>(n));
        if (n > 1) CHECK(b.tau(n) > b.tau(n - 1));
        if (n < b.n_max()) CHECK(b.tau(n) < b.t_cap);
    }
    CHECK(b.tau(b.n_max()) >= b.t_cap);

    CHECK(build_boundary(3.0, 1e-9).n_max() == 1);
}

TEST_CASE("build_boundary n_max matches a direct llr scan") {
    for (double cv : {1.7, 2.853937, 3.467952, 4.3}) {
        for (double t : {1.0, 10.0, 100.0}) {
            Boundary b = build_boundary(cv, t);
            std::int64_t expect = 1;
            while (llr(expect, t) < cv) ++expect; // first count whose threshold clears t
            CHECK(b.n_max() == expect);
        }
    }
}

TEST_CASE("decision consistency: llr >= cv iff mu <= tau") {
    std::mt19937_64 rng(77);
    const double cv = 3.1;
    const double t_cap = 20.0;
    Boundary b = build_boundary(cv, t_cap);
    std::uniform_int_distribution<std::int64_t> cd(1, b.n_max());
    std::uniform_real_distribution<double> md(1e-9, t_cap);
    for (int i = 0; i < 2000; ++i) {
        std::int64_t c = cd(rng);
        double mu = md(rng);
        double v = llr(c, mu);
        if (std::fabs(v - cv) < 1e-9) continue; // skip the knife edge
        CHECK((v >= cv) == (mu <= b.tau(c)));
    }
}

TEST_CASE("boundary cache returns identical thresholds") {
    auto a = boundary_cache().get(3.467952, 10.0);
    auto b = boundary_cache().get(3.467952, 10.0);
    CHECK(a.get() == b.get());
    CHECK(a->n_max() == build_boundary(3.467952, 10.0).n_max());
}
