#include "doctest.h"

#include "fvmod/cdi.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace fvmod;

namespace {

LambdaMeasure uniform_table() {
    DensityTable t;
    t.x = {1e-6, 1.0};
    t.value = {1.0, 1.0};
    return LambdaMeasure::from_table(std::move(t));
}

} // namespace

TEST_CASE("psi: kingman closed form and q=0") {
    auto king = LambdaMeasure::kingman(1.0);
    CHECK(psi(king, 2.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(psi(king, 0.0) == 0.0);
    CHECK(psi(LambdaMeasure::beta(1.5), 0.0) == 0.0);
    CHECK(psi(uniform_table(), 0.0) == 0.0);
    CHECK_THROWS_AS(psi(king, -1.0), std::invalid_argument);
}

TEST_CASE("psi: beta(1.5) against the dense-grid oracle") {
    auto m = LambdaMeasure::beta(1.5);
    for (double q : {0.5, 10.0, 300.0}) {
        double dense = oracles::beta15_psi_dense(q);
        CHECK(psi(m, q) == doctest::Approx(dense).epsilon(1e-6));
    }
}

TEST_CASE("psi is convex, nondecreasing, and has the q^2 limit at zero") {
    for (const auto& m : {LambdaMeasure::beta(1.5), LambdaMeasure::mix(0.3, 1.3)}) {
        double prev = 0.0;
        std::vector<double> qs, ps;
        for (int i = 0; i <= 40; ++i) {
            double q = 1e-2 * std::pow(10.0, 4.0 * i / 40.0);
            double p = psi(m, q);
            CHECK(p >= prev);
            prev = p;
            qs.push_back(q);
            ps.push_back(p);
        }
        for (size_t i = 1; i + 1 < qs.size(); ++i) {
            double w = (qs[i] - qs[i - 1]) / (qs[i + 1] - qs[i - 1]);
            double chord = (1 - w) * ps[i - 1] + w * ps[i + 1];
            CHECK(ps[i] <= chord * (1 + 1e-9));
        }
        // psi(q)/q^2 -> Lambda([0,1])/2 from below
        double lim = psi(m, 1e-4) / 1e-8;
        CHECK(lim == doctest::Approx(m.total_mass() / 2.0).epsilon(1e-3));
        for (double q : {0.1, 1.0, 50.0}) {
            CHECK(psi(m, q) <= m.total_mass() * q * q / 2.0 * (1 + 1e-12));
        }
    }
}

TEST_CASE("kingman speed functions are exact: u(t) = v(t) = 2/t") {
    SpeedTable s(LambdaMeasure::kingman(1.0));
    CHECK(s.verdict() == CdiVerdict::comes_down);
    for (int i = 0; i <= 60; ++i) {
        double t = 1e-3 * std::pow(10.0, 3.0 * i / 60.0);
        CHECK(std::abs(s.v_of_t(t) - 2.0 / t) <= 1e-6 * (2.0 / t));
        CHECK(std::abs(s.u_of_t(t) - 2.0 / t) <= 1e-6 * (2.0 / t));
    }
    SpeedTable s2(LambdaMeasure::kingman(2.0));
    CHECK(s2.v_of_t(1.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("proposition bound v(t) >= 2/(Lambda([0,1]) t) on every evaluated point") {
    for (const auto& m : {LambdaMeasure::kingman(1.0), LambdaMeasure::kingman(2.5),
                          LambdaMeasure::beta(1.1), LambdaMeasure::beta(1.5),
                          LambdaMeasure::beta(1.9), LambdaMeasure::mix(0.5, 1.5)}) {
        SpeedTable s(m);
        REQUIRE(s.verdict() == CdiVerdict::comes_down);
        for (int i = 0; i <= 50; ++i) {
            double t = 1e-3 * std::pow(10.0, 4.0 * i / 50.0);
            CHECK(s.v_of_t(t) >= 2.0 / (m.total_mass() * t));
        }
    }
}

TEST_CASE("beta(1.5): v(t) t^{1/(beta-1)} is bounded below by a positive constant") {
    SpeedTable s(LambdaMeasure::beta(1.5));
    double lo = 1e300, hi = 0.0;
    for (int k = 4; k <= 14; ++k) {
        double t = std::ldexp(1.0, -k);
        double scaled = s.v_of_t(t) * t * t;  // 1/(beta-1) = 2
        lo = std::min(lo, scaled);
        hi = std::max(hi, scaled);
        CHECK(scaled > 0.5);
    }
    // log-log slope of v is close to -2: the scaled values stay in a narrow band
    CHECK(hi / lo < 2.0);
}

TEST_CASE("u/v round trip within 1e-4 relative") {
    for (const auto& m : {LambdaMeasure::kingman(1.0), LambdaMeasure::beta(1.5),
                          LambdaMeasure::mix(0.5, 1.5), LambdaMeasure::beta(1.9)}) {
        SpeedTable s(m);
        for (int i = 0; i <= 30; ++i) {
            double t = 1e-3 * std::pow(10.0, 3.0 * i / 30.0);
            double v = s.v_of_t(t);
            CHECK(std::abs(s.u_of_t(v) - t) <= 1e-4 * t);
        }
    }
}

TEST_CASE("v is nonincreasing and u decreasing") {
    SpeedTable s(LambdaMeasure::beta(1.3));
    double prev_v = 1e300;
    for (int i = 0; i <= 40; ++i) {
        double t = 1e-3 * std::pow(10.0, 3.0 * i / 40.0);
        double v = s.v_of_t(t);
        CHECK(v <= prev_v * (1 + 1e-12));
        prev_v = v;
    }
    CHECK(s.u_of_t(0.1) > s.u_of_t(0.2));
}

TEST_CASE("schweinsberg verdicts across the three regimes") {
    auto king = schweinsberg_verdict(LambdaMeasure::kingman(1.0), 2000);
    CHECK(king.verdict == CdiVerdict::comes_down);
    CHECK(king.fitted_exponent == doctest::Approx(2.0).epsilon(0.02));

    auto beta = schweinsberg_verdict(LambdaMeasure::beta(1.5), 2000);
    CHECK(beta.verdict == CdiVerdict::comes_down);
    CHECK(beta.fitted_exponent == doctest::Approx(1.5).epsilon(0.05));

    // Uniform density behaves like the beta=1 boundary out to 1/x0: gamma_n
    // grows like n log n, so the partial sums diverge.
    auto boundary = schweinsberg_verdict(uniform_table(), 2000);
    CHECK(boundary.verdict == CdiVerdict::stays_infinite);

    CHECK_THROWS_AS(schweinsberg_verdict(uniform_table(), 50), std::invalid_argument);
}

TEST_CASE("speed functions refuse measures that stay infinite") {
    SpeedTable s(uniform_table());
    CHECK(s.verdict() == CdiVerdict::stays_infinite);
    CHECK_THROWS_AS(s.u_of_t(0.1), StaysInfiniteError);
    CHECK_THROWS_AS(s.v_of_t(0.1), StaysInfiniteError);
    SpeedTable zero(LambdaMeasure::kingman(0.0));
    CHECK(zero.verdict() == CdiVerdict::stays_infinite);
}

TEST_CASE("partial sums in the verdict report are positive and increasing") {
    auto r = schweinsberg_verdict(LambdaMeasure::beta(1.5), 500);
    REQUIRE(!r.partial_sum_trace.empty());
    double prev = 0.0;
    for (double v : r.partial_sum_trace) {
        CHECK(v > prev);
        prev = v;
    }
    CHECK(r.partial_sum == doctest::Approx(r.partial_sum_trace.back()));
}
