#include "doctest.h"

#include "fvmod/measure.hpp"
#include "oracles.hpp"

#include <cmath>
#include <fstream>

using namespace fvmod;

namespace {

LambdaMeasure uniform_table(double x0 = 1e-6) {
    DensityTable t;
    t.x = {x0, 1.0};
    t.value = {1.0, 1.0};
    return LambdaMeasure::from_table(std::move(t));
}

std::vector<LambdaMeasure> representative_measures() {
    return {
        LambdaMeasure::kingman(1.0),
        LambdaMeasure::kingman(2.0),
        LambdaMeasure::beta(1.1),
        LambdaMeasure::beta(1.5),
        LambdaMeasure::beta(1.9),
        LambdaMeasure::mix(0.5, 1.5),
        uniform_table(),
    };
}

} // namespace

TEST_CASE("kingman atom contributes only to k=2") {
    auto m = LambdaMeasure::kingman(1.0);
    CHECK(lambda_bk(m, 5, 2) == doctest::Approx(1.0));
    CHECK(lambda_bk(m, 5, 3) == 0.0);
    CHECK(lambda_bk(m, 5, 5) == 0.0);
}

TEST_CASE("beta(1.5) lambda_{3,2} matches the closed form 3/4") {
    auto m = LambdaMeasure::beta(1.5);
    // B(0.5,2.5)/B(0.5,1.5) = (3pi/8)/(pi/2) = 3/4
    double closed = lambda_bk(m, 3, 2);
    double quad = lambda_bk_quadrature(m, 3, 2);
    CHECK(closed == doctest::Approx(0.75).epsilon(1e-10));
    CHECK(quad == doctest::Approx(0.75).epsilon(1e-9));
    // independent dense-grid oracle
    CHECK(oracles::beta15_lambda_bk_dense(3, 2) == doctest::Approx(0.75).epsilon(1e-7));
}

TEST_CASE("uniform density table: lambda_{4,4} = 1/3") {
    auto m = uniform_table(1e-8);
    CHECK(lambda_bk(m, 4, 4) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("rate table worked examples") {
    auto k4 = rate_table(LambdaMeasure::kingman(1.0), 4);
    CHECK(k4.lambda_total == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(k4.gamma == doctest::Approx(6.0).epsilon(1e-12));

    auto b3 = rate_table(LambdaMeasure::beta(1.5), 3);
    CHECK(b3.rates[0] == doctest::Approx(0.75).epsilon(1e-10));
    CHECK(b3.rates[1] == doctest::Approx(0.25).epsilon(1e-10));  // mean of Beta(0.5,1.5)
    CHECK(b3.lambda_total == doctest::Approx(2.5).epsilon(1e-10));
    CHECK(b3.gamma == doctest::Approx(2.75).epsilon(1e-10));

    auto k10 = rate_table(LambdaMeasure::kingman(2.0), 10);
    CHECK(k10.lambda_total == doctest::Approx(90.0).epsilon(1e-12));
}

TEST_CASE("monotone consistency recursion lambda_{b,k} = lambda_{b+1,k} + lambda_{b+1,k+1}") {
    for (const auto& m : representative_measures()) {
        for (int b = 2; b < 30; ++b) {
            for (int k = 2; k <= b; ++k) {
                double lhs = lambda_bk(m, b, k);
                double rhs = lambda_bk(m, b + 1, k) + lambda_bk(m, b + 1, k + 1);
                CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, lhs));
            }
        }
    }
}

TEST_CASE("closed form vs generic quadrature for the beta family") {
    for (double beta : {1.1, 1.5, 1.9}) {
        auto m = LambdaMeasure::beta(beta);
        for (int b = 2; b <= 30; ++b) {
            for (int k = 2; k <= b; ++k) {
                double closed = lambda_bk(m, b, k);
                double quad = lambda_bk_quadrature(m, b, k);
                CHECK(std::abs(closed - quad) <= 1e-8 * std::abs(closed));
            }
        }
    }
}

TEST_CASE("rates scale linearly with the measure") {
    auto m = LambdaMeasure::mix(0.5, 1.5);
    auto m2 = m.scaled(2.0);  // power of two: exact in floating point
    for (int b : {2, 5, 17}) {
        for (int k = 2; k <= b; ++k) {
            CHECK(lambda_bk(m2, b, k) == 2.0 * lambda_bk(m, b, k));
        }
        auto t1 = rate_table(m, b);
        auto t2 = rate_table(m2, b);
        CHECK(t2.lambda_total == doctest::Approx(2.0 * t1.lambda_total).epsilon(1e-14));
        CHECK(t2.gamma == doctest::Approx(2.0 * t1.gamma).epsilon(1e-14));
    }
    auto m3 = m.scaled(3.7);
    CHECK(lambda_bk(m3, 7, 3) == doctest::Approx(3.7 * lambda_bk(m, 7, 3)).epsilon(1e-14));
}

TEST_CASE("integrand domination: gamma_b <= (b-1) lambda_b everywhere") {
    for (const auto& m : representative_measures()) {
        for (int b : {2, 3, 8, 21}) {
            auto t = rate_table(m, b);
            CHECK(t.gamma <= (b - 1) * t.lambda_total * (1 + 1e-12));
        }
    }
}

TEST_CASE("pair rates dominate: lambda_{b,k} <= lambda_{b,2} for atom and beta measures") {
    // Holds for the Kingman/beta family; it can fail by a sliver for density
    // tables that mimic the beta=1 boundary, so those stay out of scope here.
    for (const auto& m : {LambdaMeasure::kingman(1.0), LambdaMeasure::beta(1.1),
                          LambdaMeasure::beta(1.5), LambdaMeasure::beta(1.9),
                          LambdaMeasure::mix(0.5, 1.5)}) {
        for (int b : {2, 3, 8, 21}) {
            auto t = rate_table(m, b);
            for (int k = 2; k <= b; ++k) {
                CHECK(t.rates[k - 2] <= t.rates[0] * (1 + 1e-12));
            }
        }
    }
}

TEST_CASE("rate arrays agree with the direct tables") {
    for (const auto& m : representative_measures()) {
        auto a = build_rate_arrays(m, 60);
        for (int b : {2, 3, 10, 37, 60}) {
            auto t = rate_table(m, b);
            CHECK(a.lambda_total[b] == doctest::Approx(t.lambda_total).epsilon(1e-9));
            CHECK(a.gamma[b] == doctest::Approx(t.gamma).epsilon(1e-9));
            CHECK(a.lambda_b2[b] == doctest::Approx(t.rates[0]).epsilon(1e-9));
        }
    }
}

TEST_CASE("condition A diagnostic: kingman closed form") {
    auto m = LambdaMeasure::kingman(1.0);
    int m_max = 100, b_max = 2000;
    auto d = check_condition_A(m, 2.0, m_max, b_max);
    // m * sum_{b=m+1}^{B} 2/(b(b-1)) = 2 - 2m/B exactly
    for (auto [mm, value] : d.values) {
        double expect = 2.0 - 2.0 * mm / b_max;
        CHECK(value == doctest::Approx(expect).epsilon(1e-9));
    }
    CHECK(d.plausibly_bounded);
    CHECK(d.tail_truncated);
}

TEST_CASE("condition A diagnostic: m=2 unrolls to the definition") {
    auto m = LambdaMeasure::beta(1.5);
    auto d = check_condition_A(m, 1.5, 2, 20);
    auto a = build_rate_arrays(m, 20);
    double expect = 0.0;
    for (int b = 3; b <= 20; ++b) expect += 1.0 / a.lambda_total[b];
    expect *= std::pow(2.0, 0.5);
    REQUIRE(d.values.size() == 1);
    CHECK(d.values[0].second == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("condition A diagnostic: beta(1.5) is plausibly bounded") {
    auto d = check_condition_A(LambdaMeasure::beta(1.5), 1.5, 80, 1600);
    CHECK(d.plausibly_bounded);
    // roughly constant: last value within a factor two of the midpoint value
    double mid = d.values[d.values.size() / 2].second;
    double last = d.values.back().second;
    CHECK(last <= 2.0 * mid);
    CHECK(last >= 0.5 * mid);
}

TEST_CASE("condition A rejects bad hypotheses") {
    auto m = LambdaMeasure::kingman(1.0);
    CHECK_THROWS_AS(check_condition_A(m, 1.0, 10, 100), std::invalid_argument);
    CHECK_THROWS_AS(check_condition_A(m, 2.0, 20, 100), std::invalid_argument);  // b_max < 10*m_max
}

TEST_CASE("density bounds: beta(1.5) against A = 1/(Gamma(0.5)Gamma(1.5))") {
    auto m = LambdaMeasure::beta(1.5);
    double A = 1.0 / (std::tgamma(0.5) * std::tgamma(1.5));
    auto r = check_density_bounds(m, 1.5, A, 0.5, 64);
    // ratio is exactly (1-x)^{0.5} <= 1
    CHECK(r.has_density);
    CHECK(r.upper_holds);
    CHECK(!r.lower_holds);
    CHECK(r.max_ratio <= 1.0 + 1e-12);

    double A2 = A * std::sqrt(1.0 - 0.5);
    auto r2 = check_density_bounds(m, 1.5, A2, 0.5, 64);
    CHECK(r2.lower_holds);
}

TEST_CASE("density bounds: atom-only measures fail the lower bound by convention") {
    auto r = check_density_bounds(LambdaMeasure::kingman(1.0), 1.5, 1.0, 0.5, 32);
    CHECK(!r.has_density);
    CHECK(!r.lower_holds);
}

TEST_CASE("measure grammar") {
    auto k = LambdaMeasure::parse("kingman:2.5");
    CHECK(k.kingman_mass() == doctest::Approx(2.5));
    CHECK(k.total_mass() == doctest::Approx(2.5));

    auto b = LambdaMeasure::parse("beta:1.5");
    CHECK(b.kingman_mass() == 0.0);
    CHECK(b.total_mass() == doctest::Approx(1.0));
    CHECK(b.beta_param() == doctest::Approx(1.5));

    auto mx = LambdaMeasure::parse("mix:0.5+beta:1.3");
    CHECK(mx.kingman_mass() == doctest::Approx(0.5));
    CHECK(mx.total_mass() == doctest::Approx(1.5));

    {
        std::ofstream csv("measure_table_test.csv");
        csv << "x,density\n0.1,2\n0.5,1\n1,0\n";
    }
    auto t = LambdaMeasure::parse("table:measure_table_test.csv");
    CHECK(t.density_at(0.3) == doctest::Approx(1.5));
    CHECK(t.density_at(0.05) == 0.0);
    CHECK(t.density_at(0.75) == doctest::Approx(0.5));

    CHECK_THROWS_AS(LambdaMeasure::parse("nope:1"), std::invalid_argument);
    CHECK_THROWS_AS(LambdaMeasure::parse("beta:2.5"), std::invalid_argument);
    CHECK_THROWS_AS(LambdaMeasure::parse("beta:1.0"), std::invalid_argument);
    CHECK_THROWS_AS(LambdaMeasure::parse("kingman:-1"), std::invalid_argument);
    CHECK_THROWS_AS(LambdaMeasure::parse("table:/no/such/file.csv"), std::invalid_argument);
}

TEST_CASE("density table validation") {
    DensityTable bad;
    bad.x = {0.5, 0.2};
    bad.value = {1.0, 1.0};
    CHECK_THROWS_AS(LambdaMeasure::from_table(bad), std::invalid_argument);

    DensityTable neg;
    neg.x = {0.2, 0.5};
    neg.value = {1.0, -1.0};
    CHECK_THROWS_AS(LambdaMeasure::from_table(neg), std::invalid_argument);

    DensityTable out_of_range;
    out_of_range.x = {0.0, 0.5};
    out_of_range.value = {1.0, 1.0};
    CHECK_THROWS_AS(LambdaMeasure::from_table(out_of_range), std::invalid_argument);
}

TEST_CASE("lambda_bk argument validation") {
    auto m = LambdaMeasure::kingman(1.0);
    CHECK_THROWS_AS(lambda_bk(m, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(lambda_bk(m, 5, 6), std::invalid_argument);
    CHECK_THROWS_AS(rate_table(m, 1), std::invalid_argument);
}
