#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "pdereg/grid.hpp"
#include "pdereg/noise.hpp"
#include "pdereg/sobolev.hpp"

using namespace pdereg;
using Catch::Approx;

TEST_CASE("synthesize: validation, degenerate noise, determinism") {
    auto dom = make_domain(1, 31, Shape::interval);
    GridFunction u = GridFunction::from_function(dom, [](double x, double) { return x * (1 - x); });
    REQUIRE_THROWS_AS(synthesize(u, 0.0, 1), invalid_argument);
    REQUIRE_THROWS_AS(synthesize(u, -0.1, 1), invalid_argument);

    Observation tiny = synthesize(u, 1e-12, 5);
    REQUIRE((tiny.values - u.values).lpNorm<Eigen::Infinity>() <= 1e-9);

    Observation a = synthesize(u, 0.3, 42);
    Observation b = synthesize(u, 0.3, 42);
    REQUIRE((a.values - b.values).norm() == 0.0);
    Observation c = synthesize(u, 0.3, 43);
    REQUIRE((a.values - c.values).norm() > 0.0);
}

TEST_CASE("white-noise law: variance of smooth pairings matches eps^2") {
    auto dom = make_domain(1, 63, Shape::interval);
    SobolevMetric metric(dom, 2);
    GridFunction u = GridFunction::from_function(dom, [](double x, double) { return std::sin(2 * M_PI * x); });
    const double eps = 0.25;
    const int reps = 2000;
    for (int k : {0, 1, 4}) {
        GridFunction ek = metric.basis_vector(k);
        double mean = 0.0, m2 = 0.0;
        for (int r = 0; r < reps; ++r) {
            Observation obs = synthesize(u, eps, 1000 + r);
            const double v = pairing(obs, ek);
            mean += v;
            m2 += v * v;
        }
        mean /= reps;
        const double var = m2 / reps - mean * mean;
        REQUIRE(var == Approx(eps * eps).epsilon(0.10));
    }
}

TEST_CASE("pairing: zero, linearity, unbiasedness") {
    auto dom = make_domain(2, 9, Shape::square);
    GridFunction u = GridFunction::from_function(dom, [](double x, double y) { return x * y; });
    Observation obs = synthesize(u, 0.5, 7);

    REQUIRE(pairing(obs, GridFunction::zero(dom)) == 0.0);

    GridFunction p1 = GridFunction::from_function(dom, [](double x, double) { return x; });
    GridFunction p2 = GridFunction::from_function(dom, [](double, double y) { return y * y; });
    GridFunction combo(dom, Eigen::VectorXd(2.0 * p1.values - 3.0 * p2.values));
    const double lhs = pairing(obs, combo);
    const double rhs = 2.0 * pairing(obs, p1) - 3.0 * pairing(obs, p2);
    REQUIRE(lhs == Approx(rhs).epsilon(1e-12));

    // mean over replicates approaches <u, psi>_h within 3 standard errors
    const double eps = 0.4;
    const int reps = 2000;
    double mean = 0.0, m2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        Observation o = synthesize(u, eps, 5000 + r);
        const double v = pairing(o, p1);
        mean += v;
        m2 += v * v;
    }
    mean /= reps;
    const double se = std::sqrt((m2 / reps - mean * mean) / reps);
    REQUIRE(std::abs(mean - inner_product(u, p1)) <= 3.0 * se);
}

TEST_CASE("white noise is an isometry: orthogonal pairings are uncorrelated") {
    auto dom = make_domain(1, 63, Shape::interval);
    SobolevMetric metric(dom, 2);
    GridFunction u = GridFunction::zero(dom);
    GridFunction e1 = metric.basis_vector(0);
    GridFunction e2 = metric.basis_vector(1);
    const double eps = 1.0;
    const int reps = 5000;
    double s1 = 0.0, s2 = 0.0, s12 = 0.0, q1 = 0.0, q2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        Observation obs = synthesize(u, eps, 9000 + r);
        const double a = pairing(obs, e1), b = pairing(obs, e2);
        s1 += a;
        s2 += b;
        s12 += a * b;
        q1 += a * a;
        q2 += b * b;
    }
    s1 /= reps;
    s2 /= reps;
    const double cov = s12 / reps - s1 * s2;
    const double v1 = q1 / reps - s1 * s1, v2 = q2 / reps - s2 * s2;
    const double se = std::sqrt(v1 * v2 / reps);
    REQUIRE(std::abs(cov) <= 3.0 * se);
}

TEST_CASE("pairing rejects shape mismatch") {
    auto dom = make_domain(1, 31, Shape::interval);
    auto dom2 = make_domain(1, 15, Shape::interval);
    Observation obs = synthesize(GridFunction::zero(dom), 0.1, 1);
    REQUIRE_THROWS_AS(pairing(obs, GridFunction::zero(dom2).values), invalid_argument);
}
