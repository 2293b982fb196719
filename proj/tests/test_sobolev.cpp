#include <catch2/catch_amalgamated.hpp>

#include "pdereg/grid.hpp"
#include "pdereg/rng.hpp"
#include "pdereg/sobolev.hpp"

using namespace pdereg;
using Catch::Approx;

namespace {
GridFunction random_zero_boundary(const DomainPtr& dom, std::uint64_t seed) {
    Eigen::VectorXd v(dom->interior_count());
    for (int i = 0; i < v.size(); ++i) v[i] = rng::normal(seed, i);
    return GridFunction(dom, std::move(v));
}
}  // namespace

TEST_CASE("interval metric matches the dense eigendecomposition") {
    const int n = 7;
    auto dom = make_domain(1, n, Shape::interval);
    SobolevMetric metric(dom, 2);
    const double h = dom->h();
    REQUIRE(metric.eigenvalues()[0] == Approx(4.0 * 64.0 * std::pow(std::sin(M_PI / 16.0), 2)).epsilon(1e-13));

    // oracle: dense eigendecomposition of the tridiagonal stencil matrix
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = 2.0 / (h * h);
        if (i > 0) A(i, i - 1) = -1.0 / (h * h);
        if (i < n - 1) A(i, i + 1) = -1.0 / (h * h);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    for (int k = 0; k < n; ++k) REQUIRE(metric.eigenvalues()[k] == Approx(es.eigenvalues()[k]).epsilon(1e-12));
}

TEST_CASE("square metric: tensor eigenvalue structure") {
    auto dom = make_domain(2, 3, Shape::square);
    SobolevMetric metric(dom, 2);
    const double mu1 = 4.0 / (dom->h() * dom->h()) * std::pow(std::sin(M_PI * dom->h() / 2.0), 2);
    REQUIRE(metric.eigenvalues().minCoeff() == Approx(2.0 * mu1).epsilon(1e-12));
}

TEST_CASE("basis vectors are h-orthonormal and reconstruct") {
    for (auto [d, n, shape] : {std::tuple{1, 9, Shape::interval}, {2, 5, Shape::square}, {2, 9, Shape::disc}}) {
        auto dom = make_domain(d, n, shape);
        SobolevMetric metric(dom, 2);
        for (int k : {0, 1, metric.mode_count() - 1}) {
            GridFunction ek = metric.basis_vector(k);
            REQUIRE(inner_product(ek, ek) == Approx(1.0).epsilon(1e-10));
            GridFunction e0 = metric.basis_vector(0);
            if (k != 0) REQUIRE(std::abs(inner_product(ek, e0)) <= 1e-10);
        }
        GridFunction u = random_zero_boundary(dom, 21);
        Eigen::VectorXd rec = metric.from_coeffs(metric.to_coeffs(u.values));
        REQUIRE((rec - u.values).norm() <= 1e-10 * u.values.norm());
    }
}

TEST_CASE("disc metric enforces the eigendecomposition budget") {
    auto dom = make_domain(2, 63, Shape::disc);
    SobolevMetricOptions opts;
    opts.eig_budget = 100;
    REQUIRE_THROWS_AS(SobolevMetric(dom, 2, opts), capacity_error);
}

TEST_CASE("sobolev norm: single modes and Parseval") {
    auto dom = make_domain(1, 31, Shape::interval);
    const int alpha = 3;
    SobolevMetric metric(dom, alpha);
    const auto& mu = metric.eigenvalues();

    GridFunction e2 = metric.basis_vector(2);
    REQUIRE(metric.norm(e2, alpha) == Approx(std::pow(1.0 + mu[2], alpha / 2.0)).epsilon(1e-12));

    GridFunction u = random_zero_boundary(dom, 3);
    REQUIRE(metric.norm(u, 0.0) == Approx(norm_h(u)).epsilon(1e-10));
    // spectral route agrees with the direct s = 0 shortcut
    Eigen::VectorXd c = metric.to_coeffs(u.values);
    REQUIRE(c.norm() == Approx(norm_h(u)).epsilon(1e-10));

    Eigen::VectorXd mix = Eigen::VectorXd::Zero(metric.mode_count());
    mix[0] = 1.0;
    mix[1] = 1.0;
    GridFunction e12(dom, metric.from_coeffs(mix));
    REQUIRE(metric.norm(e12, 1.0) == Approx(std::sqrt((1.0 + mu[0]) + (1.0 + mu[1]))).epsilon(1e-12));
}

TEST_CASE("sobolev norm is monotone in the order") {
    auto dom = make_domain(2, 9, Shape::square);
    SobolevMetric metric(dom, 4);
    GridFunction u = random_zero_boundary(dom, 11);
    double prev = metric.norm(u, -2.0);
    for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0}) {
        const double cur = metric.norm(u, s);
        REQUIRE(cur >= prev * (1.0 - 1e-12));
        prev = cur;
    }
}

TEST_CASE("sobolev norm input validation") {
    auto dom = make_domain(1, 15, Shape::interval);
    SobolevMetric metric(dom, 2);
    GridFunction u = random_zero_boundary(dom, 4);
    REQUIRE_THROWS_AS(metric.norm(u, 2.5), invalid_argument);
    REQUIRE_THROWS_AS(metric.norm(u, -2.5), invalid_argument);
    GridFunction with_trace = u;
    with_trace.with_constant_trace(1.0);
    REQUIRE_THROWS_AS(metric.norm(with_trace, 1.0), invalid_argument);
    REQUIRE_NOTHROW(metric.norm(with_trace, -1.0));
}

TEST_CASE("disc norms: sparse integer route matches the spectral route") {
    auto dom = make_domain(2, 9, Shape::disc);
    SobolevMetric metric(dom, 3);
    GridFunction u = random_zero_boundary(dom, 17);
    const double sparse = metric.norm(u, 2.0);
    // spectral route via coefficients
    Eigen::VectorXd c = metric.to_coeffs(u.values);
    double acc = 0.0;
    for (int k = 0; k < c.size(); ++k) acc += std::pow(1.0 + metric.eigenvalues()[k], 2.0) * c[k] * c[k];
    REQUIRE(sparse == Approx(std::sqrt(acc)).epsilon(1e-10));
}

TEST_CASE("penalty gradient: diagonal action and finite differences") {
    auto dom = make_domain(1, 23, Shape::interval);
    const int alpha = 2;
    SobolevMetric metric(dom, alpha);
    const double lambda = 0.3;

    GridFunction zero = GridFunction::zero(dom);
    REQUIRE(norm_h(metric.penalty_gradient(zero, lambda)) == 0.0);

    GridFunction e1 = metric.basis_vector(1);
    GridFunction g = metric.penalty_gradient(e1, lambda);
    const double factor = 2.0 * lambda * lambda * std::pow(1.0 + metric.eigenvalues()[1], alpha);
    REQUIRE((g.values - factor * e1.values).lpNorm<Eigen::Infinity>() <= 1e-10 * factor);

    // oracle: central difference of lambda^2 ||F + t dF||^2_{H^alpha}
    for (int trial = 0; trial < 20; ++trial) {
        GridFunction F = random_zero_boundary(dom, 100 + trial);
        GridFunction dF = random_zero_boundary(dom, 200 + trial);
        const double t = 1e-6;
        auto pen = [&](double tt) {
            GridFunction Ft(dom, Eigen::VectorXd(F.values + tt * dF.values));
            return lambda * lambda * metric.norm_sq(Ft, alpha);
        };
        const double fd = (pen(t) - pen(-t)) / (2.0 * t);
        const double pairing = inner_product(metric.penalty_gradient(F, lambda), dF);
        REQUIRE(pairing == Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("interpolation inequality ratio") {
    auto dom = make_domain(1, 31, Shape::interval);
    SobolevMetric metric(dom, 4);

    GridFunction e3 = metric.basis_vector(3);
    REQUIRE(metric.interpolation_check(e3, 1.0, 3.0, 0.25) == Approx(1.0).epsilon(1e-12));

    Eigen::VectorXd mix = Eigen::VectorXd::Zero(metric.mode_count());
    mix[0] = 1.0;
    mix[4] = 1.0;
    GridFunction e15(dom, metric.from_coeffs(mix));
    REQUIRE(metric.interpolation_check(e15, 0.0, 2.0, 0.5) <= 1.0 + 1e-10);

    REQUIRE(metric.interpolation_check(GridFunction::zero(dom), 0.0, 2.0, 0.5) == 1.0);

    for (int trial = 0; trial < 100; ++trial) {
        GridFunction u = random_zero_boundary(dom, 300 + trial);
        const double b1 = 4.0 * rng::uniform01(400, trial);
        const double b2 = 4.0 * rng::uniform01(401, trial);
        const double th = rng::uniform01(402, trial);
        REQUIRE(metric.interpolation_check(u, b1, b2, th) <= 1.0 + 1e-10);
    }
}

TEST_CASE("dual norm at s=-kappa attains its supremum at the spectral maximizer") {
    auto dom = make_domain(1, 19, Shape::interval);
    SobolevMetric metric(dom, 2);
    GridFunction u = random_zero_boundary(dom, 5);
    for (double kappa : {1.0, 2.0}) {
        const double dual = metric.norm(u, -kappa);
        GridFunction vstar = metric.spectral_apply(u, -kappa);
        const double at_vstar = inner_product(u, vstar) / metric.norm(vstar, kappa);
        REQUIRE(at_vstar == Approx(dual).epsilon(1e-10));
        for (int trial = 0; trial < 25; ++trial) {
            GridFunction v = random_zero_boundary(dom, 600 + trial);
            REQUIRE(inner_product(u, v) / metric.norm(v, kappa) <= dual * (1.0 + 1e-10));
        }
    }
}

TEST_CASE("smooth_random is deterministic and zero-boundary") {
    auto dom = make_domain(1, 15, Shape::interval);
    SobolevMetric metric(dom, 3);
    GridFunction a = smooth_random(metric, 42, 1.0, 3.0);
    GridFunction b = smooth_random(metric, 42, 1.0, 3.0);
    REQUIRE((a.values - b.values).norm() == 0.0);
    REQUIRE(a.zero_boundary());
}
