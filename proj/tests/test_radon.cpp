#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "pdereg/grid.hpp"
#include "pdereg/radon.hpp"
#include "pdereg/rng.hpp"
#include "pdereg/sobolev.hpp"

using namespace pdereg;
using Catch::Approx;

namespace {
RadonGeometry small_geom(int n = 31, int n_theta = 48, int n_s = 47) {
    return RadonGeometry::make(make_domain(2, n, Shape::disc), n_theta, n_s);
}
}  // namespace

TEST_CASE("radon geometry validation") {
    REQUIRE_THROWS_AS(RadonGeometry::make(make_domain(2, 15, Shape::square), 8, 8), invalid_argument);
    REQUIRE_THROWS_AS(RadonGeometry::make(make_domain(2, 15, Shape::disc), 3, 8), invalid_argument);
    RadonGeometry g = small_geom();
    REQUIRE(g.step <= g.dom->h() / 2.0);
    // total sinogram measure matches (0,2pi] x (-1,1)
    REQUIRE(g.weight() * g.rays() == Approx(4.0 * M_PI));
}

TEST_CASE("radon forward: constant gives chord lengths") {
    RadonGeometry g = small_geom(47, 24, 33);
    GridFunction one = GridFunction::constant(g.dom, 1.0);
    Sinogram s = radon_forward(one, g);
    double max_err = 0.0;
    for (int t = 0; t < g.n_theta; ++t)
        for (int j = 0; j < g.n_s; ++j) {
            const double off = g.offset(j);
            const double chord = 2.0 * std::sqrt(std::max(0.0, 1.0 - off * off));
            max_err = std::max(max_err, std::abs(s.values[t * g.n_s + j] - chord));
        }
    REQUIRE(max_err <= 4.0 * g.dom->h());
}

TEST_CASE("radon forward: zero maps to zero, center bump is angle invariant") {
    RadonGeometry g = small_geom();
    REQUIRE(radon_forward(GridFunction::zero(g.dom), g).values.norm() == 0.0);

    GridFunction bump = GridFunction::from_function(g.dom, [](double x, double y) {
        const double r2 = (x * x + y * y) / 0.16;
        return r2 < 1.0 ? (1.0 - r2) * (1.0 - r2) : 0.0;
    });
    Sinogram s = radon_forward(bump, g);
    // rotational symmetry oracle: compare angle slices at fixed offset
    for (int j : {g.n_s / 2, g.n_s / 3}) {
        double lo = 1e300, hi = -1e300;
        for (int t = 0; t < g.n_theta; ++t) {
            lo = std::min(lo, s.values[t * g.n_s + j]);
            hi = std::max(hi, s.values[t * g.n_s + j]);
        }
        REQUIRE(hi - lo <= 4.0 * g.dom->h());
    }
}

TEST_CASE("radon adjoint: exact transpose and positivity") {
    RadonGeometry g = small_geom(21, 16, 15);
    const int m = g.dom->interior_count();
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd fv(m), sv(g.rays());
        for (int i = 0; i < m; ++i) fv[i] = rng::normal(100 + trial, i);
        for (int r = 0; r < g.rays(); ++r) sv[r] = rng::normal(200 + trial, r);
        GridFunction F(g.dom, fv);
        Sinogram S{g, sv};
        const double lhs = sino_inner(radon_forward(F, g), S);
        GridFunction back = radon_adjoint(S, g);
        const double rhs = inner_product(F, back);
        REQUIRE(lhs == Approx(rhs).epsilon(1e-10));
    }

    REQUIRE(radon_adjoint(Sinogram::zero(g), g).values.norm() == 0.0);
    Sinogram ones{g, Eigen::VectorXd::Ones(g.rays())};
    GridFunction bp = radon_adjoint(ones, g);
    REQUIRE(bp.values.minCoeff() > 0.0);
}

TEST_CASE("radon: matrix-free kernels agree with the materialized matrix") {
    RadonGeometry g = small_geom(15, 12, 11);
    Eigen::SparseMatrix<double> R = radon_matrix(g);
    const int m = g.dom->interior_count();
    Eigen::VectorXd fv(m);
    for (int i = 0; i < m; ++i) fv[i] = rng::normal(7, i);
    GridFunction F(g.dom, fv);
    Sinogram s = radon_forward(F, g);
    REQUIRE((R * fv - s.values).lpNorm<Eigen::Infinity>() <= 1e-13);

    Eigen::VectorXd sv(g.rays());
    for (int r = 0; r < g.rays(); ++r) sv[r] = rng::normal(8, r);
    GridFunction back = radon_adjoint(Sinogram{g, sv}, g);
    const double scale = g.weight() / g.dom->cell_volume();
    REQUIRE((scale * (R.transpose() * sv) - back.values).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("radon geometry covers every pixel") {
    RadonGeometry g = small_geom(31, 48, 47);
    REQUIRE(radon_coverage(g).minCoeff() >= 1);
}

TEST_CASE("ridge solve: zero data, small-lambda consistency, penalty dominance") {
    RadonGeometry g = small_geom(21, 24, 23);
    SobolevMetric metric(g.dom, 2);

    GridFunction zero_hat = ridge_solve(g, metric, Sinogram::zero(g), 0.5);
    REQUIRE(norm_h(zero_hat) == 0.0);

    GridFunction F0 = GridFunction::from_function(g.dom, [](double x, double y) {
        const double t = 1.0 - x * x - y * y;
        return t * t;
    });
    Sinogram y = radon_forward(F0, g);

    GridFunction tiny = ridge_solve(g, metric, y, 1e-6);
    Sinogram fit = radon_forward(tiny, g);
    REQUIRE(sino_norm(Sinogram{g, Eigen::VectorXd(fit.values - y.values)}) <= 1e-3 * sino_norm(y));

    double prev = 1e300;
    for (double lambda : {0.5, 2.0, 8.0, 32.0}) {
        GridFunction F = ridge_solve(g, metric, y, lambda);
        const double cur = metric.norm(F, 2.0);
        REQUIRE(cur <= prev * (1.0 + 1e-9));
        prev = cur;
    }
}

TEST_CASE("ridge solve: maximizer verification against perturbations") {
    RadonGeometry g = small_geom(15, 16, 15);
    SobolevMetric metric(g.dom, 2);
    GridFunction F0 = GridFunction::from_function(g.dom, [](double x, double y) {
        const double t = 1.0 - x * x - y * y;
        return 0.7 * t * t;
    });
    const double lambda = 0.05;
    Sinogram y = radon_forward(F0, g);
    GridFunction Fhat = ridge_solve(g, metric, y, lambda);

    auto objective_at = [&](const GridFunction& F) {
        Sinogram s = radon_forward(F, g);
        return 2.0 * sino_inner(y, s) - sino_inner(s, s) - lambda * lambda * metric.norm_sq(F, 2.0);
    };
    const double at_hat = objective_at(Fhat);
    for (int trial = 0; trial < 10; ++trial) {
        GridFunction dF = smooth_random(metric, 600 + trial, 0.05, 2.0);
        GridFunction Fp(g.dom, Eigen::VectorXd(Fhat.values + dF.values));
        REQUIRE(at_hat >= objective_at(Fp) - 1e-9 * std::abs(at_hat));
    }
}

TEST_CASE("radon map is (1/2,0)-regular: dual-norm Lipschitz bound") {
    RadonGeometry g = small_geom(15, 20, 19);
    SobolevMetric metric(g.dom, 2);
    double c_hat = 0.0;
    for (int trial = 0; trial < 15; ++trial) {
        GridFunction F = smooth_random(metric, 300 + trial, 1.0, 3.0);
        GridFunction H = smooth_random(metric, 400 + trial, 1.0, 3.0);
        Sinogram sF = radon_forward(F, g), sH = radon_forward(H, g);
        Sinogram ds{g, Eigen::VectorXd(sF.values - sH.values)};
        GridFunction dF(g.dom, Eigen::VectorXd(F.values - H.values));
        const double denom = metric.norm(dF, -0.5);
        REQUIRE(denom > 0.0);
        c_hat = std::max(c_hat, sino_norm(ds) / denom);
    }
    REQUIRE(std::isfinite(c_hat));
    REQUIRE(c_hat <= 10.0);
}
