#include <catch2/catch_amalgamated.hpp>

#include "pdereg/grid.hpp"
#include "pdereg/rng.hpp"

using namespace pdereg;
using Catch::Approx;

TEST_CASE("interval domain: uniform lattice") {
    auto dom = make_domain(1, 7, Shape::interval);
    REQUIRE(dom->interior_count() == 7);
    REQUIRE(dom->boundary_count() == 2);
    for (int k = 0; k < 7; ++k) REQUIRE(dom->coord(k)[0] == Approx((k + 1) / 8.0));
}

TEST_CASE("square domain: tensor lattice") {
    auto dom = make_domain(2, 3, Shape::square);
    REQUIRE(dom->interior_count() == 9);
    REQUIRE(dom->h() == Approx(0.25));
    // frame of boundary nodes, no corners (not stencil-reachable)
    REQUIRE(dom->boundary_count() == 12);
}

TEST_CASE("disc domain: mask area converges to pi") {
    // oracle: direct enumeration of lattice points inside the unit disc
    for (int n : {31, 63}) {
        auto dom = make_domain(2, n, Shape::disc);
        const double h = 2.0 / (n + 1);
        int count = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double x = -1.0 + (i + 1) * h, y = -1.0 + (j + 1) * h;
                if (x * x + y * y < 1.0) ++count;
            }
        REQUIRE(dom->interior_count() == count);
        REQUIRE(std::abs(count * h * h - M_PI) <= 8.0 * h);
    }
}

TEST_CASE("disc domain: stencil closure and symmetry") {
    auto dom = make_domain(2, 15, Shape::disc);
    for (int i = 0; i < dom->interior_count(); ++i) {
        const auto* nb = dom->neighbors(i);
        for (int a = 0; a < dom->degree(); ++a) {
            if (nb[a].is_interior) {
                REQUIRE(nb[a].index >= 0);
                REQUIRE(nb[a].index < dom->interior_count());
            } else {
                REQUIRE(nb[a].index < dom->boundary_count());
            }
        }
    }
}

TEST_CASE("make_domain rejects bad arguments") {
    REQUIRE_THROWS_AS(make_domain(1, 2, Shape::interval), invalid_argument);
    REQUIRE_THROWS_AS(make_domain(2, 7, Shape::interval), invalid_argument);
    REQUIRE_THROWS_AS(make_domain(1, 7, Shape::square), invalid_argument);
}

TEST_CASE("inner product: cell volumes and orthogonality") {
    auto dom = make_domain(1, 7, Shape::interval);
    GridFunction one = GridFunction::constant(dom, 1.0);
    REQUIRE(inner_product(one, one) == Approx(0.875));

    // first two discrete sine eigenvectors, h-normalized
    const double h = dom->h();
    auto e1 = GridFunction::from_function(dom, [&](double x, double) { return std::sqrt(2.0) * std::sin(M_PI * x); });
    auto e2 = GridFunction::from_function(dom, [&](double x, double) { return std::sqrt(2.0) * std::sin(2 * M_PI * x); });
    REQUIRE(inner_product(e1, e1) == Approx(1.0));
    REQUIRE(inner_product(e1, e2) == Approx(0.0).margin(1e-14));
    (void)h;
}

TEST_CASE("inner product: Riemann sum refines to the integral") {
    // oracle: the quadrature value approaches int_0^1 x^2 dx = 1/3 under
    // refinement. u = x does not vanish at x = 1, so the interior-node sum
    // misses a boundary half cell and the gap is h/2 exactly: 1/512 at
    // n = 255, below 1e-3 from n = 511 on.
    double prev_gap = 1.0;
    for (int n : {127, 255, 511}) {
        auto dom = make_domain(1, n, Shape::interval);
        auto u = GridFunction::from_function(dom, [](double x, double) { return x; });
        const double gap = std::abs(inner_product(u, u) - 1.0 / 3.0);
        REQUIRE(gap < prev_gap);
        REQUIRE(gap == Approx(dom->h() / 2.0).epsilon(1e-2));
        prev_gap = gap;
    }
    REQUIRE(prev_gap <= 1e-3);
}

TEST_CASE("inner product rejects domain mismatch") {
    auto a = make_domain(1, 7, Shape::interval);
    auto b = make_domain(1, 9, Shape::interval);
    REQUIRE_THROWS_AS(inner_product(GridFunction::zero(a), GridFunction::zero(b)), invalid_argument);
}

TEST_CASE("laplacian: affine functions with matching trace are harmonic") {
    auto dom = make_domain(1, 31, Shape::interval);
    auto u = GridFunction::from_function(dom, [](double x, double) { return 2.0 + 3.0 * x; });
    u.with_trace_function([](double x, double) { return 2.0 + 3.0 * x; });
    GridFunction lap = laplacian_apply(u);
    REQUIRE(lap.values.lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("laplacian: sine eigenvectors") {
    // oracle: dense symmetric eigendecomposition of the 1D stencil matrix
    const int n = 15;
    auto dom = make_domain(1, n, Shape::interval);
    const double h = dom->h();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = 2.0 / (h * h);
        if (i > 0) A(i, i - 1) = -1.0 / (h * h);
        if (i < n - 1) A(i, i + 1) = -1.0 / (h * h);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    for (int k : {0, 3, n - 1}) {
        const double mu_formula = 4.0 / (h * h) * std::pow(std::sin((k + 1) * M_PI * h / 2.0), 2);
        REQUIRE(es.eigenvalues()[k] == Approx(mu_formula).epsilon(1e-12));
        auto ek = GridFunction::from_function(
            dom, [&](double x, double) { return std::sqrt(2.0) * std::sin((k + 1) * M_PI * x); });
        GridFunction lap = laplacian_apply(ek);
        REQUIRE((lap.values + mu_formula * ek.values).lpNorm<Eigen::Infinity>() <= 1e-9 * mu_formula);
    }
}

TEST_CASE("laplacian: quadratic away from the boundary") {
    auto dom = make_domain(1, 31, Shape::interval);
    auto u = GridFunction::from_function(dom, [](double x, double) { return x * x; });
    GridFunction lap = laplacian_apply(u);  // zero extension
    for (int i = 1; i < dom->interior_count() - 1; ++i) REQUIRE(lap.values[i] == Approx(2.0).epsilon(1e-10));
}

TEST_CASE("laplacian is self-adjoint and negative definite on zero-boundary functions") {
    for (auto shape : {Shape::square, Shape::disc}) {
        auto dom = make_domain(2, 11, shape);
        Eigen::VectorXd a(dom->interior_count()), b(dom->interior_count());
        for (int i = 0; i < a.size(); ++i) {
            a[i] = rng::normal(7, i);
            b[i] = rng::normal(8, i);
        }
        GridFunction u(dom, a), v(dom, b);
        const double lhs = inner_product(laplacian_apply(u), v);
        const double rhs = inner_product(u, laplacian_apply(v));
        REQUIRE(lhs == Approx(rhs).epsilon(1e-10));
        REQUIRE(inner_product(laplacian_apply(u), u) < 0.0);
    }
}

TEST_CASE("ck_norm: constants and linear functions") {
    auto dom = make_domain(1, 63, Shape::interval);
    auto c = GridFunction::constant(dom, 2.5);
    REQUIRE(ck_norm(c, 1) == Approx(2.5));
    auto lin = GridFunction::from_function(dom, [](double x, double) { return 3.0 * x; });
    const double expect = lin.values.lpNorm<Eigen::Infinity>() + 3.0;
    REQUIRE(ck_norm(lin, 1) == Approx(expect).epsilon(1e-9));
}
