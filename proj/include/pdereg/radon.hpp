#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <memory>
#include <vector>

#include "pdereg/errors.hpp"
#include "pdereg/grid.hpp"
#include "pdereg/noise.hpp"
#include "pdereg/sobolev.hpp"

namespace pdereg {

// Discrete Radon transform on the unit disc. Angles live in (0, pi] with
// doubled quadrature weight: the transform is even under
// (theta, s) -> (theta + pi, -s), so this halves the ray count while keeping
// the L2 norm of the full (0, 2pi] x (-1, 1) sinogram measure.
struct RadonGeometry {
    DomainPtr dom;
    int n_theta = 0;
    int n_s = 0;
    double step = 0.0;  // ray sampling step (<= h/2)

    static RadonGeometry make(DomainPtr disc, int n_theta, int n_s) {
        require(disc && disc->shape() == Shape::disc, "radon: geometry requires a disc domain");
        require(n_theta >= 4 && n_s >= 4, "radon: need n_theta, n_s >= 4");
        RadonGeometry g;
        g.dom = std::move(disc);
        g.n_theta = n_theta;
        g.n_s = n_s;
        g.step = g.dom->h() / 2.0;
        return g;
    }

    int rays() const { return n_theta * n_s; }
    double theta(int t) const { return (t + 1) * M_PI / n_theta; }
    double offset(int j) const { return -1.0 + (j + 0.5) * 2.0 / n_s; }
    // uniform quadrature weight per sinogram entry (doubled angular weight)
    double weight() const { return (2.0 * M_PI / n_theta) * (2.0 / n_s); }

    bool operator==(const RadonGeometry& o) const {
        return dom->same_as(*o.dom) && n_theta == o.n_theta && n_s == o.n_s;
    }
};

struct Sinogram {
    RadonGeometry geom;
    Eigen::VectorXd values;  // index t * n_s + j

    static Sinogram zero(const RadonGeometry& g) { return Sinogram{g, Eigen::VectorXd::Zero(g.rays())}; }
    Eigen::VectorXd weights() const { return Eigen::VectorXd::Constant(values.size(), geom.weight()); }
};

inline double sino_inner(const Sinogram& a, const Sinogram& b) {
    require(a.geom == b.geom, "sinogram: geometry mismatch");
    return a.geom.weight() * a.values.dot(b.values);
}

inline double sino_norm(const Sinogram& a) { return std::sqrt(a.geom.weight()) * a.values.norm(); }

namespace detail {

// Traces the ray (theta_t, s_j) and emits (pixel, coefficient) pairs of the
// composite midpoint rule applied to bilinear interpolation; shared by the
// forward and adjoint paths so the pair is an exact transpose.
template <class Emit>
inline void trace_ray(const RadonGeometry& g, int t, int j, Emit&& emit) {
    const Domain& dom = *g.dom;
    const double h = dom.h();
    const double th = g.theta(t), s = g.offset(j);
    const double cx = std::cos(th), sx = std::sin(th);
    const double half = std::sqrt(std::max(0.0, 1.0 - s * s)) + 2.0 * h;  // margin for interpolation support
    const int steps = std::max(1, static_cast<int>(std::ceil(2.0 * half / g.step)));
    const double dt = 2.0 * half / steps;
    for (int k = 0; k < steps; ++k) {
        const double tau = -half + (k + 0.5) * dt;
        const double px = s * cx - tau * sx;
        const double py = s * sx + tau * cx;
        // fractional interior lattice coordinates: node i sits at -1+(i+1)h
        const double gx = (px + 1.0) / h - 1.0;
        const double gy = (py + 1.0) / h - 1.0;
        const int i0 = static_cast<int>(std::floor(gx));
        const int j0 = static_cast<int>(std::floor(gy));
        const double fx = gx - i0, fy = gy - j0;
        const double w00 = (1.0 - fx) * (1.0 - fy), w10 = fx * (1.0 - fy);
        const double w01 = (1.0 - fx) * fy, w11 = fx * fy;
        const int p00 = dom.interior_index(i0, j0), p10 = dom.interior_index(i0 + 1, j0);
        const int p01 = dom.interior_index(i0, j0 + 1), p11 = dom.interior_index(i0 + 1, j0 + 1);
        if (p00 >= 0) emit(p00, w00 * dt);
        if (p10 >= 0) emit(p10, w10 * dt);
        if (p01 >= 0) emit(p01, w01 * dt);
        if (p11 >= 0) emit(p11, w11 * dt);
    }
}

}  // namespace detail

inline Sinogram radon_forward(const GridFunction& F, const RadonGeometry& g) {
    require(F.domain->same_as(*g.dom), "radon_forward: domain mismatch");
    Sinogram out = Sinogram::zero(g);
    for (int t = 0; t < g.n_theta; ++t)
        for (int j = 0; j < g.n_s; ++j) {
            double acc = 0.0;
            detail::trace_ray(g, t, j, [&](int p, double c) { acc += c * F.values[p]; });
            out.values[t * g.n_s + j] = acc;
        }
    return out;
}

// Exact adjoint of radon_forward with respect to <.,.>_Sigma and <.,.>_h.
inline GridFunction radon_adjoint(const Sinogram& S, const RadonGeometry& g) {
    require(S.geom == g, "radon_adjoint: geometry mismatch");
    const double scale = g.weight() / g.dom->cell_volume();
    Eigen::VectorXd img = Eigen::VectorXd::Zero(g.dom->interior_count());
    for (int t = 0; t < g.n_theta; ++t)
        for (int j = 0; j < g.n_s; ++j) {
            const double v = scale * S.values[t * g.n_s + j];
            if (v == 0.0) continue;
            detail::trace_ray(g, t, j, [&](int p, double c) { img[p] += c * v; });
        }
    return GridFunction(g.dom, std::move(img));
}

// Explicit sparse matrix of the transform (rows = rays); only sensible for
// small pixel counts, used to cross-check the matrix-free kernels.
inline Eigen::SparseMatrix<double> radon_matrix(const RadonGeometry& g, int max_pixels = 2000) {
    require(g.dom->interior_count() <= max_pixels, "radon_matrix: pixel count exceeds materialization threshold");
    std::vector<Eigen::Triplet<double>> trip;
    for (int t = 0; t < g.n_theta; ++t)
        for (int j = 0; j < g.n_s; ++j)
            detail::trace_ray(g, t, j, [&](int p, double c) { trip.emplace_back(t * g.n_s + j, p, c); });
    Eigen::SparseMatrix<double> R(g.rays(), g.dom->interior_count());
    R.setFromTriplets(trip.begin(), trip.end());
    return R;
}

// Number of rays touching each pixel; geometry sanity check.
inline Eigen::VectorXi radon_coverage(const RadonGeometry& g) {
    Eigen::VectorXi hits = Eigen::VectorXi::Zero(g.dom->interior_count());
    for (int t = 0; t < g.n_theta; ++t)
        for (int j = 0; j < g.n_s; ++j) {
            std::vector<char> seen(g.dom->interior_count(), 0);
            detail::trace_ray(g, t, j, [&](int p, double c) {
                if (c > 0.0 && !seen[p]) { seen[p] = 1; hits[p] += 1; }
            });
        }
    return hits;
}

struct RidgeOptions {
    double rel_tol = 1e-8;
    int max_iterations = 4000;
    int power_iterations = 12;  // for the operator-norm estimate in the preconditioner
};

struct RidgeResult {
    GridFunction F;
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

// Closed-form maximizer of the penalized fit for the linear transform:
// solves (R*R + lambda^2 Lambda_alpha) F = R* y by preconditioned CG with
// the preconditioner (sigma I + lambda^2 Lambda_alpha)^{-1}, sigma ~ ||R*R||.
class RidgeSolver {
  public:
    RidgeSolver(RadonGeometry geom, const SobolevMetric& metric, double lambda, RidgeOptions opts = {})
        : geom_(std::move(geom)), metric_(&metric), lambda_(lambda), opts_(opts) {
        require(lambda > 0.0, "ridge: lambda must be > 0");
        require(metric.domain()->same_as(*geom_.dom), "ridge: metric domain mismatch");
        const int m = geom_.dom->interior_count();

        // sigma = largest eigenvalue of R*R, estimated by power iteration
        Eigen::VectorXd v = Eigen::VectorXd::Ones(m);
        v.normalize();
        double sigma = 1.0;
        for (int it = 0; it < opts_.power_iterations; ++it) {
            Eigen::VectorXd w = normal_apply(v, 0.0);
            sigma = v.dot(w);
            const double n = w.norm();
            if (n == 0.0) break;
            v = w / n;
        }
        sigma_ = std::max(sigma, 1e-12);

        Eigen::SparseMatrix<double> I(m, m);
        I.setIdentity();
        Eigen::SparseMatrix<double> P = I + metric.stiffness();
        Eigen::SparseMatrix<double> pen = P;
        for (int r = 1; r < metric.alpha(); ++r) pen = (pen * P).pruned();
        Eigen::SparseMatrix<double> M = (sigma_ * I + lambda_ * lambda_ * pen).pruned();
        precond_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(M);
        if (precond_->info() != Eigen::Success) throw numerical_error("ridge: preconditioner factorization failed");
    }

    const RadonGeometry& geometry() const { return geom_; }
    double lambda() const { return lambda_; }

    RidgeResult solve(const Sinogram& y) const {
        require(y.geom == geom_, "ridge: sinogram geometry mismatch");
        const Eigen::VectorXd b = radon_adjoint(y, geom_).values;
        const double b_norm = b.norm();
        RidgeResult res;
        if (b_norm == 0.0) {
            res.F = GridFunction::zero(geom_.dom);
            res.converged = true;
            return res;
        }
        const double penw = lambda_ * lambda_;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
        Eigen::VectorXd r = b;
        Eigen::VectorXd z = precond_->solve(r);
        Eigen::VectorXd p = z;
        double rz = r.dot(z);
        int it = 0;
        for (; it < opts_.max_iterations; ++it) {
            if (r.norm() / b_norm <= opts_.rel_tol) break;
            const Eigen::VectorXd Mp = normal_apply(p, penw);
            const double alpha = rz / p.dot(Mp);
            x += alpha * p;
            r -= alpha * Mp;
            z = precond_->solve(r);
            const double rz_new = r.dot(z);
            p = z + (rz_new / rz) * p;
            rz = rz_new;
        }
        res.rel_residual = (normal_apply(x, penw) - b).norm() / b_norm;
        res.iterations = it;
        res.converged = res.rel_residual <= 10.0 * opts_.rel_tol;
        if (!res.converged)
            throw numerical_error("ridge: CG exceeded budget (relative residual " +
                                  std::to_string(res.rel_residual) + ")");
        res.F = GridFunction(geom_.dom, std::move(x));
        return res;
    }

  private:
    // (R*R + penw * Lambda_alpha) v
    Eigen::VectorXd normal_apply(const Eigen::VectorXd& v, double penw) const {
        GridFunction F(geom_.dom, v);
        Sinogram s = radon_forward(F, geom_);
        Eigen::VectorXd out = radon_adjoint(s, geom_).values;
        if (penw > 0.0) out += penw * metric_->penalty_apply(F).values;
        return out;
    }

    RadonGeometry geom_;
    const SobolevMetric* metric_;
    double lambda_;
    RidgeOptions opts_;
    double sigma_ = 1.0;
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> precond_;
};

inline GridFunction ridge_solve(const RadonGeometry& geom, const SobolevMetric& metric, const Sinogram& y,
                                double lambda, RidgeOptions opts = {}) {
    return RidgeSolver(geom, metric, lambda, opts).solve(y).F;
}

}  // namespace pdereg
