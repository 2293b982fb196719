#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <memory>
#include <mutex>
#include <vector>

#include "pdereg/errors.hpp"
#include "pdereg/grid.hpp"
#include "pdereg/rng.hpp"

namespace pdereg {

struct SobolevMetricOptions {
    // Interior-node cap for the dense eigendecomposition needed on the disc.
    int eig_budget = 4096;
};

// Spectral representation of -Delta_h with zero Dirichlet boundary.
// Interval/square use the closed-form sine basis; the disc uses a dense
// symmetric eigendecomposition, computed lazily on first spectral use (the
// size budget is enforced at construction). Sobolev norms of order s are
//   ||u||_{H^s,h}^2 = sum_k (1+mu_k)^s <u,e_k>_h^2
// and the penalty operator is Lambda_a = (I - Delta_h)^alpha, which for
// integer alpha is also applied as a sparse stencil power.
class SobolevMetric {
  public:
    SobolevMetric(DomainPtr dom, int alpha, SobolevMetricOptions opts = {})
        : dom_(std::move(dom)), alpha_(alpha), opts_(opts) {
        require(dom_ != nullptr, "metric: null domain");
        require(alpha_ >= 1, "metric: alpha must be a positive integer");
        const int n = dom_->n();
        const double h = dom_->h();
        if (dom_->shape() != Shape::disc) {
            mu1d_.resize(n);
            for (int k = 0; k < n; ++k) {
                const double sk = std::sin((k + 1) * M_PI * h / 2.0);
                mu1d_[k] = 4.0 / (h * h) * sk * sk;
            }
            sine_.resize(n, n);
            for (int k = 0; k < n; ++k)
                for (int i = 0; i < n; ++i) sine_(k, i) = std::sqrt(2.0) * std::sin((k + 1) * M_PI * (i + 1) * h);
            modes_.resize(dom_->interior_count());
            if (dom_->dimension() == 1) {
                for (int k = 0; k < n; ++k) modes_[k] = mu1d_[k];
            } else {
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) modes_[k * n + l] = mu1d_[k] + mu1d_[l];
            }
        } else {
            if (dom_->interior_count() > opts_.eig_budget)
                throw capacity_error("metric: disc with " + std::to_string(dom_->interior_count()) +
                                     " interior nodes exceeds the dense eigendecomposition budget of " +
                                     std::to_string(opts_.eig_budget));
            lazy_ = std::make_shared<LazyEig>();
        }
        stiffness_ = build_stiffness(*dom_);
    }

    const DomainPtr& domain() const { return dom_; }
    int alpha() const { return alpha_; }
    int mode_count() const { return dom_->interior_count(); }

    // Eigenvalues of -Delta_h in the coefficient ordering used by to_coeffs
    // (ascending per axis index; globally ascending on the disc).
    const Eigen::VectorXd& eigenvalues() const {
        if (dom_->shape() == Shape::disc) return disc_eig().mu;
        return modes_;
    }

    Eigen::VectorXd to_coeffs(const Eigen::VectorXd& v) const {
        const int n = dom_->n();
        const double vol = dom_->cell_volume();
        if (dom_->shape() == Shape::disc) {
            const auto& e = disc_eig();
            return std::sqrt(vol) * (e.Q.transpose() * v);
        }
        if (dom_->dimension() == 1) return vol * (sine_ * v);
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> U(v.data(), n, n);
        Eigen::MatrixXd C = vol * (sine_ * U * sine_);
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = C;
        return Eigen::Map<const Eigen::VectorXd>(R.data(), n * n);
    }

    Eigen::VectorXd from_coeffs(const Eigen::VectorXd& c) const {
        const int n = dom_->n();
        if (dom_->shape() == Shape::disc) {
            const auto& e = disc_eig();
            return (1.0 / std::sqrt(dom_->cell_volume())) * (e.Q * c);
        }
        if (dom_->dimension() == 1) return sine_ * c;
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> C(c.data(), n, n);
        Eigen::MatrixXd U = sine_ * C * sine_;
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = U;
        return Eigen::Map<const Eigen::VectorXd>(R.data(), n * n);
    }

    GridFunction basis_vector(int k) const {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(mode_count());
        c[k] = 1.0;
        return GridFunction(dom_, from_coeffs(c));
    }

    double norm_sq(const GridFunction& u, double s) const {
        check_order(u, s);
        if (s == 0.0) return dom_->cell_volume() * u.values.squaredNorm();
        if (dom_->shape() == Shape::disc && s == std::round(s) && s > 0.0) {
            // integer order on the disc: quadratic form of the sparse stencil
            // power, no eigendecomposition needed
            return dom_->cell_volume() * u.values.dot(power_apply(u.values, static_cast<int>(s)));
        }
        const Eigen::VectorXd c = to_coeffs(u.values);
        const Eigen::VectorXd& mu = eigenvalues();
        double acc = 0.0;
        for (int k = 0; k < c.size(); ++k) acc += std::pow(1.0 + mu[k], s) * c[k] * c[k];
        return acc;
    }

    double norm(const GridFunction& u, double s) const { return std::sqrt(norm_sq(u, s)); }

    // Lambda_s u = sum_k (1+mu_k)^s <u,e_k>_h e_k.
    GridFunction spectral_apply(const GridFunction& u, double s) const {
        require(u.domain->same_as(*dom_), "metric: domain mismatch");
        if (dom_->shape() == Shape::disc && s == std::round(s) && s >= 0.0)
            return GridFunction(dom_, power_apply(u.values, static_cast<int>(s)));
        Eigen::VectorXd c = to_coeffs(u.values);
        const Eigen::VectorXd& mu = eigenvalues();
        for (int k = 0; k < c.size(); ++k) c[k] *= std::pow(1.0 + mu[k], s);
        return GridFunction(dom_, from_coeffs(c));
    }

    // Lambda_alpha F; the penalty in the estimator objective is
    // lambda^2 <F, Lambda_alpha F>_h.
    GridFunction penalty_apply(const GridFunction& F) const { return spectral_apply(F, alpha_); }

    // Gradient of lambda^2 ||F||^2_{H^alpha,h}: 2 lambda^2 Lambda_alpha F.
    GridFunction penalty_gradient(const GridFunction& F, double lambda) const {
        require(F.zero_boundary(), "penalty_gradient: F must have zero boundary");
        GridFunction g = penalty_apply(F);
        g.values *= 2.0 * lambda * lambda;
        return g;
    }

    // ||u||_{H^{t b1+(1-t)b2}} / (||u||_{H^b1}^t ||u||_{H^b2}^{1-t}); 1 for u=0.
    double interpolation_check(const GridFunction& u, double b1, double b2, double theta) const {
        require(b1 >= 0 && b1 <= alpha_ && b2 >= 0 && b2 <= alpha_, "interpolation_check: orders must lie in [0,alpha]");
        require(theta >= 0.0 && theta <= 1.0, "interpolation_check: theta must lie in [0,1]");
        if (u.values.lpNorm<Eigen::Infinity>() == 0.0) return 1.0;
        const double mid = norm(u, theta * b1 + (1.0 - theta) * b2);
        const double n1 = norm(u, b1), n2 = norm(u, b2);
        return mid / (std::pow(n1, theta) * std::pow(n2, 1.0 - theta));
    }

    const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }

  private:
    struct LazyEig {
        std::once_flag flag;
        Eigen::MatrixXd Q;
        Eigen::VectorXd mu;
    };

    void check_order(const GridFunction& u, double s) const {
        require(u.domain->same_as(*dom_), "metric: domain mismatch");
        require(s >= -2.0 && s <= alpha_, "sobolev_norm: order s outside [-2, alpha]");
        if (s > 0.0) require(u.zero_boundary(), "sobolev_norm: positive order requires zero boundary");
    }

    // y = (I + A)^p v with A = -Delta_h (sparse, zero boundary).
    Eigen::VectorXd power_apply(const Eigen::VectorXd& v, int p) const {
        Eigen::VectorXd y = v;
        for (int r = 0; r < p; ++r) y = y + stiffness_ * y;
        return y;
    }

    static Eigen::SparseMatrix<double> build_stiffness(const Domain& dom) {
        const int m = dom.interior_count();
        const double inv_h2 = 1.0 / (dom.h() * dom.h());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(m) * (dom.degree() + 1));
        for (int i = 0; i < m; ++i) {
            trip.emplace_back(i, i, dom.degree() * inv_h2);
            const auto* nb = dom.neighbors(i);
            for (int a = 0; a < dom.degree(); ++a)
                if (nb[a].is_interior) trip.emplace_back(i, nb[a].index, -inv_h2);
        }
        Eigen::SparseMatrix<double> A(m, m);
        A.setFromTriplets(trip.begin(), trip.end());
        return A;
    }

    const LazyEig& disc_eig() const {
        std::call_once(lazy_->flag, [this] {
            Eigen::MatrixXd dense = Eigen::MatrixXd(stiffness_);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
            if (es.info() != Eigen::Success) throw numerical_error("metric: disc eigendecomposition failed");
            lazy_->Q = es.eigenvectors();
            lazy_->mu = es.eigenvalues();
        });
        return *lazy_;
    }

    DomainPtr dom_;
    int alpha_;
    SobolevMetricOptions opts_;
    Eigen::VectorXd modes_;   // tensor eigenvalues (closed-form shapes)
    Eigen::VectorXd mu1d_;
    Eigen::MatrixXd sine_;    // h-orthonormal sine transform, its own inverse up to h
    Eigen::SparseMatrix<double> stiffness_;
    std::shared_ptr<LazyEig> lazy_;
};

// Random H^alpha-smooth field: spectral coefficients
// scale * (1+mu_k)^{-decay/2} * N(0,1) with a counter-based stream.
inline GridFunction smooth_random(const SobolevMetric& metric, std::uint64_t seed, double scale, double decay) {
    const Eigen::VectorXd& mu = metric.eigenvalues();
    Eigen::VectorXd c(mu.size());
    for (int k = 0; k < mu.size(); ++k)
        c[k] = scale * std::pow(1.0 + mu[k], -decay / 2.0) * rng::normal(seed, static_cast<std::uint64_t>(k));
    return GridFunction(metric.domain(), metric.from_coeffs(c));
}

inline SobolevMetric build_metric(DomainPtr dom, int alpha, SobolevMetricOptions opts = {}) {
    return SobolevMetric(std::move(dom), alpha, opts);
}

}  // namespace pdereg
