#pragma once

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <string>
#include <vector>

#include "pdereg/errors.hpp"
#include "pdereg/grid.hpp"

namespace pdereg {

enum class PdeKind { divergence, schrodinger };

inline std::string pde_kind_name(PdeKind k) { return k == PdeKind::divergence ? "divergence" : "schrodinger"; }

// (kappa, gamma) regularity metadata of the forward map; values from the
// modulus-of-continuity analysis of each kind.
struct RegularityMeta {
    double kappa;
    double gamma;
};

inline RegularityMeta regularity_of(PdeKind k) {
    return k == PdeKind::divergence ? RegularityMeta{1.0, 4.0} : RegularityMeta{2.0, 4.0};
}

struct SolverOptions {
    double rel_tol = 1e-10;        // relative residual contract for every solve
    int direct_size_limit = 40000; // above this, preconditioned CG instead of LDLT
    int cg_max_iterations = 20000;
};

// The discrete elliptic operator L_f for a fixed coefficient f, together
// with a reusable factorization of A = -L_f (SPD). Divergence kind uses the
// flux stencil with arithmetic face averages; the coefficient's boundary
// values default to 1 when no trace is attached. Schrodinger kind is
// A = -Delta_h + 2 diag(f).
class PdeOperator {
  public:
    PdeOperator(PdeKind kind, GridFunction f, SolverOptions opts = {})
        : kind_(kind), f_(std::move(f)), opts_(opts) {
        const Domain& dom = *f_.domain;
        const int m = dom.interior_count();
        const double inv_h2 = 1.0 / (dom.h() * dom.h());
        if (kind_ == PdeKind::divergence) {
            double fmin = f_.values.minCoeff();
            if (f_.trace) fmin = std::min(fmin, f_.trace->minCoeff());
            else fmin = std::min(fmin, 1.0);
            require(fmin > 0.0, "divergence operator: coefficient must be positive");
        } else {
            require(f_.values.minCoeff() >= 0.0, "schrodinger operator: coefficient must be nonnegative");
        }

        std::vector<Eigen::Triplet<double>> ta, tb;
        ta.reserve(static_cast<std::size_t>(m) * (dom.degree() + 1));
        for (int i = 0; i < m; ++i) {
            double diag = kind_ == PdeKind::schrodinger ? 2.0 * f_.values[i] : 0.0;
            const auto* nb = dom.neighbors(i);
            for (int a = 0; a < dom.degree(); ++a) {
                double c = inv_h2;
                if (kind_ == PdeKind::divergence) {
                    const double fj = nb[a].is_interior ? f_.values[nb[a].index]
                                                        : (f_.trace ? (*f_.trace)[nb[a].index] : 1.0);
                    c = 0.5 * (f_.values[i] + fj) * inv_h2;
                }
                diag += c;
                if (nb[a].is_interior) ta.emplace_back(i, nb[a].index, -c);
                else tb.emplace_back(i, nb[a].index, c);
            }
            ta.emplace_back(i, i, diag);
        }
        A_.resize(m, m);
        A_.setFromTriplets(ta.begin(), ta.end());
        B_.resize(m, dom.boundary_count());
        B_.setFromTriplets(tb.begin(), tb.end());

        if (m <= opts_.direct_size_limit) {
            ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(A_);
            if (ldlt_->info() != Eigen::Success)
                throw numerical_error("pde solve: sparse factorization failed (" + pde_kind_name(kind_) + ")");
        }
    }

    PdeKind kind() const { return kind_; }
    const GridFunction& coefficient() const { return f_; }
    const Eigen::SparseMatrix<double>& matrix() const { return A_; }

    // Solves L_f u = rhs with Dirichlet data `trace` (null = zero). The
    // returned function carries the trace it was solved with.
    GridFunction solve(const Eigen::VectorXd& rhs, const Eigen::VectorXd* trace = nullptr) const {
        Eigen::VectorXd b = -rhs;
        if (trace) b += B_ * (*trace);
        Eigen::VectorXd u = backsolve(b);
        const double b_norm = b.norm();
        double resid = (A_ * u - b).norm();
        if (b_norm > 0.0 && resid / b_norm > opts_.rel_tol) {
            u += backsolve(b - A_ * u);  // one refinement step
            resid = (A_ * u - b).norm();
            if (resid / b_norm > opts_.rel_tol)
                throw numerical_error("pde solve: residual " + std::to_string(resid / b_norm) +
                                      " exceeds tolerance for " + pde_kind_name(kind_));
        }
        GridFunction out(f_.domain, std::move(u));
        if (trace) out.trace = *trace;
        else out.with_constant_trace(0.0);
        return out;
    }

    // w = V_f[psi]: zero-boundary solution of L_f w = psi.
    GridFunction apply_Vf(const GridFunction& psi) const {
        require_same_domain(psi, f_, "apply_Vf");
        require(psi.zero_boundary(), "apply_Vf: psi must have zero boundary");
        return solve(psi.values, nullptr);
    }

    // Stencil application of L_f (reads u's trace; zero extension otherwise).
    GridFunction apply_Lf(const GridFunction& u) const {
        Eigen::VectorXd out = -(A_ * u.values);
        if (u.trace) out += B_ * (*u.trace);
        return GridFunction(f_.domain, std::move(out));
    }

  private:
    Eigen::VectorXd backsolve(const Eigen::VectorXd& b) const {
        if (ldlt_) return ldlt_->solve(b);
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                                 Eigen::DiagonalPreconditioner<double>>
            cg(A_);
        cg.setTolerance(opts_.rel_tol);
        cg.setMaxIterations(opts_.cg_max_iterations);
        Eigen::VectorXd x = cg.solve(b);
        if (cg.info() != Eigen::Success)
            throw numerical_error("pde solve: CG did not converge within budget (" + pde_kind_name(kind_) + ")");
        return x;
    }

    PdeKind kind_;
    GridFunction f_;
    SolverOptions opts_;
    Eigen::SparseMatrix<double> A_;  // -L_f restricted to interior (SPD)
    Eigen::SparseMatrix<double> B_;  // boundary coupling: rhs gets B * trace
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

// Discrete divergence-form flux: (1/h^2) sum_{j~i} coefavg_{ij} (u_j - u_i),
// with coef and u read from their traces at boundary neighbors (zero
// default). Exactly the linearization stencil of the divergence operator.
inline GridFunction flux_divergence(const GridFunction& coef, const GridFunction& u) {
    require_same_domain(coef, u, "flux_divergence");
    const Domain& dom = *u.domain;
    const double inv_h2 = 1.0 / (dom.h() * dom.h());
    Eigen::VectorXd out(dom.interior_count());
    for (int i = 0; i < dom.interior_count(); ++i) {
        const auto* nb = dom.neighbors(i);
        double acc = 0.0;
        for (int a = 0; a < dom.degree(); ++a) {
            const double cj = nb[a].is_interior ? coef.values[nb[a].index] : coef.trace_at(nb[a].index);
            const double uj = nb[a].is_interior ? u.values[nb[a].index] : u.trace_at(nb[a].index);
            acc += 0.5 * (coef.values[i] + cj) * (uj - u.values[i]);
        }
        out[i] = inv_h2 * acc;
    }
    return GridFunction(u.domain, std::move(out));
}

// A forward model G: f -> u_f for one PDE kind with fixed problem data.
class PdeModel {
  public:
    static PdeModel divergence(GridFunction source, SolverOptions opts = {}) {
        PdeModel m;
        m.kind_ = PdeKind::divergence;
        m.source_ = std::move(source);
        m.domain_ = m.source_->domain;
        m.opts_ = opts;
        return m;
    }

    static PdeModel schrodinger(DomainPtr dom, Eigen::VectorXd boundary_g, SolverOptions opts = {}) {
        require(boundary_g.size() == dom->boundary_count(), "schrodinger model: boundary data length mismatch");
        PdeModel m;
        m.kind_ = PdeKind::schrodinger;
        m.domain_ = std::move(dom);
        m.boundary_g_ = std::move(boundary_g);
        m.opts_ = opts;
        return m;
    }

    static PdeModel schrodinger(DomainPtr dom, double boundary_const, SolverOptions opts = {}) {
        const int nb = dom->boundary_count();
        return schrodinger(std::move(dom), Eigen::VectorXd::Constant(nb, boundary_const), opts);
    }

    PdeKind kind() const { return kind_; }
    const DomainPtr& domain() const { return domain_; }
    RegularityMeta regularity() const { return regularity_of(kind_); }
    const SolverOptions& options() const { return opts_; }
    const GridFunction& source() const { return *source_; }
    const Eigen::VectorXd& boundary_data() const { return *boundary_g_; }

    class Solution;
    Solution solve(const GridFunction& f) const;

  private:
    PdeKind kind_ = PdeKind::divergence;
    DomainPtr domain_;
    std::optional<GridFunction> source_;       // divergence: interior source g
    std::optional<Eigen::VectorXd> boundary_g_;  // schrodinger: boundary trace g
    SolverOptions opts_;
};

// u_f together with the factorization of L_f, so Frechet derivatives and
// adjoint gradients at the same coefficient reuse one factorization.
class PdeModel::Solution {
  public:
    Solution(std::shared_ptr<const PdeOperator> op, GridFunction u) : op_(std::move(op)), u_(std::move(u)) {}

    const GridFunction& u() const { return u_; }
    const PdeOperator& op() const { return *op_; }

    GridFunction apply_Vf(const GridFunction& psi) const { return op_->apply_Vf(psi); }

    // Derivative of f -> u_f in direction delta_f (zero-boundary).
    GridFunction frechet(const GridFunction& delta_f) const {
        require(delta_f.zero_boundary(), "frechet: delta_f must have zero boundary");
        if (op_->kind() == PdeKind::divergence) {
            GridFunction rhs = flux_divergence(delta_f, u_);
            GridFunction w = op_->apply_Vf(rhs);
            w.values = -w.values;
            return w;
        }
        GridFunction rhs(u_.domain, Eigen::VectorXd(2.0 * delta_f.values.cwiseProduct(u_.values)));
        return op_->apply_Vf(rhs);
    }

    // grad with <grad, delta_f>_h = <residual, frechet(delta_f)>_h for every
    // zero-boundary delta_f; exact discrete adjoint of the stencil.
    GridFunction adjoint_gradient(const GridFunction& residual) const {
        require(residual.zero_boundary(), "adjoint_gradient: residual must have zero boundary");
        GridFunction w = op_->apply_Vf(residual);
        if (op_->kind() == PdeKind::schrodinger)
            return GridFunction(u_.domain, Eigen::VectorXd(2.0 * u_.values.cwiseProduct(w.values)));
        const Domain& dom = *u_.domain;
        const double half_inv_h2 = 0.5 / (dom.h() * dom.h());
        Eigen::VectorXd g(dom.interior_count());
        for (int i = 0; i < dom.interior_count(); ++i) {
            const auto* nb = dom.neighbors(i);
            double acc = 0.0;
            for (int a = 0; a < dom.degree(); ++a) {
                const double uj = nb[a].is_interior ? u_.values[nb[a].index] : u_.trace_at(nb[a].index);
                const double wj = nb[a].is_interior ? w.values[nb[a].index] : w.trace_at(nb[a].index);
                acc += (uj - u_.values[i]) * (wj - w.values[i]);
            }
            g[i] = half_inv_h2 * acc;
        }
        return GridFunction(u_.domain, std::move(g));
    }

  private:
    std::shared_ptr<const PdeOperator> op_;
    GridFunction u_;
};

inline PdeModel::Solution PdeModel::solve(const GridFunction& f) const {
    require(f.domain && f.domain->same_as(*domain_), "pde model: coefficient domain mismatch");
    auto op = std::make_shared<const PdeOperator>(kind_, f, opts_);
    if (kind_ == PdeKind::divergence) {
        require_same_domain(f, *source_, "solve_divergence");
        return Solution(op, op->solve(source_->values, nullptr));
    }
    return Solution(op, op->solve(Eigen::VectorXd::Zero(domain_->interior_count()), &*boundary_g_));
}

// -- free functions mirroring the operator-level API --------------------

inline GridFunction solve_divergence(const GridFunction& f, const GridFunction& g, SolverOptions opts = {}) {
    return PdeModel::divergence(g, opts).solve(f).u();
}

inline GridFunction solve_schrodinger(const GridFunction& f, const Eigen::VectorXd& boundary_g,
                                      SolverOptions opts = {}) {
    return PdeModel::schrodinger(f.domain, boundary_g, opts).solve(f).u();
}

inline GridFunction apply_Vf(PdeKind kind, const GridFunction& f, const GridFunction& psi, SolverOptions opts = {}) {
    return PdeOperator(kind, f, opts).apply_Vf(psi);
}

inline GridFunction frechet_derivative(const PdeModel& model, const GridFunction& f, const GridFunction& delta_f) {
    return model.solve(f).frechet(delta_f);
}

inline GridFunction adjoint_gradient(const PdeModel& model, const GridFunction& f, const GridFunction& residual) {
    return model.solve(f).adjoint_gradient(residual);
}

// Direct potential recovery f = Delta u / (2u), defined wherever |u| stays
// above `floor`. u must carry its boundary trace.
inline GridFunction recover_potential(const GridFunction& u, double floor) {
    require(floor > 0.0, "recover_potential: floor must be positive");
    require(u.trace.has_value(), "recover_potential: u must carry a boundary trace");
    std::string degenerate;
    int count = 0;
    for (int i = 0; i < u.values.size(); ++i)
        if (std::abs(u.values[i]) < floor) {
            if (count < 8) degenerate += (count ? "," : "") + std::to_string(i);
            ++count;
        }
    if (count > 0)
        throw numerical_error("recover_potential: |u| below floor at " + std::to_string(count) +
                              " node(s) [" + degenerate + (count > 8 ? ",..." : "") + "]");
    GridFunction lap = laplacian_apply(u);
    Eigen::VectorXd f = lap.values.array() / (2.0 * u.values.array());
    return GridFunction(u.domain, std::move(f));
}

}  // namespace pdereg
