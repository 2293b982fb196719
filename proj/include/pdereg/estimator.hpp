#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "pdereg/errors.hpp"
#include "pdereg/forward.hpp"
#include "pdereg/grid.hpp"
#include "pdereg/linkfn.hpp"
#include "pdereg/noise.hpp"
#include "pdereg/parallel.hpp"
#include "pdereg/radon.hpp"
#include "pdereg/rng.hpp"
#include "pdereg/sobolev.hpp"

namespace pdereg {

struct EstimatorConfig {
    double lambda = 0.1;

    enum class Init { zero, given, random };
    Init init = Init::zero;
    std::optional<GridFunction> init_given;
    double random_scale = 1.0;

    int restarts = 1;
    int max_iterations = 400;
    double grad_tol = 1e-7;

    double step0 = 1.0;       // initial line-search step
    double backtrack = 0.5;   // step shrink factor
    double armijo_c = 1e-4;   // sufficient-increase constant

    int lbfgs_memory = 8;     // 0 disables the quasi-second-order direction
    std::uint64_t seed = 0;
    int jobs = 1;
    bool allow_nonregular_link = false;

    void validate() const {
        require(lambda > 0.0, "estimator config: lambda must be > 0");
        require(restarts >= 1, "estimator config: restarts must be >= 1");
        require(max_iterations >= 1, "estimator config: max_iterations must be >= 1");
        require(grad_tol > 0.0, "estimator config: grad_tol must be > 0");
        require(step0 > 0.0 && backtrack > 0.0 && backtrack < 1.0 && armijo_c > 0.0 && armijo_c < 1.0,
                "estimator config: bad line-search parameters");
        if (init == Init::given) require(init_given.has_value(), "estimator config: init=given needs a start point");
    }
};

// Regularization schedules as functions of the noise level.
inline double lambda_schedule(const std::string& name, double epsilon, int alpha, int d) {
    require(epsilon > 0.0, "lambda schedule: epsilon must be > 0");
    if (name == "divergence") return std::pow(epsilon, 2.0 * (alpha + 1) / (2.0 * (alpha + 1) + d));
    if (name == "schrodinger") return std::pow(epsilon, 2.0 * (alpha + 2) / (2.0 * (alpha + 2) + d));
    if (name == "radon") return std::pow(epsilon, (2.0 * alpha + 1) / (2.0 * alpha + 3));
    if (name == "map") return epsilon;
    throw invalid_argument("lambda schedule: unknown name '" + name + "'");
}

struct RestartTrace {
    int index = 0;
    double objective = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct EstimateResult {
    GridFunction F_hat;
    GridFunction f_hat;      // Phi o F_hat; equals F_hat for linear models
    Eigen::VectorXd u_hat;   // forward image of F_hat in the output space
    double objective = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    int winner_restart = 0;
    bool converged = false;
    std::vector<RestartTrace> restarts;
};

// -- objective for the PDE models ----------------------------------------

namespace detail {

struct PdeEval {
    double objective;
    GridFunction grad;       // empty unless requested
    GridFunction f;
    GridFunction u;
};

inline PdeEval pde_eval(const GridFunction& F, const Observation& obs, const PdeModel& model,
                        const LinkFunction& link, const SobolevMetric& metric, double lambda, bool want_grad) {
    require(F.zero_boundary(), "objective: F must have zero boundary");
    require(obs.space.kind == "grid", "objective: observation space mismatch");
    PdeEval ev{0.0, {}, link_eval(link, F, LinkMode::forward), {}};
    auto sol = model.solve(ev.f);
    ev.u = sol.u();
    const double fit = 2.0 * pairing(obs, ev.u.values) - inner_product(ev.u, ev.u);
    ev.objective = fit - lambda * lambda * metric.norm_sq(F, metric.alpha());
    if (want_grad) {
        GridFunction residual(F.domain, Eigen::VectorXd(obs.values - ev.u.values));
        GridFunction back = sol.adjoint_gradient(residual);
        const GridFunction dphi = link_eval(link, F, LinkMode::derivative);
        Eigen::VectorXd g = 2.0 * dphi.values.cwiseProduct(back.values);
        g -= metric.penalty_gradient(F, lambda).values;
        ev.grad = GridFunction(F.domain, std::move(g));
    }
    return ev;
}

}  // namespace detail

inline double objective(const GridFunction& F, const Observation& obs, const PdeModel& model,
                        const LinkFunction& link, const SobolevMetric& metric, double lambda) {
    return detail::pde_eval(F, obs, model, link, metric, lambda, false).objective;
}

inline GridFunction objective_gradient(const GridFunction& F, const Observation& obs, const PdeModel& model,
                                       const LinkFunction& link, const SobolevMetric& metric, double lambda) {
    return detail::pde_eval(F, obs, model, link, metric, lambda, true).grad;
}

// -- objective for the linear (Radon) model -------------------------------

inline double objective(const GridFunction& F, const Observation& obs, const RadonGeometry& geom,
                        const SobolevMetric& metric, double lambda) {
    require(obs.space.kind == "sinogram", "objective: observation space mismatch");
    Sinogram s = radon_forward(F, geom);
    const double fit = 2.0 * pairing(obs, s.values) - sino_inner(s, s);
    return fit - lambda * lambda * metric.norm_sq(F, metric.alpha());
}

inline GridFunction objective_gradient(const GridFunction& F, const Observation& obs, const RadonGeometry& geom,
                                       const SobolevMetric& metric, double lambda) {
    Sinogram s = radon_forward(F, geom);
    Sinogram resid{geom, Eigen::VectorXd(obs.values - s.values)};
    Eigen::VectorXd g = 2.0 * radon_adjoint(resid, geom).values;
    g -= metric.penalty_gradient(F, lambda).values;
    return GridFunction(F.domain, std::move(g));
}

// -- tau diagnostic --------------------------------------------------------

inline double tau_metric(const GridFunction& F1, const GridFunction& F2, const PdeModel& model,
                         const LinkFunction& link, const SobolevMetric& metric, double lambda) {
    const GridFunction u1 = model.solve(link_eval(link, F1, LinkMode::forward)).u();
    const GridFunction u2 = model.solve(link_eval(link, F2, LinkMode::forward)).u();
    GridFunction diff(u1.domain, Eigen::VectorXd(u1.values - u2.values));
    return inner_product(diff, diff) + lambda * lambda * metric.norm_sq(F1, metric.alpha());
}

inline double tau_metric(const GridFunction& F1, const GridFunction& F2, const RadonGeometry& geom,
                         const SobolevMetric& metric, double lambda) {
    Sinogram s1 = radon_forward(F1, geom), s2 = radon_forward(F2, geom);
    Sinogram diff{geom, Eigen::VectorXd(s1.values - s2.values)};
    return sino_inner(diff, diff) + lambda * lambda * metric.norm_sq(F1, metric.alpha());
}

// f-space twin of tau: mu(f1,f2) = ||G(f1)-G(f2)||^2 + lambda^2 ||Phi^{-1} f1||^2.
inline double mu_metric(const GridFunction& f1, const GridFunction& f2, const PdeModel& model,
                        const LinkFunction& link, const SobolevMetric& metric, double lambda) {
    const GridFunction u1 = model.solve(f1).u();
    const GridFunction u2 = model.solve(f2).u();
    GridFunction diff(u1.domain, Eigen::VectorXd(u1.values - u2.values));
    GridFunction F1 = link_eval(link, f1, LinkMode::inverse);
    F1.trace.reset();  // f1 = 1 on the boundary pulls back to F1 = 0
    return inner_product(diff, diff) + lambda * lambda * metric.norm_sq(F1, metric.alpha());
}

// -- the estimator ---------------------------------------------------------

namespace detail {

struct AscentOutcome {
    GridFunction F;
    double objective = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Monotone ascent with Armijo backtracking; optional limited-memory
// curvature pairs for the search direction. Inner products are <.,.>_h.
template <class Eval>
inline AscentOutcome ascend(GridFunction F0, Eval&& eval, const EstimatorConfig& cfg) {
    const double vol = F0.domain->cell_volume();
    auto dot_h = [vol](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return vol * a.dot(b); };

    AscentOutcome out;
    out.F = std::move(F0);
    auto [obj, grad] = eval(out.F);
    out.objective = obj;
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;  // (s, y) pairs of the negated objective

    for (int it = 0; it < cfg.max_iterations; ++it) {
        out.grad_norm = std::sqrt(std::max(0.0, dot_h(grad.values, grad.values)));
        out.iterations = it;
        if (!std::isfinite(out.objective)) return out;
        if (out.grad_norm <= cfg.grad_tol) {
            out.converged = true;
            return out;
        }

        // two-loop recursion on g = -grad (minimizing -J)
        Eigen::VectorXd dir;
        if (!memory.empty()) {
            Eigen::VectorXd q = -grad.values;
            std::vector<double> alpha(memory.size());
            std::vector<double> rho(memory.size());
            for (int k = static_cast<int>(memory.size()) - 1; k >= 0; --k) {
                rho[k] = 1.0 / dot_h(memory[k].second, memory[k].first);
                alpha[k] = rho[k] * dot_h(memory[k].first, q);
                q -= alpha[k] * memory[k].second;
            }
            const auto& [sl, yl] = memory.back();
            q *= dot_h(sl, yl) / dot_h(yl, yl);
            for (std::size_t k = 0; k < memory.size(); ++k) {
                const double beta = rho[k] * dot_h(memory[k].second, q);
                q += (alpha[k] - beta) * memory[k].first;
            }
            dir = -q;  // ascent direction for J
        } else {
            dir = grad.values;
        }
        double slope = dot_h(grad.values, dir);
        if (!(slope > 0.0) || !dir.allFinite()) {
            dir = grad.values;
            slope = out.grad_norm * out.grad_norm;
            memory.clear();
        }

        double step = memory.empty() ? cfg.step0 / std::max(1.0, out.grad_norm) : 1.0;
        bool accepted = false;
        GridFunction F_new;
        double obj_new = 0.0;
        for (int bt = 0; bt < 60; ++bt) {
            F_new = GridFunction(out.F.domain, Eigen::VectorXd(out.F.values + step * dir));
            obj_new = eval.objective_only(F_new);
            if (std::isfinite(obj_new) && obj_new >= out.objective + cfg.armijo_c * step * slope) {
                accepted = true;
                break;
            }
            step *= cfg.backtrack;
        }
        if (!accepted) return out;  // stalled; gradient criterion not met
        if (obj_new < out.objective)
            throw numerical_error("estimator: accepted step decreased the objective");

        auto [obj2, grad2] = eval(F_new);
        if (cfg.lbfgs_memory > 0) {
            Eigen::VectorXd s = F_new.values - out.F.values;
            Eigen::VectorXd y = grad.values - grad2.values;  // gradient of -J increases
            if (dot_h(s, y) > 1e-14 * s.norm() * y.norm() * vol) {
                memory.emplace_back(std::move(s), std::move(y));
                while (static_cast<int>(memory.size()) > cfg.lbfgs_memory) memory.pop_front();
            }
        }
        out.F = std::move(F_new);
        out.objective = obj2;
        grad = std::move(grad2);
    }
    out.grad_norm = std::sqrt(std::max(0.0, dot_h(grad.values, grad.values)));
    out.iterations = cfg.max_iterations;
    out.converged = out.grad_norm <= cfg.grad_tol;
    return out;
}

}  // namespace detail

// Penalized least-squares estimator for the PDE models: multi-start ascent
// of the objective; restarts run concurrently and merge deterministically
// (best exit objective, ties to the lowest restart index).
inline EstimateResult estimate(const Observation& obs, const PdeModel& model, const LinkFunction& link,
                               const SobolevMetric& metric, const EstimatorConfig& cfg) {
    cfg.validate();
    if (!link.regular() && !cfg.allow_nonregular_link)
        throw invalid_argument("estimate: non-regular link requires allow_nonregular_link");

    struct Eval {
        const Observation* obs;
        const PdeModel* model;
        const LinkFunction* link;
        const SobolevMetric* metric;
        double lambda;
        std::pair<double, GridFunction> operator()(const GridFunction& F) const {
            auto ev = detail::pde_eval(F, *obs, *model, *link, *metric, lambda, true);
            return {ev.objective, std::move(ev.grad)};
        }
        double objective_only(const GridFunction& F) const {
            try {
                return detail::pde_eval(F, *obs, *model, *link, *metric, lambda, false).objective;
            } catch (const numerical_error&) {
                return std::numeric_limits<double>::quiet_NaN();
            }
        }
    } eval{&obs, &model, &link, &metric, cfg.lambda};

    GridFunction base = cfg.init == EstimatorConfig::Init::given ? *cfg.init_given
                                                                 : GridFunction::zero(metric.domain());
    if (cfg.init == EstimatorConfig::Init::random)
        base = smooth_random(metric, rng::derive(cfg.seed, 0), cfg.random_scale, metric.alpha());

    std::vector<detail::AscentOutcome> outcomes(cfg.restarts);
    parallel_for(cfg.restarts, cfg.jobs, [&](int r) {
        GridFunction start = base;
        if (r > 0) {
            GridFunction bump = smooth_random(metric, rng::derive(cfg.seed, 100 + r), cfg.random_scale,
                                              metric.alpha());
            start = GridFunction(base.domain, Eigen::VectorXd(base.values + bump.values));
        }
        outcomes[r] = detail::ascend(std::move(start), eval, cfg);
    });

    int winner = -1;
    for (int r = 0; r < cfg.restarts; ++r) {
        if (!std::isfinite(outcomes[r].objective)) continue;
        if (winner < 0 || outcomes[r].objective > outcomes[winner].objective + 1e-12) winner = r;
    }
    if (winner < 0) {
        std::string trace;
        for (int r = 0; r < cfg.restarts; ++r)
            trace += " restart " + std::to_string(r) + ": objective=" + std::to_string(outcomes[r].objective) +
                     " iters=" + std::to_string(outcomes[r].iterations) + ";";
        throw numerical_error("estimate: all restarts diverged;" + trace);
    }

    EstimateResult res;
    res.F_hat = outcomes[winner].F;
    res.f_hat = link_eval(link, res.F_hat, LinkMode::forward);
    res.u_hat = model.solve(res.f_hat).u().values;
    res.objective = outcomes[winner].objective;
    res.grad_norm = outcomes[winner].grad_norm;
    res.iterations = outcomes[winner].iterations;
    res.winner_restart = winner;
    res.converged = outcomes[winner].converged;
    for (int r = 0; r < cfg.restarts; ++r)
        res.restarts.push_back({r, outcomes[r].objective, outcomes[r].grad_norm, outcomes[r].iterations,
                                outcomes[r].converged});
    // positivity is guaranteed through Phi; assert anyway
    require(res.f_hat.values.minCoeff() > link.k_min(), "estimate: coefficient left the link range");
    return res;
}

// Linear model: the closed-form ridge maximizer, reported as one iteration.
inline EstimateResult estimate(const Observation& obs, const RidgeSolver& solver, const SobolevMetric& metric,
                               const EstimatorConfig& cfg) {
    require(obs.space.kind == "sinogram", "estimate: observation space mismatch");
    RidgeResult rr = solver.solve(Sinogram{solver.geometry(), obs.values});
    EstimateResult res;
    res.F_hat = rr.F;
    res.f_hat = rr.F;
    res.u_hat = radon_forward(rr.F, solver.geometry()).values;
    res.objective = objective(rr.F, obs, solver.geometry(), metric, solver.lambda());
    GridFunction g = objective_gradient(rr.F, obs, solver.geometry(), metric, solver.lambda());
    res.grad_norm = norm_h(g);
    res.iterations = 1;
    res.winner_restart = 0;
    res.converged = rr.converged;
    res.restarts.push_back({0, res.objective, res.grad_norm, 1, rr.converged});
    return res;
}

}  // namespace pdereg
