#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pdereg/errors.hpp"
#include "pdereg/estimator.hpp"
#include "pdereg/forward.hpp"
#include "pdereg/grid.hpp"
#include "pdereg/linkfn.hpp"
#include "pdereg/noise.hpp"
#include "pdereg/parallel.hpp"
#include "pdereg/radon.hpp"
#include "pdereg/rng.hpp"
#include "pdereg/sobolev.hpp"
#include "pdereg/theory.hpp"

namespace pdereg {

// Fixed smooth ground truths so rates are comparable across noise levels.
// Coefficients are in the h-orthonormal eigenbasis of the metric's domain.
//   sine-mix    (interval): amplitude * (e_1 + 0.4 e_2 + 0.2 e_3)
//   tensor-mix  (square):   amplitude * (e_11 + 0.3 e_21 + 0.3 e_12)
//   poly-bump   (disc):     amplitude * (1 - |x|^2)^2
inline GridFunction make_truth(const std::string& name, double amplitude, const SobolevMetric& metric) {
    const DomainPtr& dom = metric.domain();
    if (name == "zero") return GridFunction::zero(dom);
    if (name == "sine-mix") {
        require(dom->shape() == Shape::interval, "truth sine-mix: needs an interval domain");
        Eigen::VectorXd c = Eigen::VectorXd::Zero(metric.mode_count());
        c[0] = amplitude;
        c[1] = 0.4 * amplitude;
        c[2] = 0.2 * amplitude;
        return GridFunction(dom, metric.from_coeffs(c));
    }
    if (name == "tensor-mix") {
        require(dom->shape() == Shape::square, "truth tensor-mix: needs a square domain");
        const int n = dom->n();
        Eigen::VectorXd c = Eigen::VectorXd::Zero(metric.mode_count());
        c[0] = amplitude;
        c[n] = 0.3 * amplitude;
        c[1] = 0.3 * amplitude;
        return GridFunction(dom, metric.from_coeffs(c));
    }
    if (name == "poly-bump") {
        require(dom->shape() == Shape::disc, "truth poly-bump: needs a disc domain");
        return GridFunction::from_function(dom, [amplitude](double x, double y) {
            const double r2 = x * x + y * y;
            const double t = 1.0 - r2;
            return amplitude * t * t;
        });
    }
    throw invalid_argument("truth: unknown profile '" + name + "'");
}

struct ProblemSpec {
    std::string kind = "schrodinger";  // divergence | schrodinger | radon
    int d = 1;
    int n = 127;
    int alpha = 4;
    double k_min = 0.0;
    std::string link = "regular-softplus";
    std::string f0 = "sine-mix";
    double f0_amplitude = 0.8;
    std::string schedule;  // empty = the kind's own schedule
    std::vector<double> beta_list = {0.0};
    // radon geometry
    int n_theta = 96;
    int n_s = 95;
    // estimator knobs
    int restarts = 2;
    int max_iterations = 600;
    double grad_tol = 1e-8;
    double random_scale = 0.5;

    std::string schedule_name() const { return schedule.empty() ? kind : schedule; }

    Shape shape() const {
        if (kind == "radon") return Shape::disc;
        return d == 1 ? Shape::interval : Shape::square;
    }

    void validate() const {
        require(kind == "divergence" || kind == "schrodinger" || kind == "radon",
                "problem: kind must be divergence, schrodinger or radon");
        if (kind == "radon") require(d == 2, "problem: radon requires d=2");
        require(alpha >= 1, "problem: alpha must be >= 1");
    }
};

struct RateRecord {
    double eps = 0.0;
    int rep = 0;
    std::vector<double> u_err;  // one entry per requested beta
    double f_err = 0.0;
    double tau2 = 0.0;
    bool converged = false;
    int iterations = 0;
};

struct SlopeFit {
    double slope = 0.0;
    double stderr_ = 0.0;
    int points = 0;
};

// Least-squares slope of log(y) against log(x); entries with y <= 0 dropped.
inline SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (y[i] > 0.0 && x[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    SlopeFit fit;
    fit.points = static_cast<int>(lx.size());
    if (fit.points < 2) return fit;
    const double n = static_cast<double>(fit.points);
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < fit.points; ++i) { mx += lx[i]; my += ly[i]; }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < fit.points; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    if (fit.points > 2) {
        double ss = 0.0;
        for (int i = 0; i < fit.points; ++i) {
            const double r = ly[i] - my - fit.slope * (lx[i] - mx);
            ss += r * r;
        }
        fit.stderr_ = std::sqrt(ss / (n - 2.0) / sxx);
    }
    return fit;
}

struct RateReport {
    ProblemSpec problem;
    std::vector<double> eps_grid;
    std::vector<double> beta_list;
    int reps = 0;
    std::uint64_t seed = 0;
    std::vector<RateRecord> records;
    std::map<std::string, SlopeFit> slopes;             // error kind -> fitted slope
    std::map<std::string, std::string> theory_exponent; // error kind -> exact rational
    std::vector<double> nonconverged_fraction;          // per eps
    bool valid = false;
};

namespace detail {

inline std::string beta_label(double b) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "u_H%g", b);
    return buf;
}

inline std::map<std::string, std::string> theory_exponents(const ProblemSpec& spec) {
    using namespace theory;
    std::map<std::string, std::string> out;
    if (spec.kind == "radon") {
        const RegularityProfile p = radon_profile(spec.alpha);
        out["u_L2"] = rate_exponent(p, RateTarget::generic).str();
        out["f_L2"] = rate_exponent(p, RateTarget::radon_f).str();
        out["tau2"] = (Rational(2) * rate_exponent(p, RateTarget::generic)).str();
        return out;
    }
    const RegularityProfile p = spec.kind == "divergence" ? divergence_profile(spec.alpha, spec.d)
                                                          : schrodinger_profile(spec.alpha, spec.d);
    for (double b : spec.beta_list)
        out[beta_label(b)] = rate_exponent(p, RateTarget::prediction, rational_from_double(b)).str();
    out["f_L2"] = rate_exponent(p, spec.kind == "divergence" ? RateTarget::div_f : RateTarget::schr_f).str();
    out["tau2"] = (Rational(2) * rate_exponent(p, RateTarget::generic)).str();
    return out;
}

}  // namespace detail

// Monte Carlo rate sweep: for each (eps, replicate), synthesize an
// observation of u_{f0}, estimate, and record the requested error norms;
// slopes of log mean-error against log eps are fitted over converged
// replicates and reported next to the theoretical exponents.
inline RateReport rate_sweep(const ProblemSpec& spec, const std::vector<double>& eps_grid, int reps,
                             std::uint64_t seed, int jobs = 1) {
    spec.validate();
    require(eps_grid.size() >= 3, "rate_sweep: need >= 3 eps values");
    require(reps >= 10, "rate_sweep: need >= 10 replicates per eps");
    const auto [emin, emax] = std::minmax_element(eps_grid.begin(), eps_grid.end());
    require(*emax / *emin >= std::pow(10.0, 1.5), "rate_sweep: eps grid must span >= 1.5 decades");

    RateReport report;
    report.problem = spec;
    report.eps_grid = eps_grid;
    report.beta_list = spec.kind == "radon" ? std::vector<double>{} : spec.beta_list;
    report.reps = reps;
    report.seed = seed;
    report.theory_exponent = detail::theory_exponents(spec);

    auto dom = make_domain(spec.kind == "radon" ? 2 : spec.d, spec.n, spec.shape());
    SobolevMetric metric(dom, spec.alpha);
    const int ne = static_cast<int>(eps_grid.size());
    const int tasks = ne * reps;
    report.records.assign(tasks, RateRecord{});

    if (spec.kind == "radon") {
        const GridFunction F0 = make_truth(spec.f0, spec.f0_amplitude, metric);
        RadonGeometry geom = RadonGeometry::make(dom, spec.n_theta, spec.n_s);
        const Sinogram y0 = radon_forward(F0, geom);
        std::vector<std::unique_ptr<RidgeSolver>> solvers(ne);
        std::vector<double> lambdas(ne);
        for (int e = 0; e < ne; ++e) {
            lambdas[e] = lambda_schedule(spec.schedule_name(), eps_grid[e], spec.alpha, 2);
            solvers[e] = std::make_unique<RidgeSolver>(geom, metric, lambdas[e]);
        }
        parallel_for(tasks, jobs, [&](int t) {
            const int e = t / reps, r = t % reps;
            RateRecord rec;
            rec.eps = eps_grid[e];
            rec.rep = r;
            const std::uint64_t rseed = rng::derive(seed, static_cast<std::uint64_t>(e) * 100003 + r);
            Observation obs = synthesize(y0.values, y0.weights(), eps_grid[e], rseed,
                                         SpaceDesc::sinogram(geom.n_theta, geom.n_s, dom->n()));
            RidgeResult rr = solvers[e]->solve(Sinogram{geom, obs.values});
            rec.converged = rr.converged;
            rec.iterations = rr.iterations;
            GridFunction diff(dom, Eigen::VectorXd(rr.F.values - F0.values));
            rec.f_err = norm_h(diff);
            Sinogram sdiff{geom, Eigen::VectorXd(radon_forward(rr.F, geom).values - y0.values)};
            rec.u_err.push_back(sino_norm(sdiff));
            rec.tau2 = sino_inner(sdiff, sdiff) + lambdas[e] * lambdas[e] * metric.norm_sq(rr.F, spec.alpha);
            report.records[t] = std::move(rec);
        });
    } else {
        const LinkFunction link = LinkFunction::by_name(spec.link, spec.k_min);
        const GridFunction F0 = make_truth(spec.f0, spec.f0_amplitude, metric);
        const GridFunction f0 = link_eval(link, F0, LinkMode::forward);
        const PdeModel model = spec.kind == "divergence"
                                   ? PdeModel::divergence(GridFunction::constant(dom, 1.0))
                                   : PdeModel::schrodinger(dom, 1.0);
        const GridFunction u0 = model.solve(f0).u();
        parallel_for(tasks, jobs, [&](int t) {
            const int e = t / reps, r = t % reps;
            RateRecord rec;
            rec.eps = eps_grid[e];
            rec.rep = r;
            const double lambda = lambda_schedule(spec.schedule_name(), eps_grid[e], spec.alpha, spec.d);
            const std::uint64_t rseed = rng::derive(seed, static_cast<std::uint64_t>(e) * 100003 + r);
            Observation obs = synthesize(u0, eps_grid[e], rseed);
            EstimatorConfig cfg;
            cfg.lambda = lambda;
            cfg.restarts = spec.restarts;
            cfg.max_iterations = spec.max_iterations;
            cfg.grad_tol = spec.grad_tol;
            cfg.random_scale = spec.random_scale;
            cfg.seed = rng::derive(rseed, 1);
            EstimateResult est = estimate(obs, model, link, metric, cfg);
            rec.converged = est.converged;
            rec.iterations = est.iterations;
            GridFunction udiff(dom, Eigen::VectorXd(est.u_hat - u0.values));
            for (double b : spec.beta_list) rec.u_err.push_back(metric.norm(udiff, b));
            GridFunction fdiff(dom, Eigen::VectorXd(est.f_hat.values - f0.values));
            rec.f_err = norm_h(fdiff);
            rec.tau2 = inner_product(udiff, udiff) + lambda * lambda * metric.norm_sq(est.F_hat, spec.alpha);
            report.records[t] = std::move(rec);
        });
    }

    // slope fits on log mean error over converged replicates
    report.valid = true;
    report.nonconverged_fraction.assign(ne, 0.0);
    auto mean_of = [&](int e, auto&& extract) {
        double acc = 0.0;
        int cnt = 0;
        for (int r = 0; r < reps; ++r) {
            const RateRecord& rec = report.records[e * reps + r];
            if (!rec.converged) continue;
            acc += extract(rec);
            ++cnt;
        }
        return cnt > 0 ? acc / cnt : 0.0;
    };
    for (int e = 0; e < ne; ++e) {
        int bad = 0;
        for (int r = 0; r < reps; ++r)
            if (!report.records[e * reps + r].converged) ++bad;
        report.nonconverged_fraction[e] = static_cast<double>(bad) / reps;
        if (report.nonconverged_fraction[e] > 0.2) report.valid = false;
    }
    std::vector<std::string> kinds;
    for (double b : report.beta_list) kinds.push_back(detail::beta_label(b));
    if (spec.kind == "radon") kinds.push_back("u_L2");
    kinds.push_back("f_L2");
    kinds.push_back("tau2");
    for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
        const std::string& k = kinds[ki];
        std::vector<double> ys(ne);
        for (int e = 0; e < ne; ++e)
            ys[e] = mean_of(e, [&](const RateRecord& rec) -> double {
                if (k == "f_L2") return rec.f_err;
                if (k == "tau2") return rec.tau2;
                if (k == "u_L2") return rec.u_err.empty() ? 0.0 : rec.u_err[0];
                return rec.u_err[ki];  // u_H* labels lead and align with beta_list
            });
        report.slopes[k] = fit_loglog_slope(eps_grid, ys);
    }
    return report;
}

// -- stability audit --------------------------------------------------------

struct StabilityRecord {
    double f_diff = 0.0;   // ||f1 - f2||_h
    double u_h2 = 0.0;     // ||u1 - u2||_{H^2,h}
    double f2_c1 = 0.0;    // C^1 surrogate of f2
    double ratio = 0.0;
};

struct StabilityReport {
    std::string kind;
    int d = 2, n = 31, alpha = 3;
    double radius = 0.0;
    std::uint64_t seed = 0;
    std::vector<StabilityRecord> records;
    int skipped = 0;
    double c_hat = 0.0;
    double max_over_median = 0.0;
    bool violation = false;
    double recover_max_err = 0.0;  // schrodinger only: direct inversion check
};

// Random coefficient pairs from a smooth spectral ensemble; empirical
// Lipschitz-stability constants for the map u_f -> f.
inline StabilityReport stability_audit(const ProblemSpec& spec, int pair_count, double radius,
                                       std::uint64_t seed, int jobs = 1) {
    spec.validate();
    require(spec.kind != "radon", "stability_audit: pde kinds only");
    require(pair_count >= 1 && radius > 0.0, "stability_audit: need pairs >= 1 and radius > 0");

    StabilityReport rep;
    rep.kind = spec.kind;
    rep.d = spec.d;
    rep.n = spec.n;
    rep.alpha = spec.alpha;
    rep.radius = radius;
    rep.seed = seed;

    auto dom = make_domain(spec.d, spec.n, spec.shape());
    SobolevMetric metric(dom, spec.alpha);
    const LinkFunction link = LinkFunction::by_name(spec.link, spec.k_min);
    const PdeModel model = spec.kind == "divergence" ? PdeModel::divergence(GridFunction::constant(dom, 1.0))
                                                     : PdeModel::schrodinger(dom, 1.0);

    auto draw_f = [&](std::uint64_t s) {
        GridFunction F = smooth_random(metric, s, spec.f0_amplitude, spec.alpha + spec.d / 2.0 + 0.5);
        GridFunction f = link_eval(link, F, LinkMode::forward);
        int guard = 0;
        while (metric.norm(f, spec.alpha) > radius && guard++ < 60) {
            F.values *= 0.8;
            f = link_eval(link, F, LinkMode::forward);
        }
        require(guard < 60, "stability_audit: could not fit draw inside the H^alpha ball");
        return f;
    };

    std::vector<std::optional<StabilityRecord>> slots(pair_count);
    std::vector<double> recover_errs(pair_count, 0.0);
    parallel_for(pair_count, jobs, [&](int p) {
        const GridFunction f1 = draw_f(rng::derive(seed, 2 * p));
        const GridFunction f2 = draw_f(rng::derive(seed, 2 * p + 1));
        const GridFunction u1 = model.solve(f1).u();
        const GridFunction u2 = model.solve(f2).u();
        GridFunction du(dom, Eigen::VectorXd(u1.values - u2.values));
        StabilityRecord rec;
        rec.u_h2 = metric.norm(du, std::min(2, spec.alpha));
        if (rec.u_h2 == 0.0) return;  // degenerate pair, skipped
        GridFunction df(dom, Eigen::VectorXd(f1.values - f2.values));
        rec.f_diff = norm_h(df);
        rec.f2_c1 = c1_norm(f2);
        rec.ratio = rec.f_diff / (rec.f2_c1 * rec.u_h2);
        slots[p] = rec;
        if (spec.kind == "schrodinger") {
            GridFunction rec_f = recover_potential(u2, 1e-8);
            recover_errs[p] = (rec_f.values - f2.values).lpNorm<Eigen::Infinity>();
        }
    });

    std::vector<double> ratios;
    for (int p = 0; p < pair_count; ++p) {
        if (!slots[p]) { ++rep.skipped; continue; }
        rep.records.push_back(*slots[p]);
        ratios.push_back(slots[p]->ratio);
        rep.recover_max_err = std::max(rep.recover_max_err, recover_errs[p]);
    }
    require(!ratios.empty(), "stability_audit: all pairs degenerate");
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    rep.c_hat = sorted.back();
    const double median = sorted[sorted.size() / 2];
    rep.max_over_median = median > 0.0 ? sorted.back() / median : 0.0;
    rep.violation = rep.max_over_median > 3.0;
    return rep;
}

// -- concentration probe -----------------------------------------------------

struct ConcentrationReport {
    double eps = 0.0;
    double lambda = 0.0;
    int reps = 0;
    std::uint64_t seed = 0;
    std::vector<double> r_grid;
    std::vector<double> thresholds;
    std::vector<double> p_hat;
    std::vector<double> tau2_samples;
    double envelope_c = 0.0;   // smallest c with p_hat(R) <= exp(-R^2/(c eps^2))
    double ls_decay = 0.0;     // |slope| of log p_hat against R^2
    double tau2_center = 0.0;  // tau^2(F0, F0) = lambda^2 ||F0||^2
};

// Tail probabilities of tau^2 for the closed-form linear estimator, probed
// against the sub-Gaussian concentration shape exp(-R^2 / (c eps^2)).
inline ConcentrationReport concentration_probe(const ProblemSpec& spec, double eps,
                                               const std::vector<double>& r_grid, int reps, std::uint64_t seed,
                                               int jobs = 1) {
    spec.validate();
    require(spec.kind == "radon", "concentration_probe: linear (radon) model only");
    require(reps >= 200, "concentration_probe: need >= 200 replicates for tail resolution");
    require(!r_grid.empty(), "concentration_probe: empty R grid");

    auto dom = make_domain(2, spec.n, Shape::disc);
    SobolevMetric metric(dom, spec.alpha);
    RadonGeometry geom = RadonGeometry::make(dom, spec.n_theta, spec.n_s);
    const GridFunction F0 = make_truth(spec.f0, spec.f0_amplitude, metric);
    const Sinogram y0 = radon_forward(F0, geom);
    const double lambda = lambda_schedule(spec.schedule_name(), eps, spec.alpha, 2);
    RidgeSolver solver(geom, metric, lambda);

    ConcentrationReport rep;
    rep.eps = eps;
    rep.lambda = lambda;
    rep.reps = reps;
    rep.seed = seed;
    rep.r_grid = r_grid;
    rep.tau2_center = lambda * lambda * metric.norm_sq(F0, spec.alpha);
    rep.tau2_samples.assign(reps, 0.0);

    parallel_for(reps, jobs, [&](int r) {
        const std::uint64_t rseed = rng::derive(seed, static_cast<std::uint64_t>(r));
        Observation obs = synthesize(y0.values, y0.weights(), eps, rseed,
                                     SpaceDesc::sinogram(geom.n_theta, geom.n_s, dom->n()));
        RidgeResult rr = solver.solve(Sinogram{geom, obs.values});
        Sinogram sdiff{geom, Eigen::VectorXd(radon_forward(rr.F, geom).values - y0.values)};
        rep.tau2_samples[r] = sino_inner(sdiff, sdiff) + lambda * lambda * metric.norm_sq(rr.F, spec.alpha);
    });

    std::vector<double> lx, ly;
    for (double R : r_grid) {
        const double thr = 2.0 * (rep.tau2_center + R * R);
        int count = 0;
        for (double t2 : rep.tau2_samples)
            if (t2 >= thr) ++count;
        const double p = static_cast<double>(count) / reps;
        rep.thresholds.push_back(thr);
        rep.p_hat.push_back(p);
        if (p > 0.0 && p < 1.0) {
            rep.envelope_c = std::max(rep.envelope_c, R * R / (eps * eps * (-std::log(p))));
            lx.push_back(R * R);
            ly.push_back(std::log(p));
        }
    }
    if (lx.size() >= 2) {
        // plain LS on log p against R^2
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) { mx += lx[i]; my += ly[i]; }
        mx /= lx.size();
        my /= lx.size();
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        rep.ls_decay = sxx > 0.0 ? -sxy / sxx : 0.0;
    }
    return rep;
}

}  // namespace pdereg
