#pragma once

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pdereg/config.hpp"
#include "pdereg/errors.hpp"
#include "pdereg/estimator.hpp"
#include "pdereg/experiments.hpp"
#include "pdereg/io.hpp"
#include "pdereg/theory.hpp"

namespace pdereg::cli {

namespace detail {

inline std::string utc_tag() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

struct Flags {
    std::string config_path;
    std::optional<std::string> kind, link, f0, schedule, out_dir, tag, obs_path;
    std::optional<int> d, n, alpha, reps, jobs, n_theta, n_s, restarts, max_iterations, pairs;
    std::optional<double> k_min, f0_amplitude, lambda, eps, grad_tol, random_scale, radius;
    std::optional<std::uint64_t> seed;
    std::vector<double> eps_grid, beta_list;
};

inline void add_common_flags(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config_path, "config file (TOML-style key = value sections)");
    app->add_option("--kind", f.kind, "problem kind: divergence | schrodinger | radon");
    app->add_option("--d", f.d, "domain dimension (1 or 2)");
    app->add_option("--n", f.n, "interior nodes per axis");
    app->add_option("--alpha", f.alpha, "penalty smoothness order");
    app->add_option("--k-min", f.k_min, "link range lower bound");
    app->add_option("--link", f.link, "link name: regular-softplus | exp");
    app->add_option("--f0", f.f0, "truth profile: sine-mix | tensor-mix | poly-bump | zero");
    app->add_option("--f0-amplitude", f.f0_amplitude, "truth amplitude");
    app->add_option("--lambda", f.lambda, "explicit regularization parameter");
    app->add_option("--schedule", f.schedule, "lambda schedule: divergence | schrodinger | radon | map");
    app->add_option("--eps", f.eps, "noise level");
    app->add_option("--eps-grid", f.eps_grid, "noise levels for sweeps")->delimiter(',');
    app->add_option("--beta", f.beta_list, "loss orders for sweep reports")->delimiter(',');
    app->add_option("--reps", f.reps, "replicates per noise level");
    app->add_option("--seed", f.seed, "base seed");
    app->add_option("--jobs", f.jobs, "worker count");
    app->add_option("--out", f.out_dir, "output directory (default $PDEREG_OUTDIR or ./out)");
    app->add_option("--tag", f.tag, "output filename tag (default: UTC timestamp)");
    app->add_option("--n-theta", f.n_theta, "radon: angle count");
    app->add_option("--n-s", f.n_s, "radon: offset count");
    app->add_option("--restarts", f.restarts, "estimator restarts");
    app->add_option("--max-iterations", f.max_iterations, "estimator iteration budget");
    app->add_option("--grad-tol", f.grad_tol, "estimator gradient tolerance");
    app->add_option("--random-scale", f.random_scale, "restart perturbation scale");
    app->add_option("--pairs", f.pairs, "stability audit pair count");
    app->add_option("--radius", f.radius, "stability audit H^alpha ball radius");
    app->add_option("--obs", f.obs_path, "observation JSON (estimate subcommand)");
}

inline RunConfig resolve(const Flags& f) {
    RunConfig cfg;
    if (const char* env = std::getenv("PDEREG_OUTDIR")) cfg.out_dir = env;
    if (!f.config_path.empty()) cfg.load_file(ConfigFile::parse(io::read_file(f.config_path)));
    auto ov = [](auto& dst, const auto& src) { if (src) dst = *src; };
    ov(cfg.problem.kind, f.kind);
    ov(cfg.problem.d, f.d);
    ov(cfg.problem.n, f.n);
    ov(cfg.problem.alpha, f.alpha);
    ov(cfg.problem.k_min, f.k_min);
    ov(cfg.problem.link, f.link);
    ov(cfg.problem.f0, f.f0);
    ov(cfg.problem.f0_amplitude, f.f0_amplitude);
    ov(cfg.problem.schedule, f.schedule);
    ov(cfg.problem.n_theta, f.n_theta);
    ov(cfg.problem.n_s, f.n_s);
    ov(cfg.problem.restarts, f.restarts);
    ov(cfg.problem.max_iterations, f.max_iterations);
    ov(cfg.problem.grad_tol, f.grad_tol);
    ov(cfg.problem.random_scale, f.random_scale);
    ov(cfg.lambda, f.lambda);
    ov(cfg.eps, f.eps);
    ov(cfg.reps, f.reps);
    ov(cfg.seed, f.seed);
    ov(cfg.jobs, f.jobs);
    ov(cfg.out_dir, f.out_dir);
    ov(cfg.tag, f.tag);
    ov(cfg.pairs, f.pairs);
    ov(cfg.radius, f.radius);
    if (!f.eps_grid.empty()) cfg.eps_grid = f.eps_grid;
    if (!f.beta_list.empty()) cfg.problem.beta_list = f.beta_list;
    if (cfg.problem.kind == "radon" && f.f0 == std::nullopt && cfg.problem.f0 == "sine-mix")
        cfg.problem.f0 = "poly-bump";  // kind-appropriate default truth
    if (cfg.problem.kind == "radon") cfg.problem.d = 2;
    if (cfg.tag.empty()) cfg.tag = utc_tag();
    return cfg;
}

inline double resolve_lambda(const RunConfig& cfg, double eps) {
    if (cfg.lambda > 0.0) return cfg.lambda;
    return lambda_schedule(cfg.problem.schedule_name(), eps, cfg.problem.alpha, cfg.problem.d);
}

inline std::string base_name(const RunConfig& cfg) {
    return cfg.problem.kind + "-" + std::to_string(cfg.problem.d) + "d-a" + std::to_string(cfg.problem.alpha) +
           "-" + cfg.tag;
}

inline void write_json(const RunConfig& cfg, const std::string& stem, io::json j) {
    j["config_fingerprint"] = io::hex64(io::fnv1a64(cfg.canonical()));
    const std::filesystem::path path = std::filesystem::path(cfg.out_dir) / (stem + ".json");
    io::write_file(path, j.dump(2) + "\n");
    std::cout << "wrote " << path.string() << "\n";
}

inline void write_text(const RunConfig& cfg, const std::string& stem, const std::string& ext,
                       const std::string& content) {
    const std::filesystem::path path = std::filesystem::path(cfg.out_dir) / (stem + ext);
    io::write_file(path, content);
    std::cout << "wrote " << path.string() << "\n";
}

// Builds the forward problem pieces shared by simulate/estimate.
struct PdePieces {
    DomainPtr dom;
    SobolevMetric metric;
    LinkFunction link;
    PdeModel model;
    GridFunction F0, f0, u0;
};

inline PdePieces build_pde(const RunConfig& cfg) {
    const ProblemSpec& p = cfg.problem;
    p.validate();
    require(p.kind != "radon", "internal: pde pieces on radon problem");
    auto dom = make_domain(p.d, p.n, p.shape());
    SobolevMetric metric(dom, p.alpha);
    LinkFunction link = LinkFunction::by_name(p.link, p.k_min);
    PdeModel model = p.kind == "divergence" ? PdeModel::divergence(GridFunction::constant(dom, 1.0))
                                            : PdeModel::schrodinger(dom, 1.0);
    GridFunction F0 = make_truth(p.f0, p.f0_amplitude, metric);
    GridFunction f0 = link_eval(link, F0, LinkMode::forward);
    GridFunction u0 = model.solve(f0).u();
    return PdePieces{dom, std::move(metric), link, std::move(model), std::move(F0), std::move(f0), std::move(u0)};
}

// -- subcommand bodies --------------------------------------------------------

struct TheoryFlags {
    int alpha = 2;
    std::string kappa = "1";
    double gamma = 4.0;
    int d = 1;
    std::vector<double> beta_list;
    std::vector<std::string> profiles;  // "alpha,kappa,gamma,d", repeatable
};

inline int cmd_theory(const TheoryFlags& f) {
    using namespace theory;
    std::vector<RegularityProfile> list;
    for (const std::string& p : f.profiles) {
        std::istringstream in(p);
        std::string a, k, g, d;
        std::getline(in, a, ',');
        std::getline(in, k, ',');
        std::getline(in, g, ',');
        std::getline(in, d, ',');
        require(!d.empty(), "theory: --profile must be alpha,kappa,gamma,d");
        list.push_back({std::stoi(a), parse_rational(k), std::stod(g), std::stoi(d)});
    }
    if (list.empty()) list.push_back({f.alpha, parse_rational(f.kappa), f.gamma, f.d});
    const std::vector<double> betas = f.beta_list.empty() ? std::vector<double>{0.0, 1.0, 2.0} : f.beta_list;
    std::string csv = "alpha,kappa,gamma,d,target,beta,exponent,value\n";
    for (const auto& p : list) {
        p.validate();
        auto row = [&](const std::string& target, const std::string& beta, const Rational& e) {
            csv += std::to_string(p.alpha) + "," + p.kappa.str() + "," + io::fmt_double(p.gamma) + "," +
                   std::to_string(p.d) + "," + target + "," + beta + "," + e.str() + "," +
                   io::fmt_double(e.value()) + "\n";
        };
        row("generic", "", rate_exponent(p, RateTarget::generic));
        for (double b : betas)
            row("prediction", io::fmt_double(b), rate_exponent(p, RateTarget::prediction, rational_from_double(b)));
        if (p.kappa == Rational(1)) {
            row("div_f", "", rate_exponent(p, RateTarget::div_f));
            row("div_lower", "", rate_exponent(p, RateTarget::div_lower));
        }
        if (p.kappa == Rational(2)) row("schr_f", "", rate_exponent(p, RateTarget::schr_f));
        if (p.kappa == Rational(1, 2) && p.d == 2) row("radon_f", "", rate_exponent(p, RateTarget::radon_f));
    }
    std::cout << csv;
    return 0;
}

inline int cmd_simulate(const RunConfig& cfg) {
    const std::string stem = "obs-" + base_name(cfg);
    if (cfg.problem.kind == "radon") {
        auto dom = make_domain(2, cfg.problem.n, Shape::disc);
        SobolevMetric metric(dom, cfg.problem.alpha);
        RadonGeometry geom = RadonGeometry::make(dom, cfg.problem.n_theta, cfg.problem.n_s);
        GridFunction F0 = make_truth(cfg.problem.f0, cfg.problem.f0_amplitude, metric);
        Sinogram y0 = radon_forward(F0, geom);
        Observation obs = synthesize(y0.values, y0.weights(), cfg.eps, cfg.seed,
                                     SpaceDesc::sinogram(geom.n_theta, geom.n_s, dom->n()));
        write_json(cfg, stem, io::to_json(obs));
        write_text(cfg, "truth-" + base_name(cfg), ".csv", io::grid_function_csv(F0));
        write_text(cfg, "sino-" + base_name(cfg), ".csv", io::sinogram_csv(y0));
        return 0;
    }
    PdePieces pp = build_pde(cfg);
    Observation obs = synthesize(pp.u0, cfg.eps, cfg.seed);
    write_json(cfg, stem, io::to_json(obs));
    write_text(cfg, "truth-" + base_name(cfg), ".csv", io::grid_function_csv(pp.f0));
    write_text(cfg, "u0-" + base_name(cfg), ".csv", io::grid_function_csv(pp.u0));
    return 0;
}

inline int cmd_estimate(const RunConfig& cfg, const std::string& obs_path) {
    require(!obs_path.empty(), "estimate: --obs observation file is required");
    Observation obs = io::observation_from_json(io::json::parse(io::read_file(obs_path)));
    const double lambda = resolve_lambda(cfg, obs.epsilon);
    EstimateResult result;
    if (cfg.problem.kind == "radon") {
        require(obs.space.kind == "sinogram", "estimate: field problem.kind=radon but observation space is grid");
        require(obs.space.n_theta == cfg.problem.n_theta && obs.space.n_s == cfg.problem.n_s &&
                obs.space.n == cfg.problem.n,
                "estimate: observation space does not match problem.n/n_theta/n_s");
        auto dom = make_domain(2, cfg.problem.n, Shape::disc);
        SobolevMetric metric(dom, cfg.problem.alpha);
        RadonGeometry geom = RadonGeometry::make(dom, cfg.problem.n_theta, cfg.problem.n_s);
        RidgeSolver solver(geom, metric, lambda);
        EstimatorConfig ec;
        ec.lambda = lambda;
        result = estimate(obs, solver, metric, ec);
    } else {
        PdePieces pp = build_pde(cfg);
        require(obs.space == SpaceDesc::grid(*pp.dom),
                "estimate: observation space does not match problem.d/n/shape");
        EstimatorConfig ec;
        ec.lambda = lambda;
        ec.restarts = cfg.problem.restarts;
        ec.max_iterations = cfg.problem.max_iterations;
        ec.grad_tol = cfg.problem.grad_tol;
        ec.random_scale = cfg.problem.random_scale;
        ec.seed = cfg.seed;
        ec.jobs = cfg.jobs;
        result = estimate(obs, pp.model, pp.link, pp.metric, ec);
    }
    io::json j = io::to_json(result);
    j["lambda"] = lambda;
    write_json(cfg, "estimate-" + base_name(cfg), j);
    write_text(cfg, "fhat-" + base_name(cfg), ".csv", io::grid_function_csv(result.f_hat));
    return 0;
}

inline int cmd_sweep(const RunConfig& cfg) {
    std::vector<double> grid = cfg.eps_grid;
    if (grid.empty())
        for (int k = 3; k <= 9; ++k) grid.push_back(std::pow(2.0, -k));
    RateReport report = rate_sweep(cfg.problem, grid, cfg.reps, cfg.seed, cfg.jobs);
    write_json(cfg, base_name(cfg), io::to_json(report));
    write_text(cfg, base_name(cfg), ".csv", io::rate_report_csv(report));
    for (const auto& [k, v] : report.slopes) {
        const auto it = report.theory_exponent.find(k);
        std::printf("%-8s slope % .4f +- %.4f  theory %s  gap %.4f\n", k.c_str(), v.slope, v.stderr_,
                    it == report.theory_exponent.end() ? "-" : it->second.c_str(),
                    it == report.theory_exponent.end()
                        ? 0.0
                        : std::abs(std::abs(v.slope) - parse_rational(it->second).value()));
    }
    if (!report.valid) std::cout << "warning: report flagged invalid (>20% non-converged replicates)\n";
    return 0;
}

inline int cmd_radon_demo(const RunConfig& cfg) {
    RunConfig c = cfg;
    c.problem.kind = "radon";
    c.problem.d = 2;
    if (c.problem.f0 == "sine-mix") c.problem.f0 = "poly-bump";
    auto dom = make_domain(2, c.problem.n, Shape::disc);
    SobolevMetric metric(dom, c.problem.alpha);
    RadonGeometry geom = RadonGeometry::make(dom, c.problem.n_theta, c.problem.n_s);
    GridFunction F0 = make_truth(c.problem.f0, c.problem.f0_amplitude, metric);
    Sinogram y0 = radon_forward(F0, geom);
    Observation obs = synthesize(y0.values, y0.weights(), c.eps, c.seed,
                                 SpaceDesc::sinogram(geom.n_theta, geom.n_s, dom->n()));
    const double lambda = resolve_lambda(c, c.eps);
    RidgeSolver solver(geom, metric, lambda);
    RidgeResult rr = solver.solve(Sinogram{geom, obs.values});
    GridFunction diff(dom, Eigen::VectorXd(rr.F.values - F0.values));
    Sinogram sdiff{geom, Eigen::VectorXd(radon_forward(rr.F, geom).values - y0.values)};
    io::json j{{"eps", c.eps},
               {"lambda", lambda},
               {"cg_iterations", rr.iterations},
               {"rel_residual", rr.rel_residual},
               {"f_err_l2", norm_h(diff)},
               {"tau2", sino_inner(sdiff, sdiff) + lambda * lambda * metric.norm_sq(rr.F, c.problem.alpha)}};
    write_json(c, "radon-demo-" + base_name(c), j);
    write_text(c, "radon-sino-" + base_name(c), ".csv", io::sinogram_csv(Sinogram{geom, obs.values}));
    write_text(c, "radon-recon-" + base_name(c), ".csv", io::grid_function_csv(rr.F));
    std::printf("radon demo: f_err %.6g, cg iterations %d\n", norm_h(diff), rr.iterations);
    return 0;
}

inline int cmd_audit_stability(const RunConfig& cfg) {
    RunConfig c = cfg;
    if (c.problem.kind == "radon") throw invalid_argument("audit-stability: field problem.kind must be a pde kind");
    if (c.problem.f0 == "sine-mix" && c.problem.d == 2) c.problem.f0 = "tensor-mix";
    StabilityReport rep = stability_audit(c.problem, c.pairs, c.radius, c.seed, c.jobs);
    write_json(c, "stability-" + base_name(c), io::to_json(rep));
    std::printf("stability audit: C_hat %.4f, max/median %.3f%s\n", rep.c_hat, rep.max_over_median,
                rep.violation ? " (VIOLATION)" : "");
    return 0;
}

}  // namespace detail

// Entry point. Exit codes: 0 success, 1 validation error (message names the
// offending field/flag), 2 numerical failure.
inline int run(int argc, const char* const* argv) {
    CLI::App app{"pdereg: elliptic PDE coefficient recovery from noisy solution data"};
    app.require_subcommand(1);
    detail::Flags flags;
    detail::TheoryFlags tf;

    CLI::App* sim = app.add_subcommand("simulate", "synthesize a noisy observation of u_{f0}");
    CLI::App* est = app.add_subcommand("estimate", "run the penalized least-squares estimator on an observation");
    CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo rate sweep over a noise-level grid");
    CLI::App* demo = app.add_subcommand("radon-demo", "sinogram synthesis and ridge reconstruction demo");
    CLI::App* theory_cmd = app.add_subcommand("theory", "print the rate-exponent table (CSV)");
    CLI::App* audit = app.add_subcommand("audit-stability", "empirical stability-constant audit");
    for (CLI::App* sub : {sim, est, sweep, demo, audit}) detail::add_common_flags(sub, flags);
    theory_cmd->add_option("--alpha", tf.alpha, "smoothness order");
    theory_cmd->add_option("--kappa", tf.kappa, "forward-map smoothing order (rational, e.g. 1/2)");
    theory_cmd->add_option("--gamma", tf.gamma, "nonlinearity growth power");
    theory_cmd->add_option("--d", tf.d, "dimension");
    theory_cmd->add_option("--beta", tf.beta_list, "prediction loss orders")->delimiter(',');
    theory_cmd->add_option("--profile", tf.profiles, "alpha,kappa,gamma,d (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help() << "\n";
        return 1;
    }

    try {
        if (theory_cmd->parsed()) return detail::cmd_theory(tf);
        RunConfig cfg = detail::resolve(flags);
        if (sim->parsed()) return detail::cmd_simulate(cfg);
        if (est->parsed()) return detail::cmd_estimate(cfg, flags.obs_path.value_or(""));
        if (sweep->parsed()) return detail::cmd_sweep(cfg);
        if (demo->parsed()) return detail::cmd_radon_demo(cfg);
        if (audit->parsed()) return detail::cmd_audit_stability(cfg);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace pdereg::cli
