#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "pdereg/errors.hpp"
#include "pdereg/estimator.hpp"
#include "pdereg/experiments.hpp"
#include "pdereg/grid.hpp"
#include "pdereg/noise.hpp"
#include "pdereg/radon.hpp"
#include "pdereg/sobolev.hpp"

namespace pdereg::io {

using nlohmann::json;

// FNV-1a; used as the config fingerprint embedded in every output file.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw numerical_error("io: cannot open '" + path.string() + "' for writing");
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_argument("io: cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// -- JSON conversions -------------------------------------------------------

inline json to_json(const SpaceDesc& s) {
    json j{{"kind", s.kind}};
    if (s.kind == "grid") {
        j["d"] = s.d;
        j["n"] = s.n;
        j["shape"] = s.shape;
    } else {
        j["n_theta"] = s.n_theta;
        j["n_s"] = s.n_s;
        j["domain_n"] = s.n;
    }
    return j;
}

inline SpaceDesc space_from_json(const json& j) {
    SpaceDesc s;
    s.kind = j.at("kind").get<std::string>();
    if (s.kind == "grid") {
        s.d = j.at("d").get<int>();
        s.n = j.at("n").get<int>();
        s.shape = j.at("shape").get<std::string>();
    } else if (s.kind == "sinogram") {
        s.n_theta = j.at("n_theta").get<int>();
        s.n_s = j.at("n_s").get<int>();
        s.n = j.at("domain_n").get<int>();
        s.d = 2;
        s.shape = "disc";
    } else {
        throw invalid_argument("space: unknown kind '" + s.kind + "'");
    }
    return s;
}

inline json to_json(const GridFunction& u) {
    json j;
    j["domain"] = {{"d", u.domain->dimension()}, {"n", u.domain->n()}, {"shape", shape_name(u.domain->shape())}};
    j["values"] = std::vector<double>(u.values.data(), u.values.data() + u.values.size());
    if (u.trace) j["trace"] = std::vector<double>(u.trace->data(), u.trace->data() + u.trace->size());
    return j;
}

inline GridFunction grid_function_from_json(const json& j) {
    const json& d = j.at("domain");
    auto dom = make_domain(d.at("d").get<int>(), d.at("n").get<int>(), shape_from_name(d.at("shape").get<std::string>()));
    const auto vals = j.at("values").get<std::vector<double>>();
    GridFunction g(dom, Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
    if (j.contains("trace")) {
        const auto t = j.at("trace").get<std::vector<double>>();
        g.with_trace(Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size())));
    }
    return g;
}

inline json to_json(const Observation& obs) {
    return json{{"epsilon", obs.epsilon},
                {"seed", obs.seed},
                {"space", to_json(obs.space)},
                {"values", std::vector<double>(obs.values.data(), obs.values.data() + obs.values.size())},
                {"weights", std::vector<double>(obs.weights.data(), obs.weights.data() + obs.weights.size())}};
}

inline Observation observation_from_json(const json& j) {
    Observation obs;
    obs.epsilon = j.at("epsilon").get<double>();
    obs.seed = j.at("seed").get<std::uint64_t>();
    obs.space = space_from_json(j.at("space"));
    const auto vals = j.at("values").get<std::vector<double>>();
    obs.values = Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    const auto w = j.at("weights").get<std::vector<double>>();
    obs.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    require(obs.values.size() == obs.weights.size(), "observation: weights/values length mismatch");
    return obs;
}

inline json to_json(const EstimateResult& r) {
    json restarts = json::array();
    for (const auto& t : r.restarts)
        restarts.push_back({{"index", t.index},
                            {"objective", t.objective},
                            {"grad_norm", t.grad_norm},
                            {"iterations", t.iterations},
                            {"converged", t.converged}});
    return json{{"F_hat", to_json(r.F_hat)},
                {"f_hat", to_json(r.f_hat)},
                {"u_hat", std::vector<double>(r.u_hat.data(), r.u_hat.data() + r.u_hat.size())},
                {"objective", r.objective},
                {"grad_norm", r.grad_norm},
                {"iterations", r.iterations},
                {"winner_restart", r.winner_restart},
                {"converged", r.converged},
                {"restarts", restarts}};
}

inline json to_json(const ProblemSpec& p) {
    return json{{"kind", p.kind},         {"d", p.d},
                {"n", p.n},               {"alpha", p.alpha},
                {"k_min", p.k_min},       {"link", p.link},
                {"f0", p.f0},             {"f0_amplitude", p.f0_amplitude},
                {"schedule", p.schedule_name()}, {"beta_list", p.beta_list},
                {"n_theta", p.n_theta},   {"n_s", p.n_s},
                {"restarts", p.restarts}, {"max_iterations", p.max_iterations},
                {"grad_tol", p.grad_tol}, {"random_scale", p.random_scale}};
}

inline json to_json(const RateReport& r) {
    json records = json::array();
    for (const auto& rec : r.records)
        records.push_back({{"eps", rec.eps},
                           {"rep", rec.rep},
                           {"u_err", rec.u_err},
                           {"f_err", rec.f_err},
                           {"tau2", rec.tau2},
                           {"converged", rec.converged},
                           {"iterations", rec.iterations}});
    json slopes = json::object();
    for (const auto& [k, v] : r.slopes) {
        json entry{{"slope", v.slope}, {"stderr", v.stderr_}, {"points", v.points}};
        const auto it = r.theory_exponent.find(k);
        if (it != r.theory_exponent.end()) {
            entry["theory"] = it->second;
            entry["gap"] = std::abs(std::abs(v.slope) - parse_rational(it->second).value());
        }
        slopes[k] = entry;
    }
    return json{{"problem", to_json(r.problem)},
                {"eps_grid", r.eps_grid},
                {"beta_list", r.beta_list},
                {"reps", r.reps},
                {"seed", r.seed},
                {"records", records},
                {"slopes", slopes},
                {"nonconverged_fraction", r.nonconverged_fraction},
                {"valid", r.valid}};
}

inline json to_json(const StabilityReport& r) {
    json records = json::array();
    for (const auto& rec : r.records)
        records.push_back(
            {{"f_diff", rec.f_diff}, {"u_h2", rec.u_h2}, {"f2_c1", rec.f2_c1}, {"ratio", rec.ratio}});
    return json{{"kind", r.kind},
                {"d", r.d},
                {"n", r.n},
                {"alpha", r.alpha},
                {"radius", r.radius},
                {"seed", r.seed},
                {"records", records},
                {"skipped", r.skipped},
                {"c_hat", r.c_hat},
                {"max_over_median", r.max_over_median},
                {"violation", r.violation},
                {"recover_max_err", r.recover_max_err}};
}

inline json to_json(const ConcentrationReport& r) {
    return json{{"eps", r.eps},
                {"lambda", r.lambda},
                {"reps", r.reps},
                {"seed", r.seed},
                {"r_grid", r.r_grid},
                {"thresholds", r.thresholds},
                {"p_hat", r.p_hat},
                {"envelope_c", r.envelope_c},
                {"ls_decay", r.ls_decay},
                {"tau2_center", r.tau2_center}};
}

// -- CSV ----------------------------------------------------------------------

// GridFunction: index, x[, y], value.
inline std::string grid_function_csv(const GridFunction& u) {
    std::string out = u.domain->dimension() == 1 ? "index,x,value\n" : "index,x,y,value\n";
    for (int i = 0; i < u.values.size(); ++i) {
        const auto& c = u.domain->coord(i);
        out += std::to_string(i) + "," + fmt_double(c[0]);
        if (u.domain->dimension() == 2) out += "," + fmt_double(c[1]);
        out += "," + fmt_double(u.values[i]) + "\n";
    }
    return out;
}

// Sinogram: theta, s, value, weight.
inline std::string sinogram_csv(const Sinogram& s) {
    std::string out = "theta,s,value,weight\n";
    for (int t = 0; t < s.geom.n_theta; ++t)
        for (int j = 0; j < s.geom.n_s; ++j)
            out += fmt_double(s.geom.theta(t)) + "," + fmt_double(s.geom.offset(j)) + "," +
                   fmt_double(s.values[t * s.geom.n_s + j]) + "," + fmt_double(s.geom.weight()) + "\n";
    return out;
}

// RateReport per-replicate records.
inline std::string rate_report_csv(const RateReport& r) {
    std::string out = "eps,rep,converged,iterations";
    for (double b : r.beta_list) out += "," + detail::beta_label(b);
    if (r.problem.kind == "radon") out += ",u_L2";
    out += ",f_L2,tau2\n";
    for (const auto& rec : r.records) {
        out += fmt_double(rec.eps) + "," + std::to_string(rec.rep) + "," + (rec.converged ? "1" : "0") + "," +
               std::to_string(rec.iterations);
        for (double e : rec.u_err) out += "," + fmt_double(e);
        out += "," + fmt_double(rec.f_err) + "," + fmt_double(rec.tau2) + "\n";
    }
    return out;
}

// Debug export of the metric's eigenpairs.
inline json eigenpairs_json(const SobolevMetric& m, int max_modes = 64) {
    const Eigen::VectorXd& mu = m.eigenvalues();
    const int count = std::min<int>(max_modes, static_cast<int>(mu.size()));
    json modes = json::array();
    for (int k = 0; k < count; ++k) {
        const GridFunction e = m.basis_vector(k);
        modes.push_back({{"mu", mu[k]},
                         {"vector", std::vector<double>(e.values.data(), e.values.data() + e.values.size())}});
    }
    return json{{"alpha", m.alpha()}, {"modes", modes}};
}

}  // namespace pdereg::io
