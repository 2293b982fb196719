#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pdereg/errors.hpp"
#include "pdereg/experiments.hpp"

namespace pdereg {

// Minimal flat TOML-style reader: [section] headers, key = value lines,
// '#' comments. Values: quoted strings, numbers, booleans, [v1, v2, ...].
class ConfigFile {
  public:
    static ConfigFile parse(const std::string& text) {
        ConfigFile cf;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                require(line.back() == ']', "config: bad section header at line " + std::to_string(lineno));
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            require(eq != std::string::npos, "config: expected key = value at line " + std::to_string(lineno));
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            require(!key.empty(), "config: empty key at line " + std::to_string(lineno));
            cf.entries_[section.empty() ? key : section + "." + key] = value;
        }
        return cf;
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string get_string(const std::string& key) const {
        std::string v = raw(key);
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
        return v;
    }

    double get_double(const std::string& key) const {
        try {
            return std::stod(raw(key));
        } catch (const std::exception&) {
            throw invalid_argument("config: field '" + key + "' is not a number");
        }
    }

    std::int64_t get_int(const std::string& key) const {
        try {
            return std::stoll(raw(key));
        } catch (const std::exception&) {
            throw invalid_argument("config: field '" + key + "' is not an integer");
        }
    }

    bool get_bool(const std::string& key) const {
        const std::string v = raw(key);
        if (v == "true") return true;
        if (v == "false") return false;
        throw invalid_argument("config: field '" + key + "' is not a boolean");
    }

    std::vector<double> get_list(const std::string& key) const {
        std::string v = raw(key);
        require(v.size() >= 2 && v.front() == '[' && v.back() == ']',
                "config: field '" + key + "' is not a list");
        std::vector<double> out;
        std::string item;
        std::istringstream in(v.substr(1, v.size() - 2));
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            try {
                out.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw invalid_argument("config: field '" + key + "' has a non-numeric entry '" + item + "'");
            }
        }
        return out;
    }

  private:
    std::string raw(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw invalid_argument("config: missing field '" + key + "'");
        return it->second;
    }

    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, std::string> entries_;
};

// Effective run configuration: defaults, overlaid by a config file, overlaid
// by command-line flags (flags > file > defaults).
struct RunConfig {
    ProblemSpec problem;
    double lambda = 0.0;  // 0 = use the schedule
    double eps = 0.1;
    std::vector<double> eps_grid;
    int reps = 20;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out_dir = "out";
    std::string tag;  // defaults to a UTC timestamp at run time
    // stability audit
    int pairs = 50;
    double radius = 10.0;
    // concentration probe grid (relative to eps)
    std::vector<double> r_grid;

    void load_file(const ConfigFile& cf) {
        auto s = [&](const char* k, std::string& dst) { if (cf.has(k)) dst = cf.get_string(k); };
        auto d = [&](const char* k, double& dst) { if (cf.has(k)) dst = cf.get_double(k); };
        auto i = [&](const char* k, int& dst) { if (cf.has(k)) dst = static_cast<int>(cf.get_int(k)); };
        s("problem.kind", problem.kind);
        i("problem.d", problem.d);
        i("problem.n", problem.n);
        i("problem.alpha", problem.alpha);
        d("problem.k_min", problem.k_min);
        s("problem.link", problem.link);
        s("problem.f0", problem.f0);
        d("problem.f0_amplitude", problem.f0_amplitude);
        i("problem.n_theta", problem.n_theta);
        i("problem.n_s", problem.n_s);
        s("estimator.schedule", problem.schedule);
        d("estimator.lambda", lambda);
        i("estimator.restarts", problem.restarts);
        i("estimator.max_iterations", problem.max_iterations);
        d("estimator.grad_tol", problem.grad_tol);
        d("estimator.random_scale", problem.random_scale);
        if (cf.has("sweep.beta")) problem.beta_list = cf.get_list("sweep.beta");
        if (cf.has("sweep.eps")) eps_grid = cf.get_list("sweep.eps");
        i("sweep.reps", reps);
        d("noise.eps", eps);
        if (cf.has("noise.seed")) seed = static_cast<std::uint64_t>(cf.get_int("noise.seed"));
        i("run.jobs", jobs);
        s("output.dir", out_dir);
        s("output.tag", tag);
        i("stability.pairs", pairs);
        d("stability.radius", radius);
        if (cf.has("probe.r_grid")) r_grid = cf.get_list("probe.r_grid");
    }

    // Canonical serialization used for the provenance fingerprint; excludes
    // the output directory and tag so file placement does not change the hash.
    std::string canonical() const {
        std::ostringstream out;
        out.precision(17);
        out << "kind=" << problem.kind << "\nd=" << problem.d << "\nn=" << problem.n
            << "\nalpha=" << problem.alpha << "\nk_min=" << problem.k_min << "\nlink=" << problem.link
            << "\nf0=" << problem.f0 << "\nf0_amplitude=" << problem.f0_amplitude
            << "\nschedule=" << problem.schedule_name() << "\nlambda=" << lambda << "\neps=" << eps
            << "\nreps=" << reps << "\nseed=" << seed << "\nn_theta=" << problem.n_theta
            << "\nn_s=" << problem.n_s << "\nrestarts=" << problem.restarts
            << "\nmax_iterations=" << problem.max_iterations << "\ngrad_tol=" << problem.grad_tol
            << "\nrandom_scale=" << problem.random_scale << "\npairs=" << pairs << "\nradius=" << radius;
        out << "\neps_grid=";
        for (double e : eps_grid) out << e << ";";
        out << "\nbeta=";
        for (double b : problem.beta_list) out << b << ";";
        out << "\nr_grid=";
        for (double r : r_grid) out << r << ";";
        return out.str();
    }
};

}  // namespace pdereg
