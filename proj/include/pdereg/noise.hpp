#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>

#include "pdereg/errors.hpp"
#include "pdereg/grid.hpp"
#include "pdereg/rng.hpp"

namespace pdereg {

// Where an observation lives; round-trips through JSON.
struct SpaceDesc {
    std::string kind;  // "grid" | "sinogram"
    int d = 0, n = 0;
    std::string shape;
    int n_theta = 0, n_s = 0;

    static SpaceDesc grid(const Domain& dom) {
        return SpaceDesc{"grid", dom.dimension(), dom.n(), shape_name(dom.shape()), 0, 0};
    }
    static SpaceDesc sinogram(int n_theta, int n_s, int domain_n) {
        return SpaceDesc{"sinogram", 2, domain_n, "disc", n_theta, n_s};
    }
    bool operator==(const SpaceDesc&) const = default;
};

// Discrete white-noise observation Y = u + eps * w^{-1/2} * z with z iid
// standard normal and w the quadrature weight of each entry, so that
// <Y,psi> ~ N(<u,psi>, eps^2 ||psi||^2) for every psi in the output space.
struct Observation {
    Eigen::VectorXd values;
    Eigen::VectorXd weights;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    SpaceDesc space;
};

inline Observation synthesize(const Eigen::VectorXd& u, const Eigen::VectorXd& weights, double epsilon,
                              std::uint64_t seed, SpaceDesc space) {
    require(epsilon > 0.0, "synthesize: epsilon must be > 0");
    require(u.size() == weights.size(), "synthesize: weight shape mismatch");
    Observation obs;
    obs.values.resize(u.size());
    for (int i = 0; i < u.size(); ++i)
        obs.values[i] = u[i] + epsilon / std::sqrt(weights[i]) * rng::normal(seed, static_cast<std::uint64_t>(i));
    obs.weights = weights;
    obs.epsilon = epsilon;
    obs.seed = seed;
    obs.space = std::move(space);
    return obs;
}

inline Observation synthesize(const GridFunction& u, double epsilon, std::uint64_t seed) {
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(u.values.size(), u.domain->cell_volume());
    return synthesize(u.values, w, epsilon, seed, SpaceDesc::grid(*u.domain));
}

// Quadrature-weighted pairing <Y, psi>.
inline double pairing(const Observation& obs, const Eigen::VectorXd& psi) {
    require(psi.size() == obs.values.size(), "pairing: shape mismatch");
    return obs.values.cwiseProduct(obs.weights).dot(psi);
}

inline double pairing(const Observation& obs, const GridFunction& psi) {
    require(obs.space.kind == "grid", "pairing: observation is not on a grid space");
    return pairing(obs, psi.values);
}

inline double weighted_norm_sq(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
    return v.cwiseProduct(w).dot(v);
}

}  // namespace pdereg
