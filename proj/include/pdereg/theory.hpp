#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pdereg/errors.hpp"
#include "pdereg/rational.hpp"

namespace pdereg::theory {

// (kappa, gamma, alpha)-regularity profile of a forward map on a d-dimensional
// domain; s = (alpha + kappa) / d drives every exponent.
struct RegularityProfile {
    int alpha = 2;
    Rational kappa{1};
    double gamma = 0.0;
    int d = 1;

    void validate() const {
        require(alpha >= 1, "profile: alpha must be a positive integer");
        require(d == 1 || d == 2, "profile: d must be 1 or 2");
        require(kappa.value() >= 0.0 && gamma >= 0.0, "profile: kappa, gamma must be nonnegative");
        const double bound = std::max(d / 2.0 - kappa.value(), gamma * d / 2.0 - kappa.value());
        require(alpha > bound, "profile: alpha must exceed (d/2 - kappa) v (gamma d/2 - kappa)");
    }

    Rational s_rational() const { return (Rational(alpha) + kappa) / Rational(d); }
    double s() const { return s_rational().value(); }
};

inline RegularityProfile divergence_profile(int alpha, int d) { return {alpha, Rational(1), 4.0, d}; }
inline RegularityProfile schrodinger_profile(int alpha, int d) { return {alpha, Rational(2), 4.0, d}; }
inline RegularityProfile radon_profile(int alpha) { return {alpha, Rational(1, 2), 0.0, 2}; }

enum class RateTarget { prediction, div_f, schr_f, div_lower, radon_f, generic };

inline RateTarget rate_target_from_name(const std::string& s) {
    if (s == "prediction") return RateTarget::prediction;
    if (s == "div_f") return RateTarget::div_f;
    if (s == "schr_f") return RateTarget::schr_f;
    if (s == "div_lower") return RateTarget::div_lower;
    if (s == "radon_f") return RateTarget::radon_f;
    if (s == "generic") return RateTarget::generic;
    throw invalid_argument("rate target: unknown name '" + s + "'");
}

// Exact rational convergence-rate exponent in epsilon.
inline Rational rate_exponent(const RegularityProfile& p, RateTarget target,
                              std::optional<Rational> beta = std::nullopt) {
    p.validate();
    const Rational a(p.alpha), d(p.d), two(2);
    switch (target) {
        case RateTarget::generic:
            return two * (a + p.kappa) / (two * (a + p.kappa) + d);
        case RateTarget::prediction: {
            const Rational b = beta.value_or(Rational(0));
            require(Rational(0) <= b && b <= a + p.kappa, "rate_exponent: beta out of range");
            return two * (a + p.kappa - b) / (two * (a + p.kappa) + d);
        }
        case RateTarget::div_f:
        case RateTarget::div_lower:
            return two * (a - Rational(1)) / (two * (a + Rational(1)) + d);
        case RateTarget::schr_f:
            return two * a / (two * (a + Rational(2)) + d);
        case RateTarget::radon_f:
            return two * a / (two * a + Rational(3));
    }
    throw invalid_argument("rate_exponent: bad target");
}

// Metric-entropy bound (R m / (lambda rho))^{1/s} with m = C (1 + (R/lambda)^gamma).
inline double entropy_bound(double rho, double R, double lambda, const RegularityProfile& p, double C = 1.0) {
    require(rho > 0 && R > 0 && lambda > 0 && C > 0, "entropy_bound: arguments must be positive");
    const double m = C * (1.0 + std::pow(R / lambda, p.gamma));
    return std::pow(R * m / (lambda * rho), 1.0 / p.s());
}

// Majorant of the Dudley integral: Psi(lambda, R) = R + c R lambda^{-1/(2s)} (1 + (R/lambda)^{gamma/(2s)}).
inline double dudley_majorant(double lambda, double R, const RegularityProfile& p, double c = 1.0) {
    require(lambda > 0 && R > 0 && c >= 0, "dudley_majorant: arguments must be positive");
    const double s2 = 2.0 * p.s();
    return R + c * R * std::pow(lambda, -1.0 / s2) * (1.0 + std::pow(R / lambda, p.gamma / s2));
}

// Smallest delta satisfying the critical-radius inequality
//   delta / eps >= c1 (1 + lambda^{-1/(2s)} (1 + (delta/lambda)^{gamma/(2s)})),
// by bisection to relative width 1e-9. The right side grows sublinearly in
// delta (gamma/(2s) < 1 under the profile hypothesis), so the smallest
// solution is the unique fixed point.
inline double critical_delta(double eps, double lambda, const RegularityProfile& p, double c1 = 1.0) {
    require(eps > 0 && lambda > 0 && c1 > 0, "critical_delta: arguments must be positive");
    p.validate();
    const double s2 = 2.0 * p.s();
    const double q = p.gamma / s2;
    auto rhs = [&](double delta) {
        return c1 * eps * (1.0 + std::pow(lambda, -1.0 / s2) * (1.0 + std::pow(delta / lambda, q)));
    };
    double hi = eps;
    int guard = 0;
    while (hi < rhs(hi)) {
        hi *= 2.0;
        if (++guard > 400) throw numerical_error("critical_delta: no finite solution within bracket budget");
    }
    double lo = 0.0;
    while ((hi - lo) > 1e-9 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid >= rhs(mid)) hi = mid;
        else lo = mid;
    }
    return hi;
}

}  // namespace pdereg::theory
