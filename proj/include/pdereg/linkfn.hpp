#pragma once

#include <cmath>
#include <string>

#include "pdereg/errors.hpp"
#include "pdereg/grid.hpp"

namespace pdereg {

// Link functions Phi: R -> (K_min, inf) with Phi(0) = 1, mapping the
// unconstrained parameter F to the positive coefficient f = Phi o F.
//
// The regular link is a scaled softplus
//   Phi(x) = K_min + (1 - K_min) * log(1 + e^x) / log 2,
// which has bounded derivatives of every order >= 1. The exponential link
// is provided for ablation only and is flagged non-regular.
class LinkFunction {
  public:
    static LinkFunction regular_softplus(double k_min) {
        require(k_min < 1.0, "link: K_min must be < 1");
        LinkFunction l;
        l.k_min_ = k_min;
        l.kind_ = Kind::softplus;
        return l;
    }

    static LinkFunction exponential() {
        LinkFunction l;
        l.k_min_ = 0.0;
        l.kind_ = Kind::exp;
        return l;
    }

    static LinkFunction by_name(const std::string& name, double k_min) {
        if (name == "regular-softplus") return regular_softplus(k_min);
        if (name == "exp") return exponential();
        throw invalid_argument("link: unknown name '" + name + "' (use regular-softplus or exp)");
    }

    double k_min() const { return k_min_; }
    bool regular() const { return kind_ == Kind::softplus; }
    std::string name() const { return kind_ == Kind::softplus ? "regular-softplus" : "exp"; }

    double value(double x) const {
        if (kind_ == Kind::exp) return std::exp(x);
        // centered around x=0 so that Phi(0) = 1 holds exactly
        return 1.0 + (1.0 - k_min_) * (softplus(x) - kLn2) / kLn2;
    }

    double deriv(double x) const {
        if (kind_ == Kind::exp) return std::exp(x);
        return (1.0 - k_min_) / kLn2 * sigmoid(x);
    }

    // Analytic k-th derivative, k in [1,4].
    double deriv_k(double x, int k) const {
        require(k >= 1 && k <= 4, "link: derivative order must be in [1,4]");
        if (kind_ == Kind::exp) return std::exp(x);
        const double s = sigmoid(x), c = (1.0 - k_min_) / kLn2;
        switch (k) {
            case 1: return c * s;
            case 2: return c * s * (1.0 - s);
            case 3: return c * s * (1.0 - s) * (1.0 - 2.0 * s);
            default: return c * s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s);
        }
    }

    double inverse(double y) const {
        if (kind_ == Kind::exp) {
            require(y > 0.0, "link: inverse argument must be > 0");
            return std::log(y);
        }
        require(y > k_min_, "link: inverse argument must exceed K_min");
        const double t = (y - k_min_) / (1.0 - k_min_) * kLn2;  // = softplus(x)
        if (t > 30.0) return t + std::log1p(-std::exp(-t));
        return std::log(std::expm1(t));
    }

  private:
    enum class Kind { softplus, exp };

    static double softplus(double x) {
        if (x == 0.0) return kLn2;
        if (x > 30.0) return x + std::log1p(std::exp(-x));
        return std::log1p(std::exp(x));
    }

    static double sigmoid(double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    }

    static constexpr double kLn2 = 0.69314718055994530941723212145818;

    double k_min_ = 0.0;
    Kind kind_ = Kind::softplus;
};

enum class LinkMode { forward, derivative, inverse };

// Pointwise application on a grid function. Forward and derivative map the
// trace as well when one is present; inverse requires values > K_min and
// names the offending node otherwise.
inline GridFunction link_eval(const LinkFunction& link, const GridFunction& F, LinkMode mode) {
    Eigen::VectorXd out(F.values.size());
    auto apply_one = [&](double x, int node) {
        switch (mode) {
            case LinkMode::forward: return link.value(x);
            case LinkMode::derivative: return link.deriv(x);
            case LinkMode::inverse:
                if (x <= link.k_min())
                    throw invalid_argument("link_eval: inverse undefined at node " + std::to_string(node) +
                                           " (value " + std::to_string(x) + " <= K_min)");
                return link.inverse(x);
        }
        return 0.0;
    };
    for (int i = 0; i < F.values.size(); ++i) out[i] = apply_one(F.values[i], i);
    GridFunction g(F.domain, std::move(out));
    if (F.trace) {
        Eigen::VectorXd t(F.trace->size());
        for (int b = 0; b < t.size(); ++b) t[b] = apply_one((*F.trace)[b], -(b + 1));
        g.trace = std::move(t);
    }
    return g;
}

// Sup of |Phi^(k)| over a dense sample of [a,b], via nested central finite
// differences of the forward map.
inline double regularity_probe(const LinkFunction& link, int k, double a, double b, int samples = 20000) {
    require(k >= 1 && k <= 4, "regularity_probe: k must be in [1,4]");
    require(b > a, "regularity_probe: empty interval");
    require(samples >= 10000, "regularity_probe: need >= 10^4 samples");
    const double step = k <= 2 ? 1e-2 : 5e-2;  // FD step, separate from the sample grid
    double sup = 0.0;
    for (int i = 0; i <= samples; ++i) {
        const double x = a + (b - a) * i / samples;
        double acc = 0.0;
        for (int j = 0; j <= k; ++j) {
            double binom = 1.0;
            for (int r = 0; r < j; ++r) binom *= static_cast<double>(k - r) / (r + 1);
            const double sign = (j % 2 == 0) ? 1.0 : -1.0;
            acc += sign * binom * link.value(x + (k / 2.0 - j) * step);
        }
        sup = std::max(sup, std::abs(acc) / std::pow(step, k));
    }
    return sup;
}

}  // namespace pdereg
