#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pdereg/errors.hpp"

namespace pdereg {

enum class Shape { interval, square, disc };

inline std::string shape_name(Shape s) {
    switch (s) {
        case Shape::interval: return "interval";
        case Shape::square: return "square";
        case Shape::disc: return "disc";
    }
    return "?";
}

inline Shape shape_from_name(const std::string& s) {
    if (s == "interval") return Shape::interval;
    if (s == "square") return Shape::square;
    if (s == "disc") return Shape::disc;
    throw invalid_argument("shape: unknown name '" + s + "'");
}

class Domain;
using DomainPtr = std::shared_ptr<const Domain>;

// Uniform tensor lattice on the unit interval, unit square or the unit disc
// (disc = masked square lattice over the bounding box [-1,1]^2). Interior
// nodes carry unknowns; boundary nodes are the lattice points adjacent to an
// interior node that are not interior themselves, and carry Dirichlet data.
class Domain {
  public:
    struct Neighbor {
        std::int32_t index;  // interior index or boundary index
        bool is_interior;
    };

    static DomainPtr make(int d, int n, Shape shape) {
        require(n >= 3, "domain: n must be >= 3 (stencil underdetermined)");
        require(d == 1 || d == 2, "domain: d must be 1 or 2");
        if (shape == Shape::interval) require(d == 1, "domain: interval requires d=1");
        if (shape != Shape::interval) require(d == 2, "domain: square/disc require d=2");
        return DomainPtr(new Domain(d, n, shape));
    }

    int dimension() const { return d_; }
    int n() const { return n_; }
    Shape shape() const { return shape_; }
    double h() const { return h_; }
    double cell_volume() const { return d_ == 1 ? h_ : h_ * h_; }
    int interior_count() const { return static_cast<int>(coords_.size()); }
    int boundary_count() const { return static_cast<int>(bcoords_.size()); }

    const std::array<double, 2>& coord(int i) const { return coords_[i]; }
    const std::array<double, 2>& boundary_coord(int b) const { return bcoords_[b]; }

    // Exactly 2d stencil neighbors per interior node.
    const Neighbor* neighbors(int i) const { return stencil_.data() + 2 * d_ * i; }
    int degree() const { return 2 * d_; }

    // Lattice index (i[,j] in [0,n)) -> interior index, or -1 if masked out.
    int interior_index(int i, int j = 0) const {
        if (i < 0 || i >= n_ || j < 0 || j >= n_) return -1;
        return lattice_to_interior_[static_cast<std::size_t>(i) * (d_ == 2 ? n_ : 1) + (d_ == 2 ? j : 0)];
    }

    const std::array<int, 2>& lattice_of(int interior) const { return lattice_[interior]; }

    bool same_as(const Domain& o) const { return d_ == o.d_ && n_ == o.n_ && shape_ == o.shape_; }

  private:
    Domain(int d, int n, Shape shape) : d_(d), n_(n), shape_(shape) {
        h_ = (shape == Shape::disc ? 2.0 : 1.0) / (n + 1);
        lo_ = shape == Shape::disc ? -1.0 : 0.0;
        build();
    }

    double x_of(int i) const { return lo_ + (i + 1) * h_; }

    bool inside(int i, int j) const {
        if (shape_ != Shape::disc) return true;
        const double x = x_of(i), y = x_of(j);
        return x * x + y * y < 1.0;  // strict inequality at lattice points
    }

    void build() {
        const int cells = d_ == 1 ? n_ : n_ * n_;
        lattice_to_interior_.assign(cells, -1);
        if (d_ == 1) {
            for (int i = 0; i < n_; ++i) {
                lattice_to_interior_[i] = static_cast<int>(lattice_.size());
                lattice_.push_back({i, 0});
                coords_.push_back({x_of(i), 0.0});
            }
        } else {
            for (int i = 0; i < n_; ++i)
                for (int j = 0; j < n_; ++j)
                    if (inside(i, j)) {
                        lattice_to_interior_[static_cast<std::size_t>(i) * n_ + j] = static_cast<int>(lattice_.size());
                        lattice_.push_back({i, j});
                        coords_.push_back({x_of(i), x_of(j)});
                    }
        }
        if (shape_ == Shape::disc) {
            require(!lattice_.empty(), "domain: disc mask is empty");
            for (const auto& ij : lattice_)  // mask symmetric under x -> -x
                if (interior_index(n_ - 1 - ij[0], n_ - 1 - ij[1]) < 0)
                    throw invalid_argument("domain: disc mask not point-symmetric");
        }

        // Boundary nodes: first-seen order while scanning interior stencils.
        const int deg = 2 * d_;
        stencil_.resize(static_cast<std::size_t>(deg) * lattice_.size());
        std::vector<int> bmap;  // encoded lattice key -> boundary index
        const int span = n_ + 2;
        bmap.assign(static_cast<std::size_t>(span) * (d_ == 2 ? span : 1), -1);
        auto bkey = [&](int i, int j) { return (i + 1) * (d_ == 2 ? span : 1) + (d_ == 2 ? (j + 1) : 0); };
        for (std::size_t p = 0; p < lattice_.size(); ++p) {
            const int i = lattice_[p][0], j = lattice_[p][1];
            for (int a = 0; a < deg; ++a) {
                int ni = i, nj = j;
                if (a == 0) ni = i - 1;
                else if (a == 1) ni = i + 1;
                else if (a == 2) nj = j - 1;
                else nj = j + 1;
                const int q = interior_index(ni, nj);
                if (q >= 0) {
                    stencil_[deg * p + a] = Neighbor{q, true};
                } else {
                    int& b = bmap[bkey(ni, nj)];
                    if (b < 0) {
                        b = static_cast<int>(bcoords_.size());
                        bcoords_.push_back({x_of(ni), d_ == 2 ? x_of(nj) : 0.0});
                    }
                    stencil_[deg * p + a] = Neighbor{b, false};
                }
            }
        }
    }

    int d_, n_;
    Shape shape_;
    double h_, lo_;
    std::vector<int> lattice_to_interior_;
    std::vector<std::array<int, 2>> lattice_;
    std::vector<std::array<double, 2>> coords_, bcoords_;
    std::vector<Neighbor> stencil_;
};

inline DomainPtr make_domain(int d, int n, Shape shape) { return Domain::make(d, n, shape); }

// Real-valued function on the interior nodes of a domain, with an optional
// Dirichlet trace on the boundary nodes.
struct GridFunction {
    DomainPtr domain;
    Eigen::VectorXd values;
    std::optional<Eigen::VectorXd> trace;

    GridFunction() = default;
    GridFunction(DomainPtr dom, Eigen::VectorXd vals) : domain(std::move(dom)), values(std::move(vals)) {
        require(domain != nullptr, "grid function: null domain");
        require(values.size() == domain->interior_count(), "grid function: value length mismatch");
        require(values.allFinite(), "grid function: non-finite values");
    }

    static GridFunction zero(DomainPtr dom) {
        const int m = dom ? dom->interior_count() : 0;
        return GridFunction(std::move(dom), Eigen::VectorXd::Zero(m));
    }

    static GridFunction constant(DomainPtr dom, double c) {
        const int m = dom->interior_count();
        return GridFunction(std::move(dom), Eigen::VectorXd::Constant(m, c));
    }

    template <class Fn>
    static GridFunction from_function(DomainPtr dom, Fn fn) {
        Eigen::VectorXd v(dom->interior_count());
        for (int i = 0; i < dom->interior_count(); ++i) {
            const auto& c = dom->coord(i);
            if (dom->dimension() == 1) v[i] = fn(c[0], 0.0);
            else v[i] = fn(c[0], c[1]);
        }
        return GridFunction(std::move(dom), std::move(v));
    }

    GridFunction& with_trace(Eigen::VectorXd t) {
        require(t.size() == domain->boundary_count(), "grid function: trace length mismatch");
        trace = std::move(t);
        return *this;
    }

    GridFunction& with_constant_trace(double c) {
        trace = Eigen::VectorXd::Constant(domain->boundary_count(), c);
        return *this;
    }

    template <class Fn>
    GridFunction& with_trace_function(Fn fn) {
        Eigen::VectorXd t(domain->boundary_count());
        for (int b = 0; b < domain->boundary_count(); ++b) {
            const auto& c = domain->boundary_coord(b);
            t[b] = fn(c[0], domain->dimension() == 1 ? 0.0 : c[1]);
        }
        trace = std::move(t);
        return *this;
    }

    double trace_at(int b) const { return trace ? (*trace)[b] : 0.0; }
    bool zero_boundary() const { return !trace || trace->lpNorm<Eigen::Infinity>() == 0.0; }
};

inline void require_same_domain(const GridFunction& u, const GridFunction& v, const char* what) {
    require(u.domain && v.domain && u.domain->same_as(*v.domain), std::string(what) + ": domain mismatch");
}

// Discrete L2 pairing <u,v>_h = h^d sum_i u_i v_i.
inline double inner_product(const GridFunction& u, const GridFunction& v) {
    require_same_domain(u, v, "inner_product");
    return u.domain->cell_volume() * u.values.dot(v.values);
}

inline double norm_h(const GridFunction& u) { return std::sqrt(u.domain->cell_volume()) * u.values.norm(); }

// (Delta_h u)_i = h^-2 sum_{j~i} (u_j - u_i); stencil reads the boundary
// trace where present and extends by zero otherwise.
inline GridFunction laplacian_apply(const GridFunction& u) {
    const Domain& dom = *u.domain;
    const double inv_h2 = 1.0 / (dom.h() * dom.h());
    const int deg = dom.degree();
    Eigen::VectorXd out(dom.interior_count());
    for (int i = 0; i < dom.interior_count(); ++i) {
        const auto* nb = dom.neighbors(i);
        double acc = -deg * u.values[i];
        for (int a = 0; a < deg; ++a) acc += nb[a].is_interior ? u.values[nb[a].index] : u.trace_at(nb[a].index);
        out[i] = inv_h2 * acc;
    }
    return GridFunction(u.domain, std::move(out));
}

inline double sup_norm(const GridFunction& u) { return u.values.lpNorm<Eigen::Infinity>(); }

// Discrete C^k surrogate: sum over orders 0..k of the max finite-difference
// magnitude. Differences are one-sided next to the boundary so no trace
// convention is assumed; k <= 2.
inline double ck_norm(const GridFunction& u, int k) {
    require(k >= 0 && k <= 2, "ck_norm: k must be in [0,2]");
    const Domain& dom = *u.domain;
    double total = sup_norm(u);
    if (k == 0) return total;
    const double inv_h = 1.0 / dom.h();
    auto value_at = [&](int i, int j) -> std::optional<double> {
        const int q = dom.interior_index(i, j);
        if (q < 0) return std::nullopt;
        return u.values[q];
    };
    double grad_max = 0.0, second_max = 0.0;
    for (int p = 0; p < dom.interior_count(); ++p) {
        const auto ij = dom.lattice_of(p);
        double g2 = 0.0;
        for (int axis = 0; axis < dom.dimension(); ++axis) {
            const int di = axis == 0 ? 1 : 0, dj = axis == 0 ? 0 : 1;
            const auto um = value_at(ij[0] - di, ij[1] - dj);
            const auto up = value_at(ij[0] + di, ij[1] + dj);
            double d1 = 0.0;
            if (um && up) d1 = (*up - *um) * 0.5 * inv_h;
            else if (up) d1 = (*up - u.values[p]) * inv_h;
            else if (um) d1 = (u.values[p] - *um) * inv_h;
            g2 += d1 * d1;
            if (k >= 2 && um && up) {
                const double d2 = (*up - 2.0 * u.values[p] + *um) * inv_h * inv_h;
                second_max = std::max(second_max, std::abs(d2));
            }
        }
        grad_max = std::max(grad_max, std::sqrt(g2));
    }
    total += grad_max;
    if (k >= 2) total += second_max;
    return total;
}

// C1 surrogate used by the stability estimates: max |f| + max gradient.
inline double c1_norm(const GridFunction& u) { return ck_norm(u, 1); }

}  // namespace pdereg
