#pragma once

// Differentiable, row-batched manifold operations. Each row of a matrix is
// one point (or one tangent vector at the origin) with n+1 ambient
// coordinates. The Euclidean mode swaps every map for its flat counterpart
// and exists for the hyperbolic-vs-Euclidean ablation.

#include <span>

#include "hypertopic/autodiff.hpp"
#include "hypertopic/geometry.hpp"

namespace hypertopic {

enum class Space { hyperbolic, euclidean };

class Manifold {
public:
    Manifold() = default;
    Manifold(Space mode, geometry::Curvature K) : mode_(mode), K_(K) {}

    Space mode() const { return mode_; }
    geometry::Curvature curvature() const { return K_; }
    bool hyperbolic() const { return mode_ == Space::hyperbolic; }

    // Column 0 of `tangent` is discarded (projection onto T_0).
    ad::Var exp0(ad::Var tangent) const;
    ad::Var log0(ad::Var points) const;

    // exp_base(tangent), row by row.
    ad::Var exp_at(ad::Var base, ad::Var tangent) const;

    // exp_z(PT_{0->z}([0 || bias])) for every row z; bias is 1 x n.
    ad::Var translate(ad::Var points, ad::Var bias) const;

    // exp0(f(log0(x))) with f = tanh.
    ad::Var tanh_activation(ad::Var points) const;

    // Pairwise squared distances, rows(X) x rows(Y).
    ad::Var sqdist(ad::Var X, ad::Var Y) const;

    // Plain-value helpers shared with evaluation.
    double sqdist(std::span<const double> x, std::span<const double> y) const;
    ad::Matrix exp0_value(const ad::Matrix& tangent) const;

private:
    Space mode_ = Space::hyperbolic;
    geometry::Curvature K_{};
};

// Series-stable scalar helpers of q = r^2 used by the maps; exposed for tests.
namespace manifold_detail {
struct Pair {
    double value;
    double dq;  // derivative with respect to q
};
Pair cosh_sqrt(double q, double K);    // cosh(sqrt(q/K))
Pair sinhc_sqrt(double q, double K);   // sqrt(K) sinh(sqrt(q/K)) / sqrt(q)
Pair asinhc_sqrt(double q, double K);  // sqrt(K) asinh(sqrt(q/K)) / sqrt(q)
Pair acosh_sq(double a, double K);     // K acosh(a)^2, derivative w.r.t. a
}  // namespace manifold_detail

}  // namespace hypertopic
