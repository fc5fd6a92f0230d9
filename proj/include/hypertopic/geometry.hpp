#pragma once

// Hyperboloid model of constant curvature -1/K.
//
// Points live in R^{n+1} with <x,x>_L = -K and x0 > 0. Tangent vectors at x
// satisfy <x,v>_L = 0. These are the plain-value reference routines; the
// differentiable batched versions used by the model live in ad_ops.hpp.

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hypertopic::geometry {

using Vector = Eigen::VectorXd;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class MagnitudeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// cosh/sinh arguments (norm / sqrt(K)) above this are rejected.
inline constexpr double kMaxTangentNorm = 32.0;

class Curvature {
public:
    constexpr Curvature() = default;
    explicit Curvature(double k) : k_(k) {
        if (!(k > 0.0)) throw std::invalid_argument("curvature K must be positive");
    }
    double k() const { return k_; }
    double sqrt_k() const { return std::sqrt(k_); }

private:
    double k_ = 1.0;
};

double minkowski_inner(const Vector& a, const Vector& b);

// sqrt(max(0, <v,v>_L)).
double minkowski_norm(const Vector& v);

Vector origin(int n, Curvature K);

// [0 || b]: a tangent vector at the origin.
Vector tangent_at_origin(const Vector& b);

Vector exp_map(const Vector& x, const Vector& v, Curvature K);
Vector log_map(const Vector& x, const Vector& y, Curvature K);
double distance(const Vector& x, const Vector& y, Curvature K);

// Log-map form of the transport formula.
Vector parallel_transport(const Vector& x, const Vector& y, const Vector& v, Curvature K);

// Closed form v + <y,v>_L / (K - <x,y>_L) (x + y); smooth at x = y.
Vector parallel_transport_closed(const Vector& x, const Vector& y, const Vector& v, Curvature K);

Vector exp0(const Vector& v, Curvature K);
Vector log0(const Vector& y, Curvature K);

Vector hyp_activation(const Vector& x, const std::function<double(double)>& f, Curvature K);

// Keeps the spatial part and recomputes x0 so the point lies on the manifold.
Vector project_to_manifold(const Vector& raw, Curvature K);

// |<x,x>_L + K| / K.
double membership_error(const Vector& x, Curvature K);

}  // namespace hypertopic::geometry
