#include "hypertopic/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace hypertopic::geometry {

namespace {

void require_same_size(const Vector& a, const Vector& b, const char* what) {
    if (a.size() != b.size() || a.size() < 2) {
        throw DimensionError(std::string(what) + ": expected equal lengths >= 2, got " +
                             std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
}

}  // namespace

double minkowski_inner(const Vector& a, const Vector& b) {
    require_same_size(a, b, "minkowski_inner");
    return -a[0] * b[0] + a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
}

double minkowski_norm(const Vector& v) {
    return std::sqrt(std::max(0.0, minkowski_inner(v, v)));
}

Vector origin(int n, Curvature K) {
    Vector o = Vector::Zero(n + 1);
    o[0] = K.sqrt_k();
    return o;
}

Vector tangent_at_origin(const Vector& b) {
    Vector v(b.size() + 1);
    v[0] = 0.0;
    v.tail(b.size()) = b;
    return v;
}

Vector exp_map(const Vector& x, const Vector& v, Curvature K) {
    require_same_size(x, v, "exp_map");
    const double norm = minkowski_norm(v);
    if (norm == 0.0) return x;
    const double s = norm / K.sqrt_k();
    if (s > kMaxTangentNorm) {
        throw MagnitudeError("exp_map: tangent norm " + std::to_string(norm) + " exceeds guard");
    }
    return std::cosh(s) * x + K.sqrt_k() * std::sinh(s) * v / norm;
}

double distance(const Vector& x, const Vector& y, Curvature K) {
    const double arg = std::max(1.0, -minkowski_inner(x, y) / K.k());
    return K.sqrt_k() * std::acosh(arg);
}

Vector log_map(const Vector& x, const Vector& y, Curvature K) {
    require_same_size(x, y, "log_map");
    const double d = distance(x, y, K);
    const Vector u = y + (minkowski_inner(x, y) / K.k()) * x;
    const double unorm = minkowski_norm(u);
    if (d == 0.0 || unorm == 0.0) return Vector::Zero(x.size());
    return d * u / unorm;
}

Vector parallel_transport(const Vector& x, const Vector& y, const Vector& v, Curvature K) {
    require_same_size(x, v, "parallel_transport");
    const double d = distance(x, y, K);
    if (d == 0.0) return v;
    const Vector lxy = log_map(x, y, K);
    const Vector lyx = log_map(y, x, K);
    return v - (minkowski_inner(lxy, v) / (d * d)) * (lxy + lyx);
}

Vector parallel_transport_closed(const Vector& x, const Vector& y, const Vector& v, Curvature K) {
    require_same_size(x, v, "parallel_transport_closed");
    const double coef = minkowski_inner(y, v) / (K.k() - minkowski_inner(x, y));
    return v + coef * (x + y);
}

Vector exp0(const Vector& v, Curvature K) {
    Vector t = v;
    t[0] = 0.0;
    return exp_map(origin(static_cast<int>(v.size()) - 1, K), t, K);
}

Vector log0(const Vector& y, Curvature K) {
    return log_map(origin(static_cast<int>(y.size()) - 1, K), y, K);
}

Vector hyp_activation(const Vector& x, const std::function<double(double)>& f, Curvature K) {
    Vector t = log0(x, K);
    for (Eigen::Index i = 1; i < t.size(); ++i) t[i] = f(t[i]);
    return exp0(t, K);
}

Vector project_to_manifold(const Vector& raw, Curvature K) {
    if (raw.size() < 2) throw DimensionError("project_to_manifold: need length >= 2");
    Vector p = raw;
    p[0] = std::sqrt(K.k() + raw.tail(raw.size() - 1).squaredNorm());
    return p;
}

double membership_error(const Vector& x, Curvature K) {
    return std::abs(minkowski_inner(x, x) + K.k()) / K.k();
}

}  // namespace hypertopic::geometry
