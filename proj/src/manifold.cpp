#include "hypertopic/manifold.hpp"

#include <algorithm>
#include <cmath>

namespace hypertopic {

using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace manifold_detail {

Pair cosh_sqrt(double q, double K) {
    q = std::max(q, 0.0);
    const double s2 = q / K;
    const double s = std::sqrt(s2);
    if (s < 1e-3) {
        return {1.0 + s2 / 2.0 + s2 * s2 / 24.0, (1.0 + s2 / 6.0 + s2 * s2 / 120.0) / (2.0 * K)};
    }
    return {std::cosh(s), std::sinh(s) / (2.0 * s * K)};
}

Pair sinhc_sqrt(double q, double K) {
    q = std::max(q, 0.0);
    const double s2 = q / K;
    const double s = std::sqrt(s2);
    if (s < 1e-2) {
        const double value = 1.0 + s2 / 6.0 + s2 * s2 / 120.0;
        const double dq = (1.0 / 3.0 + s2 / 30.0 + s2 * s2 / 840.0) / (2.0 * K);
        return {value, dq};
    }
    return {std::sinh(s) / s, (s * std::cosh(s) - std::sinh(s)) / (2.0 * K * s * s2)};
}

Pair asinhc_sqrt(double q, double K) {
    q = std::max(q, 0.0);
    const double s2 = q / K;
    const double s = std::sqrt(s2);
    if (s < 1e-2) {
        const double value = 1.0 - s2 / 6.0 + 3.0 * s2 * s2 / 40.0;
        const double dq = (-1.0 / 6.0 + 3.0 * s2 / 20.0 - 15.0 * s2 * s2 / 112.0) / K;
        return {value, dq};
    }
    const double as = std::asinh(s);
    return {as / s, (s / std::sqrt(1.0 + s2) - as) / (2.0 * K * s * s2)};
}

Pair acosh_sq(double a, double K) {
    const double eps = std::max(a - 1.0, 0.0);
    if (eps < 1e-10) {
        // acosh(1+e)^2 = 2e - e^2/3 + ...
        return {K * (2.0 * eps - eps * eps / 3.0), 2.0 * K * (1.0 - eps / 3.0)};
    }
    const double ac = std::acosh(1.0 + eps);
    return {K * ac * ac, 2.0 * K * ac / std::sqrt(eps * (2.0 + eps))};
}

}  // namespace manifold_detail

namespace {

using namespace manifold_detail;

// Factor that clips a tangent norm so that norm / sqrt(K) <= kMaxTangentNorm.
double clip_factor(double q, double K) {
    const double limit = geometry::kMaxTangentNorm * geometry::kMaxTangentNorm * K;
    return q > limit ? std::sqrt(limit / q) : 1.0;
}

Matrix flip_time(const Matrix& m) {
    Matrix out = m;
    out.col(0) = -out.col(0);
    return out;
}

}  // namespace

Var Manifold::exp0(Var tangent) const {
    if (!hyperbolic()) return ad::zero_first_col(tangent);
    const double K = K_.k();
    const double sk = K_.sqrt_k();
    const Matrix& u = tangent.value();
    const Eigen::Index n = u.rows(), d = u.cols();
    Matrix out(n, d);
    Eigen::VectorXd cosh_d(n), sinhc_v(n), sinhc_d(n), clip(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto s = u.row(r).tail(d - 1);
        const double q0 = s.squaredNorm();
        clip[r] = clip_factor(q0, K);
        const double q = q0 * clip[r] * clip[r];
        const Pair c = cosh_sqrt(q, K);
        const Pair h = sinhc_sqrt(q, K);
        cosh_d[r] = c.dq;
        sinhc_v[r] = h.value;
        sinhc_d[r] = h.dq;
        out(r, 0) = sk * c.value;
        out.row(r).tail(d - 1) = (h.value * clip[r]) * s;
    }
    const int iu = tangent.id();
    return tangent.tape()->record(
        std::move(out), {tangent},
        [iu, sk, cosh_d, sinhc_v, sinhc_d, clip](Tape& t, const Matrix& g) {
            const Matrix& u = t.value(iu);
            const Eigen::Index n = u.rows(), d = u.cols();
            Matrix gu = Matrix::Zero(n, d);
            for (Eigen::Index r = 0; r < n; ++r) {
                const Eigen::RowVectorXd s = clip[r] * u.row(r).tail(d - 1);
                const auto gs = g.row(r).tail(d - 1);
                const double radial = sk * cosh_d[r] * g(r, 0) + sinhc_d[r] * gs.dot(s);
                gu.row(r).tail(d - 1) = clip[r] * (sinhc_v[r] * gs + 2.0 * radial * s);
            }
            t.accumulate(iu, gu);
        });
}

Var Manifold::log0(Var points) const {
    if (!hyperbolic()) return points;
    const double K = K_.k();
    const Matrix& x = points.value();
    const Eigen::Index n = x.rows(), d = x.cols();
    Matrix out = Matrix::Zero(n, d);
    Eigen::VectorXd hv(n), hd(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto s = x.row(r).tail(d - 1);
        const Pair h = asinhc_sqrt(s.squaredNorm(), K);
        hv[r] = h.value;
        hd[r] = h.dq;
        out.row(r).tail(d - 1) = h.value * s;
    }
    const int ix = points.id();
    return points.tape()->record(std::move(out), {points}, [ix, hv, hd](Tape& t, const Matrix& g) {
        const Matrix& x = t.value(ix);
        const Eigen::Index n = x.rows(), d = x.cols();
        Matrix gx = Matrix::Zero(n, d);
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto s = x.row(r).tail(d - 1);
            const auto gs = g.row(r).tail(d - 1);
            gx.row(r).tail(d - 1) = hv[r] * gs + (2.0 * hd[r] * gs.dot(s)) * s;
        }
        t.accumulate(ix, gx);
    });
}

Var Manifold::exp_at(Var base, Var tangent) const {
    if (!hyperbolic()) return ad::add(base, tangent);
    if (base.rows() != tangent.rows() || base.cols() != tangent.cols()) {
        throw geometry::DimensionError("exp_at: shape mismatch");
    }
    const double K = K_.k();
    const Matrix& z = base.value();
    const Matrix& w = tangent.value();
    const Eigen::Index n = z.rows();
    Matrix out(n, z.cols());
    Eigen::VectorXd cv(n), cd(n), hv(n), hd(n), clip(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double q0 = std::max(0.0, w.row(r).squaredNorm() - 2.0 * w(r, 0) * w(r, 0));
        clip[r] = clip_factor(q0, K);
        const double q = q0 * clip[r] * clip[r];
        const Pair c = cosh_sqrt(q, K);
        const Pair h = sinhc_sqrt(q, K);
        cv[r] = c.value;
        cd[r] = c.dq;
        hv[r] = h.value;
        hd[r] = h.dq;
        out.row(r) = c.value * z.row(r) + (h.value * clip[r]) * w.row(r);
    }
    const int iz = base.id(), iw = tangent.id();
    return base.tape()->record(
        std::move(out), {base, tangent}, [iz, iw, cv, cd, hv, hd, clip](Tape& t, const Matrix& g) {
            const Matrix& z = t.value(iz);
            const Matrix& w = t.value(iw);
            const Eigen::Index n = z.rows();
            if (t.needs_grad(iz)) {
                Matrix gz = g.array().colwise() * cv.array();
                t.accumulate(iz, gz);
            }
            if (t.needs_grad(iw)) {
                Matrix gw(n, z.cols());
                for (Eigen::Index r = 0; r < n; ++r) {
                    Eigen::RowVectorXd wc = clip[r] * w.row(r);
                    const double radial = cd[r] * g.row(r).dot(z.row(r)) + hd[r] * g.row(r).dot(wc);
                    Eigen::RowVectorXd jw = wc;
                    jw[0] = -jw[0];
                    gw.row(r) = clip[r] * (hv[r] * g.row(r) + 2.0 * radial * jw);
                }
                t.accumulate(iw, gw);
            }
        });
}

Var Manifold::translate(Var points, Var bias) const {
    Tape& t = *points.tape();
    const Eigen::Index n = points.rows();
    Var v = ad::concat_cols({t.constant(Matrix::Zero(1, 1)), bias});
    if (n > 1) v = ad::matmul(t.constant(Matrix::Ones(n, 1)), v);
    if (!hyperbolic()) return ad::add(points, v);
    const double K = K_.k();
    Var inner = ad::minkowski_rowdot(points, v);
    Var denom = ad::add_scalar(ad::scale(ad::slice_cols(points, 0, 1), K_.sqrt_k()), K);
    Var coef = ad::divide(inner, denom);
    Matrix o = Matrix::Zero(1, points.cols());
    o(0, 0) = K_.sqrt_k();
    Var shifted = ad::add_row(points, t.constant(std::move(o)));
    Var w = ad::add(v, ad::mul_col(shifted, coef));
    return exp_at(points, w);
}

Var Manifold::tanh_activation(Var points) const { return exp0(ad::tanh(log0(points))); }

Var Manifold::sqdist(Var X, Var Y) const {
    if (X.cols() != Y.cols()) throw geometry::DimensionError("sqdist: column mismatch");
    Tape& t = *X.tape();
    const int ix = X.id(), iy = Y.id();
    if (!hyperbolic()) {
        const Matrix& x = X.value();
        const Matrix& y = Y.value();
        Matrix out = (-2.0 * x * y.transpose()).colwise() + x.rowwise().squaredNorm();
        out.rowwise() += y.rowwise().squaredNorm().transpose();
        out = out.cwiseMax(0.0);
        return t.record(std::move(out), {X, Y}, [ix, iy](Tape& t, const Matrix& g) {
            const Matrix& x = t.value(ix);
            const Matrix& y = t.value(iy);
            if (t.needs_grad(ix)) {
                Matrix gx = 2.0 * (x.array().colwise() * g.rowwise().sum().array()).matrix() - 2.0 * g * y;
                t.accumulate(ix, gx);
            }
            if (t.needs_grad(iy)) {
                Matrix gy = 2.0 * (y.array().colwise() * g.colwise().sum().transpose().array()).matrix() -
                            2.0 * g.transpose() * x;
                t.accumulate(iy, gy);
            }
        });
    }
    const double K = K_.k();
    const Matrix a = -(flip_time(X.value()) * Y.value().transpose()) / K;
    Matrix out(a.rows(), a.cols());
    Matrix da(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const Pair p = acosh_sq(a(i, j), K);
            out(i, j) = p.value;
            da(i, j) = p.dq;
        }
    }
    return t.record(std::move(out), {X, Y}, [ix, iy, K, da = std::move(da)](Tape& t, const Matrix& g) {
        const Matrix c = g.cwiseProduct(da);
        if (t.needs_grad(ix)) t.accumulate(ix, -(c * flip_time(t.value(iy))) / K);
        if (t.needs_grad(iy)) t.accumulate(iy, -(c.transpose() * flip_time(t.value(ix))) / K);
    });
}

double Manifold::sqdist(std::span<const double> x, std::span<const double> y) const {
    double acc = 0.0;
    if (!hyperbolic()) {
        for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
        return acc;
    }
    acc = -x[0] * y[0];
    for (std::size_t i = 1; i < x.size(); ++i) acc += x[i] * y[i];
    return acosh_sq(-acc / K_.k(), K_.k()).value;
}

Matrix Manifold::exp0_value(const Matrix& tangent) const {
    Tape tape(false);
    return exp0(tape.constant(tangent)).value();
}

}  // namespace hypertopic
