#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "hypertopic/autodiff.hpp"
#include "hypertopic/geometry.hpp"

namespace testing {

using hypertopic::ad::Matrix;
using hypertopic::ad::Parameter;
using hypertopic::ad::ParameterStore;
using hypertopic::ad::Tape;
using hypertopic::ad::Var;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double sd = 1.0) {
    std::normal_distribution<double> dist(0.0, sd);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

// Random tangent vector at the origin with Lorentz norm `norm`.
inline Eigen::VectorXd random_origin_tangent(std::mt19937_64& rng, int n, double norm) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);
    for (int i = 1; i <= n; ++i) v[i] = dist(rng);
    return v * (norm / v.norm());
}

inline Eigen::VectorXd random_point(std::mt19937_64& rng, int n, double radius, hypertopic::geometry::Curvature K) {
    return hypertopic::geometry::exp0(random_origin_tangent(rng, n, radius), K);
}

// Tangent rows at the origin (column 0 zero) for batch ops.
inline Matrix tangent_rows(std::mt19937_64& rng, Eigen::Index r, Eigen::Index d, double sd) {
    Matrix m = random_matrix(rng, r, d, sd);
    m.col(0).setZero();
    return m;
}

struct GradReport {
    double worst = 0;  // largest per-tensor relative error
    std::string where;
};

// Compares reverse-mode gradients of `loss` with central differences for
// every parameter in `store`. The callback builds the scalar loss on the given
// tape from the store.
inline GradReport grad_check(ParameterStore& store, const std::function<Var(Tape&)>& loss, double h = 1e-5) {
    store.zero_grad();
    {
        Tape tape;
        tape.backward(loss(tape));
    }
    GradReport report;
    for (auto& p : store.all()) {
        const Matrix analytic = p.grad;
        Matrix numeric(p.value.rows(), p.value.cols());
        for (Eigen::Index i = 0; i < p.value.size(); ++i) {
            const double keep = p.value.data()[i];
            p.value.data()[i] = keep + h;
            Tape up(false);
            const double fp = loss(up).scalar();
            p.value.data()[i] = keep - h;
            Tape down(false);
            const double fm = loss(down).scalar();
            p.value.data()[i] = keep;
            numeric.data()[i] = (fp - fm) / (2 * h);
        }
        const double scale = std::max({analytic.norm(), numeric.norm(), 1e-6});
        const double err = (analytic - numeric).norm() / scale;
        if (err > report.worst) {
            report.worst = err;
            report.where = p.name;
        }
    }
    return report;
}

}  // namespace testing
