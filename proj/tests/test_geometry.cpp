#include <doctest.h>

#include <cmath>

#include "hypertopic/geometry.hpp"
#include "support.hpp"

using namespace hypertopic::geometry;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("minkowski inner product") {
    const Curvature K;
    CHECK(minkowski_inner(origin(1, K), origin(1, K)) == doctest::Approx(-1.0));
    CHECK(minkowski_inner(vec({1, 0}), vec({0, 1})) == 0.0);
    CHECK(minkowski_inner(vec({2, 1}), vec({2, 1})) == doctest::Approx(-3.0));
    CHECK_THROWS_AS(minkowski_inner(vec({1, 0}), vec({1, 0, 0})), DimensionError);
    CHECK_THROWS_AS(minkowski_inner(vec({1}), vec({1})), DimensionError);
}

TEST_CASE("curvature must be positive") {
    CHECK_THROWS(Curvature(0.0));
    CHECK_THROWS(Curvature(-1.0));
    CHECK(Curvature(2.0).sqrt_k() == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("exp map closed form and limits") {
    const Curvature K;
    const VectorXd o = origin(1, K);
    CHECK(exp_map(o, VectorXd::Zero(2), K) == o);
    const VectorXd y = exp_map(o, vec({0, 1}), K);
    CHECK(y[0] == doctest::Approx(1.543081).epsilon(1e-6));
    CHECK(y[1] == doctest::Approx(1.175201).epsilon(1e-6));
    CHECK_THROWS_AS(exp_map(o, vec({0, 40}), K), MagnitudeError);
}

TEST_CASE("log map inverts the exp map example") {
    const Curvature K;
    const VectorXd o = origin(1, K);
    const VectorXd v = log_map(o, vec({1.543081, 1.175201}), K);
    CHECK(std::abs(v[0]) < 1e-5);
    CHECK(v[1] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(log_map(o, o, K).norm() == 0.0);
}

TEST_CASE("distance examples") {
    const Curvature K;
    const VectorXd o = origin(1, K);
    CHECK(distance(o, o, K) == 0.0);
    CHECK(std::abs(distance(o, vec({std::cosh(1.0), std::sinh(1.0)}), K) - 1.0) < 1e-7);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const VectorXd v = testing::random_origin_tangent(rng, 4, 0.2 + 0.2 * i);
        CHECK(distance(origin(4, K), exp_map(origin(4, K), v, K), K) == doctest::Approx(minkowski_norm(v)).epsilon(1e-9));
    }
}

TEST_CASE("roundtrips, membership, transport for several curvatures") {
    std::mt19937_64 rng(11);
    for (double k : {0.5, 1.0, 2.0}) {
        const Curvature K(k);
        for (int trial = 0; trial < 50; ++trial) {
            const VectorXd x = testing::random_point(rng, 5, 1.5, K);
            VectorXd v = log_map(x, testing::random_point(rng, 5, 2.0, K), K);
            v *= std::min(1.0, 5.0 / std::max(minkowski_norm(v), 1e-12));
            const VectorXd y = exp_map(x, v, K);
            CHECK(membership_error(y, K) < 1e-9);
            CHECK((log_map(x, y, K) - v).cwiseAbs().maxCoeff() < 1e-6);
            CHECK((exp_map(x, log_map(x, y, K), K) - y).cwiseAbs().maxCoeff() < 1e-6);
            const VectorXd u = log_map(x, testing::random_point(rng, 5, 1.0, K), K);
            const VectorXd pu = parallel_transport(x, y, u, K);
            const VectorXd pv = parallel_transport(x, y, v, K);
            CHECK(std::abs(minkowski_inner(y, pu)) < 1e-6);
            CHECK(std::abs(minkowski_inner(pu, pv) - minkowski_inner(u, v)) < 1e-6);
            CHECK((parallel_transport_closed(x, y, u, K) - pu).cwiseAbs().maxCoeff() < 1e-6);
            CHECK(std::abs(distance(x, y, K) - distance(y, x, K)) < 1e-12);
        }
    }
}

TEST_CASE("transport to the same point is the identity") {
    const Curvature K;
    std::mt19937_64 rng(5);
    const VectorXd x = testing::random_point(rng, 3, 1.0, K);
    const VectorXd v = log_map(x, testing::random_point(rng, 3, 1.0, K), K);
    CHECK(parallel_transport(x, x, v, K) == v);
}

TEST_CASE("tangent at origin") {
    const Curvature K;
    CHECK(tangent_at_origin(VectorXd::Zero(3)).norm() == 0.0);
    const VectorXd t = tangent_at_origin(vec({1, 2}));
    CHECK(t == vec({0, 1, 2}));
    CHECK(minkowski_inner(origin(2, K), t) == 0.0);
}

TEST_CASE("hyperbolic activation") {
    const Curvature K;
    CHECK((hyp_activation(origin(3, K), [](double x) { return std::tanh(x); }, K) - origin(3, K)).norm() < 1e-12);
    std::mt19937_64 rng(9);
    const VectorXd x = testing::random_point(rng, 3, 2.0, K);
    CHECK((hyp_activation(x, [](double v) { return v; }, K) - x).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(membership_error(hyp_activation(x, [](double v) { return std::tanh(v); }, K), K) < 1e-9);
}

TEST_CASE("project to manifold") {
    const Curvature K;
    std::mt19937_64 rng(2);
    const VectorXd x = testing::random_point(rng, 3, 1.0, K);
    CHECK((project_to_manifold(x, K) - x).norm() < 1e-12);
    CHECK(project_to_manifold(vec({0, 0}), K) == origin(1, K));
    const VectorXd p = project_to_manifold(vec({99, 3}), K);
    CHECK(p[0] == doctest::Approx(std::sqrt(10.0)));
    CHECK(p[1] == 3.0);
}
