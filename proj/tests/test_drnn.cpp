#include <doctest.h>

#include "hypertopic/drnn.hpp"
#include "support.hpp"

using namespace hypertopic;
using ad::Matrix;
using ad::Tape;
using ad::Var;
using Eigen::VectorXd;

namespace {

constexpr int kN = 4;

struct Weights {
    Matrix Wa, ba, Wf, bf, Wc, init;
};

Weights random_weights(std::mt19937_64& rng) {
    const double s = 0.5;
    return {testing::random_matrix(rng, kN + 1, kN + 1, s), testing::random_matrix(rng, 1, kN, 0.3),
            testing::random_matrix(rng, kN + 1, kN + 1, s), testing::random_matrix(rng, 1, kN, 0.3),
            testing::random_matrix(rng, kN + 1, kN + 1, s), testing::random_matrix(rng, 1, kN, 0.4)};
}

// Reference recurrences built from the per-vector geometry routines.
VectorXd ref_step(const VectorXd& z, const Matrix& W, const Matrix& b, geometry::Curvature K) {
    VectorXd u = W * geometry::log0(z, K);
    u[0] = 0;
    const VectorXd p = geometry::exp0(u, K);
    VectorXd bias = VectorXd::Zero(kN + 1);
    bias.tail(kN) = b.row(0).transpose();
    const VectorXd moved = geometry::exp_map(p, geometry::parallel_transport(geometry::origin(kN, K), p, bias, K), K);
    return geometry::hyp_activation(moved, [](double x) { return std::tanh(x); }, K);
}

VectorXd ref_combine(const VectorXd& a, const VectorXd& b, const Matrix& W, geometry::Curvature K) {
    VectorXd u = W * (geometry::log0(a, K) + geometry::log0(b, K));
    u[0] = 0;
    return geometry::hyp_activation(geometry::exp0(u, K), [](double x) { return std::tanh(x); }, K);
}

DrnnVars bind(Tape& t, const Weights& w) {
    return {{t.constant(w.Wa), t.constant(w.ba)}, {t.constant(w.Wf), t.constant(w.bf)}, t.constant(w.Wc),
            t.constant(w.init)};
}

}  // namespace

TEST_CASE("hyperbolic rnn step matches the per-vector reference") {
    std::mt19937_64 rng(3);
    for (double k : {0.5, 1.0, 2.0}) {
        const geometry::Curvature K(k);
        const Manifold m(Space::hyperbolic, K);
        const Weights w = random_weights(rng);
        Tape t(false);
        const Matrix z = m.exp0_value(testing::tangent_rows(rng, 2, kN + 1, 0.7));
        const Matrix out = hyp_rnn_step(m, t.constant(z), {t.constant(w.Wa), t.constant(w.ba)}).value();
        for (Eigen::Index r = 0; r < 2; ++r) {
            const VectorXd ref = ref_step(z.row(r).transpose(), w.Wa, w.ba, K);
            CHECK((out.row(r).transpose() - ref).cwiseAbs().maxCoeff() < 1e-9);
            CHECK(geometry::membership_error(out.row(r).transpose(), K) < 1e-9);
        }
    }
}

TEST_CASE("identity weights and zero bias fix the origin") {
    const Manifold m;
    Tape t(false);
    Matrix o = Matrix::Zero(1, kN + 1);
    o(0, 0) = 1;
    const HypRnnVars p{t.constant(Matrix::Identity(kN + 1, kN + 1)), t.constant(Matrix::Zero(1, kN))};
    const Matrix levels = compute_level_embeddings(m, 3, p, t.constant(o)).value();
    for (Eigen::Index h = 0; h < 3; ++h) CHECK((levels.row(h) - o).norm() < 1e-12);
    CHECK_THROWS(compute_level_embeddings(m, 0, p, t.constant(o)));
}

TEST_CASE("topic embeddings follow the doubly recurrent unrolling") {
    std::mt19937_64 rng(4);
    const geometry::Curvature K;
    const Manifold m;
    const Weights w = random_weights(rng);
    TopicTree tree = TopicTree::complete(3, 2);
    Tape t(false);
    const Matrix z = compute_topic_embeddings(m, tree, bind(t, w)).value();
    REQUIRE(z.rows() == 7);
    VectorXd seed_tan = VectorXd::Zero(kN + 1);
    seed_tan.tail(kN) = w.init.row(0).transpose();
    const VectorXd seed = geometry::exp0(seed_tan, K);
    auto node = [&](const VectorXd& parent, const VectorXd& sibling) {
        return ref_combine(ref_step(parent, w.Wa, w.ba, K), ref_step(sibling, w.Wf, w.bf, K), w.Wc, K);
    };
    const VectorXd root = node(seed, seed);
    const VectorXd a = node(root, seed);
    const VectorXd b = node(root, a);
    const VectorXd a1 = node(a, seed);
    const VectorXd a2 = node(a, a1);
    const VectorXd b2 = node(b, node(b, seed));
    CHECK((z.row(0).transpose() - root).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((z.row(2).transpose() - b).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((z.row(4).transpose() - a2).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((z.row(6).transpose() - b2).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("single-node tree uses the seed for both inputs") {
    std::mt19937_64 rng(10);
    const geometry::Curvature K;
    const Manifold m;
    const Weights w = random_weights(rng);
    TopicTree tree(1);
    Tape t(false);
    const Matrix z = compute_topic_embeddings(m, tree, bind(t, w)).value();
    VectorXd seed_tan = VectorXd::Zero(kN + 1);
    seed_tan.tail(kN) = w.init.row(0).transpose();
    const VectorXd seed = geometry::exp0(seed_tan, K);
    const VectorXd ref = ref_combine(ref_step(seed, w.Wa, w.ba, K), ref_step(seed, w.Wf, w.bf, K), w.Wc, K);
    CHECK((z.row(0).transpose() - ref).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fermi-dirac similarity") {
    const Manifold m;
    Tape t(false);
    Matrix o = Matrix::Zero(1, 3);
    o(0, 0) = 1;
    CHECK(fermi_dirac(m, t.constant(o), t.constant(o)).scalar() == doctest::Approx(0.5));
    Matrix x = Matrix::Zero(1, 3);
    x(0, 0) = std::cosh(1.0);
    x(0, 1) = std::sinh(1.0);
    CHECK(fermi_dirac(m, t.constant(o), t.constant(x)).scalar() == doctest::Approx(0.268941).epsilon(1e-6));
}

TEST_CASE("drnn gradients") {
    std::mt19937_64 rng(11);
    const Manifold m(Space::hyperbolic, geometry::Curvature(1.2));
    const Weights w = random_weights(rng);
    ad::ParameterStore s;
    s.add("Wa", w.Wa);
    s.add("ba", w.ba);
    s.add("Wf", w.Wf);
    s.add("bf", w.bf);
    s.add("Wc", w.Wc);
    s.add("init", w.init);
    s.add("Wl", testing::random_matrix(rng, kN + 1, kN + 1, 0.5));
    s.add("bl", testing::random_matrix(rng, 1, kN, 0.3));
    TopicTree tree = TopicTree::complete(3, 2);
    tree.add_child(0);
    const Matrix wz = testing::random_matrix(rng, static_cast<Eigen::Index>(tree.size()), kN + 1);
    const Matrix wl = testing::random_matrix(rng, 3, kN + 1);
    auto loss = [&](Tape& t) {
        auto P = [&](const char* n) { return t.parameter(s.at(n)); };
        const DrnnVars v{{P("Wa"), P("ba")}, {P("Wf"), P("bf")}, P("Wc"), P("init")};
        Var z = compute_topic_embeddings(m, tree, v);
        Var l = compute_level_embeddings(m, 3, {P("Wl"), P("bl")}, seed_point(m, v.init_state));
        return ad::add(ad::weighted_sum(z, wz), ad::weighted_sum(l, wl));
    };
    CHECK(testing::grad_check(s, loss).worst < 1e-4);
}
