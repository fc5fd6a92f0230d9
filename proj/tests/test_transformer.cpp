#include <doctest.h>

#include "hypertopic/transformer.hpp"
#include "support.hpp"

using namespace hypertopic;
using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace {

constexpr int kD = 8;  // ambient
constexpr int kHeads = 2;

void add_layer(ad::ParameterStore& s, std::mt19937_64& rng) {
    const double sq = 1.0 / std::sqrt(kD);
    s.add("Wq", testing::random_matrix(rng, kD, kD, sq));
    s.add("Wk", testing::random_matrix(rng, kD, kD, sq));
    s.add("Wv", testing::random_matrix(rng, kD, kD, sq));
    s.add("Wo", testing::random_matrix(rng, kHeads * head_dim(kD, kHeads), kD, sq));
    s.add("g1", Matrix::Ones(1, kD) + testing::random_matrix(rng, 1, kD, 0.1));
    s.add("c1", testing::random_matrix(rng, 1, kD, 0.1));
    s.add("W1", testing::random_matrix(rng, kD, 4 * kD, sq));
    s.add("b1", testing::random_matrix(rng, 1, 4 * kD, 0.1));
    s.add("W2", testing::random_matrix(rng, 4 * kD, kD, 0.5 * sq));
    s.add("b2", testing::random_matrix(rng, 1, kD, 0.1));
    s.add("g2", Matrix::Constant(1, kD, sq) + testing::random_matrix(rng, 1, kD, 0.05));
    s.add("c2", testing::random_matrix(rng, 1, kD, 0.1));
}

LayerVars bind(Tape& t, ad::ParameterStore& s) {
    auto P = [&](const char* n) { return t.parameter(s.at(n)); };
    return {P("Wq"), P("Wk"), P("Wv"), P("Wo"), P("g1"), P("c1"), P("W1"), P("b1"), P("W2"), P("b2"), P("g2"), P("c2")};
}

}  // namespace

TEST_CASE("head width") {
    CHECK(head_dim(64, 4) == 16);
    CHECK(head_dim(64, 3) == 21);
    CHECK(head_dim(5, 2) == 2);
}

TEST_CASE("token embedding adds CLS and truncates") {
    std::mt19937_64 rng(1);
    const Manifold m;
    Tape t(false);
    const EmbedderVars e{t.constant(testing::random_matrix(rng, 10, kD - 1, 0.3)),
                         t.constant(testing::random_matrix(rng, 1, kD - 1, 0.3)),
                         t.constant(testing::random_matrix(rng, 5, kD - 1, 0.1))};
    const std::vector<int> toks{3, 1, 4, 1, 5, 9, 2};
    const Matrix x = embed_tokens(m, e, toks, 4).value();
    CHECK(x.rows() == 5);
    CHECK(x.cols() == kD);
    for (Eigen::Index r = 0; r < x.rows(); ++r) CHECK(geometry::membership_error(x.row(r).transpose(), {}) < 1e-10);
    // token 1 at sequence position 2 and 4 differ only through the position table
    CHECK((x.row(2) - x.row(4)).norm() > 0);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(kD);
    u.tail(kD - 1) = (e.tokens.value().row(4) + e.positions.value().row(3)).transpose();
    CHECK((x.row(3).transpose() - geometry::exp0(u, {})).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(embed_tokens(m, e, std::span<const int>{}, 4).rows() == 1);
}

TEST_CASE("asymmetric attention") {
    std::mt19937_64 rng(2);
    const Manifold m;
    ad::ParameterStore s;
    add_layer(s, rng);
    Tape t(false);
    const LayerVars p = bind(t, s);
    Var tokens = t.constant(m.exp0_value(testing::tangent_rows(rng, 3, kD, 0.6)));
    Var extra = t.constant(m.exp0_value(testing::tangent_rows(rng, 2, kD, 0.6)));
    std::vector<Matrix> att;
    const Matrix plain = asym_mha(m, tokens, {}, p, kHeads, &att).value();
    REQUIRE(att.size() == kHeads);
    CHECK(att[0].rows() == 3);
    CHECK(att[0].cols() == 3);
    const Matrix injected = asym_mha(m, tokens, {extra}, p, kHeads, &att).value();
    CHECK(injected.rows() == 3);
    CHECK(att[1].cols() == 5);
    for (const auto& a : att) {
        for (Eigen::Index r = 0; r < a.rows(); ++r) CHECK(a.row(r).sum() == doctest::Approx(1.0));
    }
    CHECK((plain - injected).norm() > 1e-6);
    CHECK_THROWS(asym_mha(m, tokens, {}, p, kD + 1));
}

TEST_CASE("layer output stays on the manifold in both spaces") {
    for (Space mode : {Space::hyperbolic, Space::euclidean}) {
        std::mt19937_64 rng(3);
        const Manifold m(mode, geometry::Curvature(1.5));
        ad::ParameterStore s;
        add_layer(s, rng);
        Tape t(false);
        const LayerVars p = bind(t, s);
        Var tokens = t.constant(m.exp0_value(testing::tangent_rows(rng, 4, kD, 0.6)));
        const Matrix out = hyp_trm_layer(m, tokens, {}, p, kHeads).value();
        CHECK(out.allFinite());
        if (mode == Space::hyperbolic) {
            for (Eigen::Index r = 0; r < out.rows(); ++r) {
                CHECK(geometry::membership_error(out.row(r).transpose(), geometry::Curvature(1.5)) < 1e-9);
            }
        } else {
            CHECK(out.col(0).norm() == 0.0);
        }
    }
}

TEST_CASE("transformer layer gradients") {
    std::mt19937_64 rng(4);
    const Manifold m;
    ad::ParameterStore s;
    add_layer(s, rng);
    s.add("u", testing::tangent_rows(rng, 3, kD, 0.5));
    s.add("x", testing::tangent_rows(rng, 1, kD, 0.5));
    const Matrix w = testing::random_matrix(rng, 3, kD);
    auto loss = [&](Tape& t) {
        const LayerVars p = bind(t, s);
        Var tokens = m.exp0(t.parameter(s.at("u")));
        Var extra = m.exp0(t.parameter(s.at("x")));
        return ad::weighted_sum(m.log0(hyp_trm_layer(m, tokens, {extra}, p, kHeads)), w);
    };
    CHECK(testing::grad_check(s, loss).worst < 1e-4);
}
