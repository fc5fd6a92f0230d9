#include <doctest.h>

#include "hypertopic/graph_attn.hpp"
#include "support.hpp"

using namespace hypertopic;
using ad::Matrix;
using ad::Tape;
using ad::Var;
using Eigen::VectorXd;

namespace {

constexpr int kD = 5;

VectorXd aggregate_ref(const VectorXd& c, const std::vector<VectorXd>& nbrs, const VectorXd& b,
                       geometry::Curvature K, std::vector<double>* alpha_out = nullptr) {
    const VectorXd uc = geometry::log0(c, K);
    if (nbrs.empty()) return geometry::exp0(0.5 * uc, K);
    std::vector<double> score;
    double mx = -1e300;
    for (const auto& x : nbrs) {
        VectorXd cat(2 * kD);
        cat << uc, geometry::log0(x, K);
        score.push_back(b.dot(cat));
        mx = std::max(mx, score.back());
    }
    double z = 0;
    for (double& s : score) z += (s = std::exp(s - mx));
    VectorXd mix = VectorXd::Zero(kD);
    for (std::size_t j = 0; j < nbrs.size(); ++j) mix += score[j] / z * geometry::log0(nbrs[j], K);
    if (alpha_out) {
        alpha_out->clear();
        for (double s : score) alpha_out->push_back(s / z);
    }
    return geometry::exp0(0.5 * (uc + mix), K);
}

}  // namespace

TEST_CASE("aggregation matches the attention formula") {
    std::mt19937_64 rng(1);
    for (double k : {0.5, 1.0, 2.0}) {
        const geometry::Curvature K(k);
        const Manifold m(Space::hyperbolic, K);
        Tape t(false);
        const Matrix c = m.exp0_value(testing::tangent_rows(rng, 1, kD, 0.8));
        const Matrix n = m.exp0_value(testing::tangent_rows(rng, 3, kD, 0.8));
        const Matrix b = testing::random_matrix(rng, 1, 2 * kD);
        Matrix alpha;
        const GraphAttnVars p{t.constant(Matrix::Identity(kD, kD)), t.constant(b)};
        const Matrix out = hgnn_aggregate(m, t.constant(c), t.constant(n), p, &alpha).value();
        std::vector<VectorXd> nb;
        for (Eigen::Index j = 0; j < 3; ++j) nb.push_back(n.row(j).transpose());
        std::vector<double> ref_alpha;
        const VectorXd ref = aggregate_ref(c.row(0).transpose(), nb, b.row(0).transpose(), K, &ref_alpha);
        CHECK((out.row(0).transpose() - ref).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(alpha.sum() == doctest::Approx(1.0));
        for (int j = 0; j < 3; ++j) CHECK(alpha(j, 0) == doctest::Approx(ref_alpha[j]));
        CHECK(geometry::membership_error(out.row(0).transpose(), K) < 1e-9);
    }
}

TEST_CASE("no neighbors halves the center's tangent") {
    std::mt19937_64 rng(2);
    const Manifold m;
    Tape t(false);
    const Matrix c = m.exp0_value(testing::tangent_rows(rng, 1, kD, 0.8));
    const GraphAttnVars p{t.constant(Matrix::Identity(kD, kD)), t.constant(Matrix::Zero(1, 2 * kD))};
    Matrix alpha;
    const Matrix out = hgnn_aggregate(m, t.constant(c), Var{}, p, &alpha).value();
    CHECK(alpha.size() == 0);
    const VectorXd ref = geometry::exp0(0.5 * geometry::log0(c.row(0).transpose(), {}), {});
    CHECK((out.row(0).transpose() - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero attention bias averages neighbors uniformly") {
    std::mt19937_64 rng(3);
    const Manifold m;
    Tape t(false);
    const Matrix c = m.exp0_value(testing::tangent_rows(rng, 1, kD, 0.5));
    const Matrix n = m.exp0_value(testing::tangent_rows(rng, 4, kD, 0.5));
    const GraphAttnVars p{t.constant(Matrix::Identity(kD, kD)), t.constant(Matrix::Zero(1, 2 * kD))};
    Matrix alpha;
    hgnn_aggregate(m, t.constant(c), t.constant(n), p, &alpha);
    for (int j = 0; j < 4; ++j) CHECK(alpha(j, 0) == doctest::Approx(0.25));
}

TEST_CASE("transform maps through the tangent space at the origin") {
    std::mt19937_64 rng(4);
    const Manifold m;
    Tape t(false);
    const Matrix x = m.exp0_value(testing::tangent_rows(rng, 2, kD, 0.5));
    const Matrix W = testing::random_matrix(rng, kD, kD, 0.5);
    const GraphAttnVars p{t.constant(W), t.constant(Matrix::Zero(1, 2 * kD))};
    const Matrix out = hgnn_transform(m, t.constant(x), p).value();
    for (Eigen::Index r = 0; r < 2; ++r) {
        VectorXd u = W * geometry::log0(x.row(r).transpose(), {});
        u[0] = 0;
        CHECK((out.row(r).transpose() - geometry::exp0(u, {})).cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK((hgnn_transform(m, t.constant(x), {t.constant(Matrix::Identity(kD, kD)), p.b_att}).value() - x)
              .cwiseAbs()
              .maxCoeff() < 1e-10);
}

TEST_CASE("more than one center row is rejected") {
    const Manifold m;
    Tape t(false);
    const Matrix two = m.exp0_value(Matrix::Zero(2, kD));
    const GraphAttnVars p{t.constant(Matrix::Identity(kD, kD)), t.constant(Matrix::Zero(1, 2 * kD))};
    CHECK_THROWS(hgnn_aggregate(m, t.constant(two), t.constant(two), p));
}

TEST_CASE("graph attention gradients") {
    std::mt19937_64 rng(5);
    const Manifold m(Space::hyperbolic, geometry::Curvature(0.8));
    ad::ParameterStore s;
    s.add("W", testing::random_matrix(rng, kD, kD, 0.5));
    s.add("b", testing::random_matrix(rng, 1, 2 * kD, 0.5));
    s.add("u", testing::tangent_rows(rng, 4, kD, 0.6));
    const Matrix w = testing::random_matrix(rng, 1, kD);
    auto loss = [&](Tape& t) {
        const GraphAttnVars p{t.parameter(s.at("W")), t.parameter(s.at("b"))};
        Var h = hgnn_transform(m, m.exp0(t.parameter(s.at("u"))), p);
        Var out = hgnn_aggregate(m, ad::slice_rows(h, 0, 1), ad::slice_rows(h, 1, 3), p);
        return ad::weighted_sum(out, w);
    };
    CHECK(testing::grad_check(s, loss).worst < 1e-4);
}
