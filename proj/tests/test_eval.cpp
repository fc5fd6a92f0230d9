#include <doctest.h>

#include <cmath>
#include <set>

#include "hypertopic/eval.hpp"
#include "hypertopic/objective.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace hypertopic;
using ad::Matrix;

namespace {

Matrix flat_points(std::initializer_list<double> xs) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(xs.size()), 2);
    Eigen::Index r = 0;
    for (double x : xs) m(r++, 1) = x;
    return m;
}

}  // namespace

TEST_CASE("f1 by hand") {
    const F1Scores s = f1_scores({0, 1, 2, 2}, {0, 0, 1, 1});
    // class 0: P 1, R 1/2; classes 1 and 2 score 0.
    CHECK(std::abs(s.macro - 2.0 / 9.0) < 1e-12);
    CHECK(std::abs(s.micro - 0.25) < 1e-12);
    const F1Scores p = f1_scores({1, 0, 1}, {1, 0, 1});
    CHECK(p.macro == 1.0);
    CHECK(p.micro == 1.0);
    CHECK(std::abs(f1_scores({0, 0, 0}, {0, 1, 2}).macro - 1.0 / 6.0) < 1e-12);
}

TEST_CASE("auc with ties") {
    CHECK(auc({0.5, 0.5}, {0.5, 0.1}) == 0.75);
    CHECK(auc({0.9, 0.5}, {0.5, 0.1}) == 0.875);
    CHECK(auc({1, 2}, {3}) == 0.0);
    CHECK_THROWS(auc({}, {1.0}));
}

TEST_CASE("auc matches brute force on random scores") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> coarse(0, 9);
    std::vector<double> pos(137), neg(211);
    for (double& x : pos) x = coarse(rng) / 9.0;
    for (double& x : neg) x = coarse(rng) / 12.0;
    double wins = 0;
    for (double p : pos)
        for (double n : neg) wins += p > n ? 1.0 : p == n ? 0.5 : 0.0;
    CHECK(std::abs(auc(pos, neg) - wins / (pos.size() * neg.size())) < 1e-12);
}

TEST_CASE("npmi by hand") {
    const std::vector<std::vector<int>> docs{{0, 1}, {0}, {1}, {0, 1}};
    const WindowReference r(docs, 2, 0, 0.0);
    CHECK(r.windows() == 4);
    CHECK(std::abs(npmi_pair(r, 0, 1) - std::log(8.0 / 9.0) / std::log(2.0)) < 1e-12);
    const WindowReference sm(docs, 2, 0, 1.0);
    CHECK(std::abs(npmi_pair(sm, 0, 1) - std::log(0.6 / 0.64) / -std::log(0.6)) < 1e-12);
    // sliding windows of two over 0 1 2 0: {0,1} {1,2} {2,0}
    const WindowReference w({{0, 1, 2, 0}}, 3, 2, 0.0);
    CHECK(w.windows() == 3);
    CHECK(w.prob(0) == doctest::Approx(2.0 / 3.0));
    CHECK(w.joint(0, 2) == doctest::Approx(1.0 / 3.0));
    CHECK(npmi_pair(WindowReference({{0}, {1}}, 2, 0, 0.0), 0, 1) == -1.0);
    CHECK(npmi_pair(WindowReference({{0, 1}}, 2, 0, 0.0), 0, 1) == 1.0);
}

TEST_CASE("npmi matches a brute-force reference") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> word(0, 14), len(0, 25);
    std::vector<std::vector<int>> docs(40);
    for (auto& d : docs) {
        d.resize(static_cast<std::size_t>(len(rng)));
        for (int& w : d) w = word(rng);
    }
    const std::vector<std::vector<int>> topics{{0, 3, 5, 7}, {1, 2}, {4, 9, 11, 13, 14}, {6}};
    for (int window : {0, 4, 10}) {
        for (double s : {0.0, 1.0}) {
            const WindowReference fast(docs, 15, window, s);
            const testing::BruteReference slow(docs, window, s);
            CHECK(fast.windows() == static_cast<long>(slow.windows.size()));
            for (int a = 0; a < 15; ++a)
                for (int b = a + 1; b < 15; ++b)
                    CHECK(std::abs(npmi_pair(fast, a, b) - npmi_pair(slow, a, b)) < 1e-12);
            double total = 0;
            int counted = 0;
            for (const auto& t : topics) {
                if (t.size() < 2) continue;
                double sum = 0;
                int pairs = 0;
                for (std::size_t i = 0; i < t.size(); ++i)
                    for (std::size_t j = i + 1; j < t.size(); ++j, ++pairs) sum += npmi_pair(slow, t[i], t[j]);
                total += sum / pairs;
                ++counted;
            }
            CHECK(std::abs(npmi(topics, fast) - total / counted) < 1e-9);
        }
    }
}

TEST_CASE("perplexity exponent matches brute force") {
    std::mt19937_64 rng(5);
    Matrix d = testing::random_matrix(rng, 6, 11).cwiseAbs().array() + 0.01;
    d = d.array().colwise() / d.rowwise().sum().array();
    Matrix c = Matrix::Zero(6, 11);
    std::uniform_int_distribution<int> k(0, 4);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = k(rng) == 0 ? 0 : k(rng);
    double num = 0, den = 0;
    for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = 0; j < 11; ++j) {
            if (c(i, j) == 0) continue;
            num -= c(i, j) * std::log(d(i, j));
            den += c(i, j);
        }
    CHECK(std::abs(perplexity_exponent(d, c) - num / den) < 1e-12);
    CHECK(perplexity_exponent(d, Matrix::Zero(6, 11)) == 0.0);
    Matrix u = Matrix::Constant(1, 4, 0.25);
    CHECK(std::abs(perplexity_exponent(u, Matrix::Constant(1, 4, 3.0)) - std::log(4.0)) < 1e-12);
}

TEST_CASE("link auc matches brute force distances") {
    std::mt19937_64 rng(17);
    const Manifold m;
    const Matrix e = m.exp0_value(testing::tangent_rows(rng, 12, 4, 1.0));
    const std::vector<Edge> pos{{0, 1}, {2, 3}, {4, 7}, {5, 11}};
    const std::vector<Edge> neg{{0, 9}, {1, 2}, {3, 8}, {6, 10}, {2, 11}};
    std::vector<double> ps, ns;
    auto score = [&](Edge x) {
        const double d = geometry::distance(e.row(x.first).transpose(), e.row(x.second).transpose(), {});
        return -d * d;
    };
    for (auto x : pos) ps.push_back(score(x));
    for (auto x : neg) ns.push_back(score(x));
    CHECK(std::abs(link_auc(m, e, pos, neg) - auc(ps, ns)) < 1e-12);
}

TEST_CASE("knn votes and tie breaking") {
    const Manifold flat(Space::euclidean, geometry::Curvature());
    const Matrix train = flat_points({-1, 2, 10, 11});
    const std::vector<int> labels{1, 0, 2, 2};
    // kappa 2 at 0: one vote each for 1 and 0; label 1 is closer
    CHECK(knn_classify(flat, train, labels, flat_points({0}), 2) == std::vector<int>{1});
    // equal mean distance goes to the lower label
    CHECK(knn_classify(flat, train, labels, flat_points({0.5}), 2) == std::vector<int>{0});
    CHECK(knn_classify(flat, train, labels, flat_points({9, 1.8}), 3) == std::vector<int>{2, 0});
    CHECK(knn_classify(flat, train, labels, flat_points({0}), 10).size() == 1);
    CHECK_THROWS(knn_classify(flat, train, labels, flat_points({0}), 0));
}

TEST_CASE("top words prefer the lower index on ties") {
    Matrix beta(4, 2);
    beta << 0.1, 0.4, 0.4, 0.1, 0.4, 0.4, 0.1, 0.1;
    const auto t = top_words(beta, 2);
    CHECK(t[0] == std::vector<int>{1, 2});
    CHECK(t[1] == std::vector<int>{0, 2});
}

TEST_CASE("non-edge sampling") {
    const std::vector<int> docs{0, 2, 3, 5, 6};
    std::vector<std::vector<int>> adj(7);
    adj[0] = {2};
    adj[2] = {0, 3};
    adj[3] = {2};
    const auto s = sample_non_edges(docs, adj, 5, 1);
    CHECK(s.size() == 5);
    CHECK(s == sample_non_edges(docs, adj, 5, 1));
    std::set<Edge> seen;
    for (auto [a, b] : s) {
        CHECK(a < b);
        CHECK(a != b);
        CHECK(std::find(adj[a].begin(), adj[a].end(), b) == adj[a].end());
        seen.insert({a, b});
    }
    CHECK(seen.size() == s.size());
    // 10 pairs, 2 linked
    CHECK(sample_non_edges(docs, adj, 50, 1).size() == 8);
}

TEST_CASE("reference examples") {
    // one class predicted on a balanced two-class set
    const F1Scores s = f1_scores({0, 0, 0, 0}, {0, 0, 1, 1});
    CHECK(s.micro == 0.5);
    CHECK(std::abs(s.macro - 1.0 / 3.0) < 1e-12);
    CHECK(auc({0.9, 0.7}, {0.8, 0.1}) == 0.75);
    CHECK(std::abs(perplexity_exponent(Matrix::Constant(2, 4, 0.25), Matrix::Constant(2, 4, 2.0)) - std::log(4.0)) < 1e-12);
    // empirical frequencies give the empirical entropy
    Matrix counts(1, 3), freq(1, 3);
    counts << 2, 1, 1;
    freq << 0.5, 0.25, 0.25;
    CHECK(std::abs(perplexity_exponent(freq, counts) - (0.5 * std::log(2.0) + 0.5 * std::log(4.0))) < 1e-12);
    // a zero-length document changes nothing
    Matrix c2(2, 3), f2(2, 3);
    c2 << 2, 1, 1, 0, 0, 0;
    f2 << 0.5, 0.25, 0.25, 0.2, 0.3, 0.5;
    CHECK(perplexity_exponent(f2, c2) == perplexity_exponent(freq, counts));
    const Manifold flat(Space::euclidean, geometry::Curvature());
    CHECK(knn_classify(flat, flat_points({3}), {2}, flat_points({-5, 0, 9}), 1) == std::vector<int>{2, 2, 2});
}

TEST_CASE("perplexity exponent equals the per-word topic loss") {
    std::mt19937_64 rng(8);
    Matrix d = testing::random_matrix(rng, 4, 9).cwiseAbs().array() + 0.05;
    d = d.array().colwise() / d.rowwise().sum().array();
    Matrix c = testing::random_matrix(rng, 4, 9).cwiseAbs().array().round();
    ad::Tape t(false);
    const double loss = topic_loss(t.constant(d), c).scalar();
    CHECK(std::abs(perplexity_exponent(d, c) - loss / c.sum()) < 1e-9);
}

TEST_CASE("knn depends only on distances") {
    std::mt19937_64 rng(12);
    const Manifold m(Space::hyperbolic, geometry::Curvature(1.5));
    const Matrix tr = testing::tangent_rows(rng, 30, 5, 1.0);
    const Matrix te = testing::tangent_rows(rng, 12, 5, 1.0);
    std::vector<int> labels(30);
    for (int i = 0; i < 30; ++i) labels[i] = i % 3;
    // random rotation of the spatial coordinates at the origin
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Random(4, 4)).householderQ();
    auto rotate = [&](const Matrix& u) {
        Matrix r = u;
        r.rightCols(4) = u.rightCols(4) * q;
        return r;
    };
    const auto a = knn_classify(m, m.exp0_value(tr), labels, m.exp0_value(te), 5);
    const auto b = knn_classify(m, m.exp0_value(rotate(tr)), labels, m.exp0_value(rotate(te)), 5);
    CHECK(a == b);
}
