#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hypertopic/kernels.hpp"
#include "hypertopic/model.hpp"
#include "hypertopic/synthetic.hpp"
#include "support.hpp"

using namespace hypertopic;
using ad::Matrix;

namespace {

void use_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

}  // namespace

TEST_CASE("tf-idf rows are unit length and sorted") {
    const PlantedCorpus pc = make_two_level_corpus({});
    const auto rows = kernels::tfidf_rows(pc.graph);
    CHECK(rows.rows.size() == pc.graph.size());
    CHECK(rows.cols == pc.graph.vocab.size());
    for (const auto& r : rows.rows) {
        double sq = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            sq += r[i].second * r[i].second;
            if (i) CHECK(r[i - 1].first < r[i].first);
        }
        CHECK(std::abs(sq - 1.0) < 1e-12);
    }
}

TEST_CASE("top-k similarity: parallel equals serial") {
    const PlantedCorpus pc = make_two_level_corpus({});
    const auto rows = kernels::tfidf_rows(pc.graph);
    for (int threads : {1, 3}) {
        use_threads(threads);
        for (int k : {1, 5, 12}) {
            const auto a = kernels::top_k_similar_serial(rows, k);
            CHECK(a == kernels::top_k_similar_parallel(rows, k));
            for (std::size_t i = 0; i < a.size(); ++i) {
                CHECK(a[i].size() == static_cast<std::size_t>(k));
                CHECK(std::find(a[i].begin(), a[i].end(), static_cast<int>(i)) == a[i].end());
            }
        }
    }
    use_threads(1);
}

TEST_CASE("pairwise distances: parallel equals serial and the manifold") {
    std::mt19937_64 rng(2);
    for (Space s : {Space::hyperbolic, Space::euclidean}) {
        const Manifold m(s, geometry::Curvature(0.8));
        const Matrix X = m.exp0_value(testing::tangent_rows(rng, 37, 6, 1.0));
        const Matrix Y = m.exp0_value(testing::tangent_rows(rng, 23, 6, 1.0));
        use_threads(3);
        const Matrix a = kernels::pairwise_sqdist_serial(m, X, Y);
        const Matrix b = kernels::pairwise_sqdist_parallel(m, X, Y);
        use_threads(1);
        CHECK(a == b);
        ad::Tape t(false);
        CHECK((a - m.sqdist(t.constant(X), t.constant(Y)).value()).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("isolated encoding: parallel equals serial") {
    TwoLevelCorpusOptions o;
    o.docs = 40;
    const PlantedCorpus pc = make_two_level_corpus(o);
    ModelConfig c;
    c.dim = 6;
    c.layers = 2;
    c.heads = 2;
    c.tree_levels = 3;
    c.tree_branching = 2;
    c.max_len = 24;
    const Model model(c, pc.graph.vocab.size(), 4);
    std::vector<std::span<const int>> docs;
    for (const auto& d : pc.graph.docs) docs.emplace_back(d.tokens);
    use_threads(3);
    const auto a = kernels::encode_isolated_serial(model, docs, 7);
    const auto b = kernels::encode_isolated_parallel(model, docs, 7);
    use_threads(1);
    CHECK(a.docs == b.docs);
    CHECK(a.theta == b.theta);
    CHECK(a.pi == b.pi);
    CHECK(a.delta == b.delta);
    CHECK(a.docs.rows() == 40);
    CHECK(a.theta.cols() == static_cast<Eigen::Index>(model.tree().size()));
    for (Eigen::Index r = 0; r < 40; ++r) CHECK(std::abs(a.theta.row(r).sum() - 1.0) < 1e-8);
    // chunking is invisible: isolated documents do not interact
    const auto c1 = kernels::encode_isolated_serial(model, docs, 1);
    CHECK((c1.theta - a.theta).cwiseAbs().maxCoeff() < 1e-12);
}
