#include <benchmark/benchmark.h>

#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hypertopic/kernels.hpp"
#include "hypertopic/model.hpp"
#include "hypertopic/synthetic.hpp"

using namespace hypertopic;

namespace {

void threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

const DocumentGraph& corpus() {
    static const DocumentGraph g = [] {
        TwoLevelCorpusOptions o;
        o.docs = 800;
        return make_two_level_corpus(o).graph;
    }();
    return g;
}

ad::Matrix points(int rows, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 0.6);
    ad::Matrix t = ad::Matrix::Zero(rows, n + 1);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 1; c <= n; ++c) t(r, c) = z(rng);
    return Manifold().exp0_value(t);
}

void BM_TopK(benchmark::State& state, bool parallel) {
    threads(static_cast<int>(state.range(0)));
    const auto rows = kernels::tfidf_rows(corpus());
    for (auto _ : state) {
        auto r = parallel ? kernels::top_k_similar_parallel(rows, 5) : kernels::top_k_similar_serial(rows, 5);
        benchmark::DoNotOptimize(r);
    }
}

void BM_Pairwise(benchmark::State& state, bool parallel) {
    threads(static_cast<int>(state.range(0)));
    const Manifold m;
    const ad::Matrix X = points(600, 63, 1), Y = points(600, 63, 2);
    for (auto _ : state) {
        auto d = parallel ? kernels::pairwise_sqdist_parallel(m, X, Y) : kernels::pairwise_sqdist_serial(m, X, Y);
        benchmark::DoNotOptimize(d.data());
    }
}

void BM_Encode(benchmark::State& state, bool parallel) {
    threads(static_cast<int>(state.range(0)));
    const DocumentGraph& g = corpus();
    ModelConfig c;
    c.dim = 31;
    c.layers = 2;
    const Model model(c, g.vocab.size(), 1);
    std::vector<std::span<const int>> docs;
    for (std::size_t i = 0; i < 128; ++i) docs.emplace_back(g.docs[i].tokens);
    for (auto _ : state) {
        auto e = parallel ? kernels::encode_isolated_parallel(model, docs) : kernels::encode_isolated_serial(model, docs);
        benchmark::DoNotOptimize(e.theta.data());
    }
}

}  // namespace

BENCHMARK_CAPTURE(BM_TopK, serial, false)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TopK, openmp, true)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Pairwise, serial, false)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Pairwise, openmp, true)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Encode, serial, false)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Encode, openmp, true)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
