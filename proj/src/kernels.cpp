#include "hypertopic/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <omp.h>

#include "hypertopic/corpus.hpp"
#include "hypertopic/model.hpp"

namespace hypertopic::kernels {

using ad::Matrix;

SparseRows tfidf_rows(const DocumentGraph& graph) {
    SparseRows out;
    out.cols = graph.vocab.size();
    const double N = graph.size();
    std::vector<int> df(static_cast<std::size_t>(out.cols), 0);
    for (const auto& d : graph.docs) {
        for (auto [w, c] : d.counts) ++df[static_cast<std::size_t>(w)];
    }
    out.rows.reserve(graph.docs.size());
    for (const auto& d : graph.docs) {
        std::vector<std::pair<int, double>> row;
        double norm = 0;
        for (auto [w, c] : d.counts) {
            const double idf = std::log((1.0 + N) / (1.0 + df[static_cast<std::size_t>(w)])) + 1.0;
            row.emplace_back(w, c * idf);
            norm += (c * idf) * (c * idf);
        }
        if (norm > 0) {
            norm = std::sqrt(norm);
            for (auto& e : row) e.second /= norm;
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

namespace {

std::vector<int> nearest_for(const SparseRows& rows, std::size_t i, int k, std::vector<double>& scratch) {
    for (auto [w, v] : rows.rows[i]) scratch[static_cast<std::size_t>(w)] = v;
    std::vector<std::pair<double, int>> sims;
    sims.reserve(rows.rows.size());
    for (std::size_t j = 0; j < rows.rows.size(); ++j) {
        if (j == i) continue;
        double s = 0;
        for (auto [w, v] : rows.rows[j]) s += scratch[static_cast<std::size_t>(w)] * v;
        sims.emplace_back(s, static_cast<int>(j));
    }
    for (auto [w, v] : rows.rows[i]) scratch[static_cast<std::size_t>(w)] = 0.0;
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), sims.size());
    auto better = [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; };
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(take), sims.end(), better);
    std::vector<int> out;
    for (std::size_t t = 0; t < take; ++t) out.push_back(sims[t].second);
    return out;
}

}  // namespace

std::vector<std::vector<int>> top_k_similar_serial(const SparseRows& rows, int k) {
    if (k < 1) throw std::invalid_argument("top_k_similar: k must be >= 1");
    std::vector<std::vector<int>> out(rows.rows.size());
    std::vector<double> scratch(static_cast<std::size_t>(rows.cols), 0.0);
    for (std::size_t i = 0; i < rows.rows.size(); ++i) out[i] = nearest_for(rows, i, k, scratch);
    return out;
}

std::vector<std::vector<int>> top_k_similar_parallel(const SparseRows& rows, int k) {
    if (k < 1) throw std::invalid_argument("top_k_similar: k must be >= 1");
    std::vector<std::vector<int>> out(rows.rows.size());
    const auto n = static_cast<long>(rows.rows.size());
#pragma omp parallel
    {
        std::vector<double> scratch(static_cast<std::size_t>(rows.cols), 0.0);
#pragma omp for schedule(dynamic, 16)
        for (long i = 0; i < n; ++i) {
            out[static_cast<std::size_t>(i)] = nearest_for(rows, static_cast<std::size_t>(i), k, scratch);
        }
    }
    return out;
}

Matrix pairwise_sqdist_serial(const Manifold& m, const Matrix& X, const Matrix& Y) {
    if (X.cols() != Y.cols()) throw std::invalid_argument("pairwise_sqdist: dimension mismatch");
    Matrix out(X.rows(), Y.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < Y.rows(); ++j) {
            out(i, j) = m.sqdist(std::span<const double>(X.row(i).data(), static_cast<std::size_t>(X.cols())),
                                 std::span<const double>(Y.row(j).data(), static_cast<std::size_t>(Y.cols())));
        }
    }
    return out;
}

Matrix pairwise_sqdist_parallel(const Manifold& m, const Matrix& X, const Matrix& Y) {
    if (X.cols() != Y.cols()) throw std::invalid_argument("pairwise_sqdist: dimension mismatch");
    Matrix out(X.rows(), Y.rows());
    const long rows = static_cast<long>(X.rows());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < Y.rows(); ++j) {
            out(i, j) = m.sqdist(std::span<const double>(X.row(i).data(), static_cast<std::size_t>(X.cols())),
                                 std::span<const double>(Y.row(j).data(), static_cast<std::size_t>(Y.cols())));
        }
    }
    return out;
}

namespace {

void encode_chunk(const Model& model, const std::vector<std::span<const int>>& docs, std::size_t begin,
                  std::size_t end, Encoded& out) {
    ad::Tape tape(false);
    const BoundParams p = model.bind(tape);
    DocGroup group;
    for (std::size_t i = begin; i < end; ++i) group.tokens.push_back(docs[i]);
    const GroupEncoding enc = model.encode(p, group);
    const auto r = static_cast<Eigen::Index>(begin);
    const auto c = static_cast<Eigen::Index>(end - begin);
    out.docs.middleRows(r, c) = enc.docs.value();
    out.pi.middleRows(r, c) = enc.dist.pi.value();
    out.delta.middleRows(r, c) = enc.dist.delta.value();
    out.theta.middleRows(r, c) = enc.dist.theta.value();
}

Encoded allocate(const Model& model, std::size_t n) {
    const auto N = static_cast<Eigen::Index>(n);
    const TreeLayout& L = model.layout();
    Encoded out;
    out.docs.resize(N, model.config().ambient());
    out.pi.resize(N, static_cast<Eigen::Index>(L.paths.size()));
    out.delta.resize(N, L.levels);
    out.theta.resize(N, L.topics);
    return out;
}

}  // namespace

Encoded encode_isolated_serial(const Model& model, const std::vector<std::span<const int>>& docs, int chunk) {
    if (chunk < 1) throw std::invalid_argument("encode: chunk must be >= 1");
    Encoded out = allocate(model, docs.size());
    for (std::size_t b = 0; b < docs.size(); b += static_cast<std::size_t>(chunk)) {
        encode_chunk(model, docs, b, std::min(docs.size(), b + static_cast<std::size_t>(chunk)), out);
    }
    return out;
}

Encoded encode_isolated_parallel(const Model& model, const std::vector<std::span<const int>>& docs, int chunk) {
    if (chunk < 1) throw std::invalid_argument("encode: chunk must be >= 1");
    Encoded out = allocate(model, docs.size());
    const long chunks = static_cast<long>((docs.size() + static_cast<std::size_t>(chunk) - 1) / static_cast<std::size_t>(chunk));
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
    for (long k = 0; k < chunks; ++k) {
        const std::size_t b = static_cast<std::size_t>(k) * static_cast<std::size_t>(chunk);
        try {
            encode_chunk(model, docs, b, std::min(docs.size(), b + static_cast<std::size_t>(chunk)), out);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace hypertopic::kernels
