#pragma once

// Hot loops with an OpenMP version and a serial reference each. The serial
// versions define the expected output; tests compare the two.

#include <span>
#include <utility>
#include <vector>

#include "hypertopic/autodiff.hpp"
#include "hypertopic/manifold.hpp"

namespace hypertopic {

struct DocumentGraph;
class Model;

namespace kernels {

// L2-normalized smoothed tf-idf rows: (word, weight) pairs, ascending word.
struct SparseRows {
    std::vector<std::vector<std::pair<int, double>>> rows;
    int cols = 0;
};

SparseRows tfidf_rows(const DocumentGraph& graph);

// Per row, the k most cosine-similar other rows; ties go to the lower index.
std::vector<std::vector<int>> top_k_similar_serial(const SparseRows& rows, int k);
std::vector<std::vector<int>> top_k_similar_parallel(const SparseRows& rows, int k);

// rows(X) x rows(Y) squared distances.
ad::Matrix pairwise_sqdist_serial(const Manifold& m, const ad::Matrix& X, const ad::Matrix& Y);
ad::Matrix pairwise_sqdist_parallel(const Manifold& m, const ad::Matrix& X, const ad::Matrix& Y);

struct Encoded {
    ad::Matrix docs;   // N x (n+1) final document points
    ad::Matrix pi;     // N x paths
    ad::Matrix delta;  // N x levels
    ad::Matrix theta;  // N x T
};

// Encodes every document on its own (empty neighborhood), in chunks.
Encoded encode_isolated_serial(const Model& model, const std::vector<std::span<const int>>& docs, int chunk = 16);
Encoded encode_isolated_parallel(const Model& model, const std::vector<std::span<const int>>& docs, int chunk = 16);

}  // namespace kernels
}  // namespace hypertopic
