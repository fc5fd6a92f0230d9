#pragma once

// Per-document distributions over the topic tree: stick-breaking path
// distribution (pi), level distribution (delta), tree-wide topic distribution
// (theta), and the tree embedding. All ops are row-batched: row g of every
// input/output belongs to document g.

#include <span>
#include <vector>

#include "hypertopic/autodiff.hpp"
#include "hypertopic/manifold.hpp"
#include "hypertopic/topic_tree.hpp"

namespace hypertopic {

// Index-space view of a TopicTree (indices follow bfs_order()).
struct TreeLayout {
    int topics = 0;
    int levels = 0;
    std::vector<int> ids;                     // index -> topic id
    std::vector<int> level;                   // 0-based level per index
    std::vector<int> parent;                  // -1 for the root
    std::vector<std::vector<int>> children;   // ordered child indices
    std::vector<std::vector<int>> paths;      // index sequences, enumerate_paths order
    ad::Matrix level_select;                  // levels x topics, 1 where level(t) = h
    ad::Matrix leaf_select;                   // topics x paths, 1 at each path's leaf
    ad::Matrix path_membership;               // topics x paths, 1 where the path visits t

    static TreeLayout from(const TopicTree& tree);
};

// Stick-breaking with the residual on the last entry; row-wise.
std::vector<double> stick_breaking(std::span<const double> sigma);
ad::Var stick_breaking_rows(ad::Var sigma);

// Probability of reaching every topic from the root (product of child
// selections along the way); row-wise over documents.
ad::Var tree_reach(ad::Var sigma, const TreeLayout& layout);

struct TopicDistribution {
    ad::Var pi;     // docs x paths
    ad::Var delta;  // docs x levels
    ad::Var theta;  // docs x topics
};

// docs: G x (n+1) document points; topics: T x (n+1); levels: H x (n+1).
TopicDistribution topic_distribution(const Manifold& m, ad::Var docs, ad::Var topics, ad::Var levels,
                                     const TreeLayout& layout);

// theta_t = delta(level(t)) * sum of pi over paths through t.
ad::Var combine_theta(ad::Var pi, ad::Var delta, const TreeLayout& layout);

// exp0(theta * log0(Z)): G x (n+1).
ad::Var tree_embedding(const Manifold& m, ad::Var theta, ad::Var topics);

}  // namespace hypertopic
