#pragma once

// Hyperbolic graph attention over a document's neighbors.

#include <vector>

#include "hypertopic/autodiff.hpp"
#include "hypertopic/manifold.hpp"

namespace hypertopic {

struct GraphAttnVars {
    ad::Var W_g;    // (n+1) x (n+1)
    ad::Var b_att;  // 1 x 2(n+1)
};

// exp0(W_g log0(d)), row by row.
ad::Var hgnn_transform(const Manifold& m, ad::Var docs, const GraphAttnVars& p);

// Aggregates transformed neighbor states into the center's graph embedding.
// `neighbors` may be an invalid Var (no neighbors). If `weights` is given it
// receives the attention weights.
ad::Var hgnn_aggregate(const Manifold& m, ad::Var center, ad::Var neighbors, const GraphAttnVars& p,
                       ad::Matrix* weights = nullptr);

}  // namespace hypertopic
