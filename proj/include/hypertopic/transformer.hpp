#pragma once

// Hyperbolic Transformer layer with asymmetric attention: keys and values see
// the injected tree/graph tokens, queries (and therefore outputs) only see
// the document's own tokens.

#include <span>
#include <vector>

#include "hypertopic/autodiff.hpp"
#include "hypertopic/manifold.hpp"

namespace hypertopic {

struct EmbedderVars {
    ad::Var tokens;     // |V| x n
    ad::Var cls;        // 1 x n
    ad::Var positions;  // (max_len + 1) x n
};

struct LayerVars {
    ad::Var Wq, Wk, Wv;  // (n+1) x (n+1)
    ad::Var Wo;          // heads*head_dim x (n+1)
    ad::Var ln1_gain, ln1_bias;
    ad::Var W1, b1;  // (n+1) x 4(n+1), 1 x 4(n+1)
    ad::Var W2, b2;  // 4(n+1) x (n+1), 1 x (n+1)
    ad::Var ln2_gain, ln2_bias;
};

inline int head_dim(int ambient, int heads) { return ambient / heads; }

// [CLS, w1, w2, ...] lifted onto the manifold; sequences longer than
// max_len are truncated.
ad::Var embed_tokens(const Manifold& m, const EmbedderVars& p, std::span<const int> tokens, int max_len);

// Tangent-space attention output, one row per token of `tokens`.
ad::Var asym_mha(const Manifold& m, ad::Var tokens, const std::vector<ad::Var>& extras, const LayerVars& p,
                 int heads, std::vector<ad::Matrix>* attention = nullptr);

ad::Var hyp_trm_layer(const Manifold& m, ad::Var tokens, const std::vector<ad::Var>& extras, const LayerVars& p,
                      int heads);

}  // namespace hypertopic
