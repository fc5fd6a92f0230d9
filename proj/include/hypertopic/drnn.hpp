#pragma once

// Hyperbolic RNN cell and the doubly recurrent network that embeds every
// topic from its parent (ancestral) and its left sibling (fraternal).

#include "hypertopic/autodiff.hpp"
#include "hypertopic/manifold.hpp"
#include "hypertopic/topic_tree.hpp"

namespace hypertopic {

struct HypRnnVars {
    ad::Var W;  // (n+1) x (n+1)
    ad::Var b;  // 1 x n, lifted to [0 || b] at the origin
};

struct DrnnVars {
    HypRnnVars ancestral;
    HypRnnVars fraternal;
    ad::Var combine_W;   // (n+1) x (n+1)
    ad::Var init_state;  // 1 x n tangent coordinates at the origin
};

// exp0(W log0(z)), bias added by transport + exp at the result, then tanh.
ad::Var hyp_rnn_step(const Manifold& m, ad::Var z_prev, const HypRnnVars& p);

// f_tanh(exp0(W (log0(z_p) + log0(z_s)))).
ad::Var hyp_drnn_combine(const Manifold& m, ad::Var z_p, ad::Var z_s, ad::Var combine_W);

// The learned seed point exp0([0 || init_state]).
ad::Var seed_point(const Manifold& m, ad::Var init_state);

// T x (n+1); row k is the topic at position k of tree.bfs_order().
ad::Var compute_topic_embeddings(const Manifold& m, const TopicTree& tree, const DrnnVars& p);

// H x (n+1); row h-1 is level h.
ad::Var compute_level_embeddings(const Manifold& m, int levels, const HypRnnVars& p, ad::Var init);

// 1 / (1 + exp(d(z, x)^2)) for every (row of z, row of x) pair.
ad::Var fermi_dirac(const Manifold& m, ad::Var z, ad::Var x);

}  // namespace hypertopic
