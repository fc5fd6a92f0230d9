#pragma once

// Parameters, topic tree and the nested encoder that interleaves Transformer
// layers with tree and graph token injection.

#include <cstdint>
#include <span>
#include <vector>

#include "hypertopic/autodiff.hpp"
#include "hypertopic/doc_topic.hpp"
#include "hypertopic/drnn.hpp"
#include "hypertopic/graph_attn.hpp"
#include "hypertopic/manifold.hpp"
#include "hypertopic/topic_tree.hpp"
#include "hypertopic/transformer.hpp"

namespace hypertopic {

struct ModelConfig {
    int dim = 63;  // n; points have n+1 coordinates
    int layers = 4;
    int heads = 4;
    int tree_levels = 3;
    int tree_branching = 3;
    double curvature = 1.0;
    int max_len = 128;
    Space space = Space::hyperbolic;
    bool tree_injection = true;
    bool graph_injection = true;
    int num_labels = 0;  // > 0 adds the supervised classifier head

    int ambient() const { return dim + 1; }
    void validate() const;
};

struct ClassifierVars {
    ad::Var W1, b1, W2, b2;
};

// Every parameter placed on one tape.
struct BoundParams {
    EmbedderVars embed;
    DrnnVars drnn;
    HypRnnVars level_rnn;
    GraphAttnVars graph;
    std::vector<LayerVars> layers;
    ad::Var decoder;  // U: |V| x (n+1)
    ClassifierVars classifier;
    bool has_classifier = false;
};

// A set of documents encoded jointly. neighbors[g] lists the group members
// whose current-layer [CLS] states document g attends to.
struct DocGroup {
    std::vector<std::span<const int>> tokens;
    std::vector<std::vector<int>> neighbors;

    std::size_t size() const { return tokens.size(); }
};

struct GroupEncoding {
    ad::Var docs;    // G x (n+1) final [CLS] points
    ad::Var topics;  // T x (n+1)
    ad::Var levels;  // H x (n+1)
    TopicDistribution dist;  // from the final [CLS] states
};

class Model {
public:
    Model(const ModelConfig& config, int vocab_size, std::uint64_t seed);
    // Restores a model from saved parameters and tree.
    Model(const ModelConfig& config, int vocab_size, ad::ParameterStore params, TopicTree tree);

    const ModelConfig& config() const { return config_; }
    const Manifold& manifold() const { return manifold_; }
    int vocab_size() const { return vocab_size_; }

    ad::ParameterStore& params() { return params_; }
    const ad::ParameterStore& params() const { return params_; }

    const TopicTree& tree() const { return tree_; }
    const TreeLayout& layout() const { return layout_; }
    // Replaces the tree and rebuilds the index layout.
    void set_tree(TopicTree tree);

    BoundParams bind(ad::Tape& tape);
    // Read-only binding; the tape must have gradients disabled.
    BoundParams bind(ad::Tape& tape) const;

    GroupEncoding encode(const BoundParams& p, const DocGroup& group) const;

    // Beta: |V| x T.
    ad::Matrix topic_word_matrix() const;

private:
    void init_params(std::uint64_t seed);

    ModelConfig config_;
    Manifold manifold_;
    int vocab_size_;
    ad::ParameterStore params_;
    TopicTree tree_;
    TreeLayout layout_;
};

}  // namespace hypertopic
