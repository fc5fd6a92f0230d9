#include "hypertopic/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "hypertopic/objective.hpp"

namespace hypertopic {

using ad::Matrix;
using ad::Var;

void ModelConfig::validate() const {
    if (dim < 1) throw std::invalid_argument("model.dim must be >= 1");
    if (layers < 2) throw std::invalid_argument("model.layers must be >= 2");
    if (heads < 1 || heads > dim + 1) throw std::invalid_argument("model.heads must be in [1, dim+1]");
    if (tree_levels < 2) throw std::invalid_argument("model.tree_levels must be >= 2");
    if (tree_branching < 1) throw std::invalid_argument("model.tree_branching must be >= 1");
    if (!(curvature > 0.0) || !std::isfinite(curvature)) throw std::invalid_argument("model.curvature must be > 0");
    if (max_len < 1) throw std::invalid_argument("model.max_len must be >= 1");
    if (num_labels < 0) throw std::invalid_argument("model.num_labels must be >= 0");
}

namespace {

class Init {
public:
    explicit Init(std::uint64_t seed) : rng_(seed) {}

    Matrix normal(Eigen::Index r, Eigen::Index c, double sd) {
        std::normal_distribution<double> dist(0.0, sd);
        Matrix out(r, c);
        for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = dist(rng_);
        return out;
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace

Model::Model(const ModelConfig& config, int vocab_size, std::uint64_t seed)
    : config_(config),
      manifold_(config.space, geometry::Curvature(config.curvature)),
      vocab_size_(vocab_size),
      tree_(TopicTree::complete(config.tree_levels, config.tree_branching)) {
    config_.validate();
    if (vocab_size < 1) throw std::invalid_argument("Model: empty vocabulary");
    layout_ = TreeLayout::from(tree_);
    init_params(seed);
}

Model::Model(const ModelConfig& config, int vocab_size, ad::ParameterStore params, TopicTree tree)
    : config_(config),
      manifold_(config.space, geometry::Curvature(config.curvature)),
      vocab_size_(vocab_size),
      params_(std::move(params)),
      tree_(std::move(tree)) {
    config_.validate();
    if (tree_.depth() != config_.tree_levels) throw std::invalid_argument("Model: tree depth does not match config");
    tree_.validate();
    layout_ = TreeLayout::from(tree_);
    // Binding checks every expected name and shape.
    ad::Tape probe(false);
    bind(probe);
}

void Model::set_tree(TopicTree tree) {
    tree.validate();
    if (tree.depth() != config_.tree_levels) throw std::invalid_argument("set_tree: depth mismatch");
    tree_ = std::move(tree);
    layout_ = TreeLayout::from(tree_);
}

void Model::init_params(std::uint64_t seed) {
    Init init(seed);
    const Eigen::Index n = config_.dim;
    const Eigen::Index d = config_.ambient();
    const Eigen::Index hidden = 4 * d;
    const Eigen::Index dh = head_dim(static_cast<int>(d), config_.heads);
    const double sq = 1.0 / std::sqrt(static_cast<double>(d));
    const double sn = 1.0 / std::sqrt(static_cast<double>(n));

    params_.add("embed.tokens", init.normal(vocab_size_, n, sn));
    params_.add("embed.cls", init.normal(1, n, sn));
    params_.add("embed.positions", init.normal(config_.max_len + 1, n, 0.1 * sn));

    // Contracting recurrences keep topic and level points near the documents.
    const double rec = 0.5 * sq;
    for (const char* part : {"drnn.ancestral", "drnn.fraternal"}) {
        params_.add(std::string(part) + ".W", init.normal(d, d, rec));
        params_.add(std::string(part) + ".b", init.normal(1, n, 0.5 * sn));
    }
    params_.add("drnn.combine.W", init.normal(d, d, rec));
    params_.add("drnn.init", init.normal(1, n, sn));
    params_.add("level.W", init.normal(d, d, rec));
    params_.add("level.b", init.normal(1, n, 0.5 * sn));

    params_.add("graph.W", init.normal(d, d, sq));
    params_.add("graph.b_att", Matrix::Zero(1, 2 * d));

    for (int l = 0; l < config_.layers; ++l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        params_.add(pre + "Wq", init.normal(d, d, sq));
        params_.add(pre + "Wk", init.normal(d, d, sq));
        params_.add(pre + "Wv", init.normal(d, d, sq));
        params_.add(pre + "Wo", init.normal(config_.heads * dh, d, 1.0 / std::sqrt(static_cast<double>(config_.heads * dh))));
        params_.add(pre + "ln1.gain", Matrix::Ones(1, d));
        params_.add(pre + "ln1.bias", Matrix::Zero(1, d));
        params_.add(pre + "W1", init.normal(d, hidden, sq));
        params_.add(pre + "b1", Matrix::Zero(1, hidden));
        params_.add(pre + "W2", init.normal(hidden, d, 1.0 / std::sqrt(static_cast<double>(hidden))));
        params_.add(pre + "b2", Matrix::Zero(1, d));
        // unit-norm tangent outputs
        params_.add(pre + "ln2.gain", Matrix::Constant(1, d, sq));
        params_.add(pre + "ln2.bias", Matrix::Zero(1, d));
    }

    params_.add("decoder.U", init.normal(vocab_size_, d, 1.0));

    if (config_.num_labels > 0) {
        params_.add("classifier.W1", init.normal(d, d, sq));
        params_.add("classifier.b1", Matrix::Zero(1, d));
        params_.add("classifier.W2", init.normal(d, config_.num_labels, sq));
        params_.add("classifier.b2", Matrix::Zero(1, config_.num_labels));
    }
}

BoundParams Model::bind(ad::Tape& tape) {
    const Eigen::Index n = config_.dim;
    const Eigen::Index d = config_.ambient();
    const Eigen::Index dh = head_dim(static_cast<int>(d), config_.heads);
    auto get = [&](const std::string& name, Eigen::Index r, Eigen::Index c) {
        if (!params_.contains(name)) throw std::invalid_argument("missing parameter '" + name + "'");
        ad::Parameter& p = params_.at(name);
        if (p.value.rows() != r || p.value.cols() != c) {
            throw std::invalid_argument("parameter '" + name + "' has shape " + std::to_string(p.value.rows()) + "x" +
                                        std::to_string(p.value.cols()) + ", expected " + std::to_string(r) + "x" +
                                        std::to_string(c));
        }
        return tape.parameter(p);
    };

    BoundParams b;
    b.embed.tokens = get("embed.tokens", vocab_size_, n);
    b.embed.cls = get("embed.cls", 1, n);
    b.embed.positions = get("embed.positions", config_.max_len + 1, n);
    b.drnn.ancestral = {get("drnn.ancestral.W", d, d), get("drnn.ancestral.b", 1, n)};
    b.drnn.fraternal = {get("drnn.fraternal.W", d, d), get("drnn.fraternal.b", 1, n)};
    b.drnn.combine_W = get("drnn.combine.W", d, d);
    b.drnn.init_state = get("drnn.init", 1, n);
    b.level_rnn = {get("level.W", d, d), get("level.b", 1, n)};
    b.graph = {get("graph.W", d, d), get("graph.b_att", 1, 2 * d)};
    for (int l = 0; l < config_.layers; ++l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        LayerVars lv;
        lv.Wq = get(pre + "Wq", d, d);
        lv.Wk = get(pre + "Wk", d, d);
        lv.Wv = get(pre + "Wv", d, d);
        lv.Wo = get(pre + "Wo", config_.heads * dh, d);
        lv.ln1_gain = get(pre + "ln1.gain", 1, d);
        lv.ln1_bias = get(pre + "ln1.bias", 1, d);
        lv.W1 = get(pre + "W1", d, 4 * d);
        lv.b1 = get(pre + "b1", 1, 4 * d);
        lv.W2 = get(pre + "W2", 4 * d, d);
        lv.b2 = get(pre + "b2", 1, d);
        lv.ln2_gain = get(pre + "ln2.gain", 1, d);
        lv.ln2_bias = get(pre + "ln2.bias", 1, d);
        b.layers.push_back(lv);
    }
    b.decoder = get("decoder.U", vocab_size_, d);
    if (config_.num_labels > 0) {
        b.classifier = {get("classifier.W1", d, d), get("classifier.b1", 1, d),
                        get("classifier.W2", d, config_.num_labels), get("classifier.b2", 1, config_.num_labels)};
        b.has_classifier = true;
    }
    return b;
}

namespace {

Var cls_rows(const std::vector<Var>& states) {
    std::vector<Var> rows;
    rows.reserve(states.size());
    for (const Var& s : states) rows.push_back(ad::slice_rows(s, 0, 1));
    return rows.size() == 1 ? rows.front() : ad::concat_rows(rows);
}

}  // namespace

GroupEncoding Model::encode(const BoundParams& p, const DocGroup& group) const {
    const Manifold& m = manifold_;
    const std::size_t G = group.size();
    if (G == 0) throw std::invalid_argument("encode: empty group");
    if (!group.neighbors.empty() && group.neighbors.size() != G) {
        throw std::invalid_argument("encode: neighbor lists do not match group size");
    }

    GroupEncoding out;
    out.topics = compute_topic_embeddings(m, tree_, p.drnn);
    out.levels = compute_level_embeddings(m, layout_.levels, p.level_rnn, seed_point(m, p.drnn.init_state));

    std::vector<Var> states(G);
    for (std::size_t g = 0; g < G; ++g) {
        for (int tok : group.tokens[g]) {
            if (tok < 0 || tok >= vocab_size_) throw std::out_of_range("encode: token id outside vocabulary");
        }
        states[g] = hyp_trm_layer(m, embed_tokens(m, p.embed, group.tokens[g], config_.max_len), {}, p.layers[0],
                                  config_.heads);
    }

    for (int l = 1; l < config_.layers; ++l) {
        const Var cls = cls_rows(states);
        Var tree_tokens;
        Var graph_states;
        if (config_.tree_injection) {
            const TopicDistribution dist = topic_distribution(m, cls, out.topics, out.levels, layout_);
            tree_tokens = tree_embedding(m, dist.theta, out.topics);
        }
        if (config_.graph_injection) graph_states = hgnn_transform(m, cls, p.graph);

        for (std::size_t g = 0; g < G; ++g) {
            std::vector<Var> extras;
            if (tree_tokens.valid()) extras.push_back(ad::slice_rows(tree_tokens, static_cast<Eigen::Index>(g), 1));
            if (graph_states.valid()) {
                Var nbrs;
                if (!group.neighbors.empty() && !group.neighbors[g].empty()) {
                    for (int j : group.neighbors[g]) {
                        if (j < 0 || static_cast<std::size_t>(j) >= G) throw std::out_of_range("encode: neighbor index");
                    }
                    nbrs = ad::gather_rows(graph_states, group.neighbors[g]);
                }
                extras.push_back(hgnn_aggregate(m, ad::slice_rows(graph_states, static_cast<Eigen::Index>(g), 1), nbrs,
                                                p.graph));
            }
            states[g] = hyp_trm_layer(m, states[g], extras, p.layers[static_cast<std::size_t>(l)], config_.heads);
        }
    }

    out.docs = cls_rows(states);
    out.dist = topic_distribution(m, out.docs, out.topics, out.levels, layout_);
    return out;
}

BoundParams Model::bind(ad::Tape& tape) const {
    if (tape.grad_enabled()) throw std::logic_error("const bind needs a tape without gradients");
    // A gradient-free tape never writes to its parameters.
    return const_cast<Model&>(*this).bind(tape);
}

Matrix Model::topic_word_matrix() const {
    ad::Tape tape(false);
    const BoundParams p = bind(tape);
    const Var topics = compute_topic_embeddings(manifold_, tree_, p.drnn);
    return topic_word_distribution(manifold_, topics, p.decoder).value();
}

}  // namespace hypertopic
