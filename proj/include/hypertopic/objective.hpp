#pragma once

// Losses, the topic-word decoder, Adam, and the epoch-level training loop.

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypertopic/autodiff.hpp"
#include "hypertopic/corpus.hpp"
#include "hypertopic/manifold.hpp"
#include "hypertopic/topic_tree.hpp"

namespace hypertopic {

class Model;
struct ClassifierVars;

// Raised when a loss term turns non-finite; names the term.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kProbFloor = 1e-12;

// beta = softmax over words of U log0(z_t): |V| x T, columns sum to 1.
ad::Var topic_word_distribution(const Manifold& m, ad::Var topics, ad::Var U);

// d_hat = theta beta^T: docs x |V|, rows sum to 1.
ad::Var reconstruct(ad::Var beta, ad::Var theta);

// -sum counts .* log(max(d_hat, floor)), summed over all rows.
ad::Var topic_loss(ad::Var d_hat, const ad::Matrix& counts);
double topic_loss_value(const ad::Matrix& d_hat, const ad::Matrix& counts);

// -log softmax over [positive, negatives] of -d^2 / tau.
ad::Var graph_loss(const Manifold& m, ad::Var anchor, ad::Var positive, ad::Var negatives, double tau);

// Class probabilities softmax(MLP(log0(d))): docs x C.
ad::Var classifier_probs(const Manifold& m, ad::Var docs, const ClassifierVars& p);
// Cross-entropy summed over docs.
ad::Var supervised_loss(const Manifold& m, ad::Var docs, const std::vector<int>& labels, const ClassifierVars& p);

struct LossWeights {
    double lambda_topic = 1.0;
    double lambda_sup = 1.0;
    bool supervised = false;
};

struct LossParts {
    ad::Var graph, topic, sup;  // any may be invalid (absent)
};

// L_graph + lambda_topic L_topic (+ lambda_sup L_sup).
ad::Var total_loss(const LossParts& parts, const LossWeights& w);

class Adam {
public:
    Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(ad::ParameterStore& params);
    long steps() const { return t_; }

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<ad::Matrix> m_, v_;
};

struct TrainConfig {
    LossWeights weights;
    double tau = 10.0;
    int batch_size = 16;
    int max_neighbors = 5;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int epochs = 20;
    std::uint64_t seed = 42;
    double s_add = 0.05;
    double s_prune = 0.05;
    bool fixed_tree = false;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double loss = 0;         // mean total loss per batch
    double graph_loss = 0;   // mean over positive pairs
    double topic_loss = 0;   // mean per document
    double sup_loss = 0;     // mean per labeled document
    double nll_per_word = 0; // topic loss / words over the epoch
    int topics = 0;          // tree size after the update
    std::vector<TreeChange> changes;
};

// One batch of training documents: sampled centers, one positive neighbor each,
// and attention neighborhoods inside the group.
struct Batch {
    std::vector<int> members;             // global doc indices; centers first
    std::size_t centers = 0;
    std::vector<int> positive;            // per center, member position or -1
    std::vector<std::vector<int>> negatives;
    std::vector<std::vector<int>> neighbors;  // per member, member positions
};

class Trainer {
public:
    // `train_docs` and `train_edges` must not touch held-out documents.
    Trainer(Model& model, const DocumentGraph& graph, std::vector<int> train_docs, const std::vector<Edge>& train_edges,
            TrainConfig config);

    EpochStats run_epoch();
    const std::vector<EpochStats>& history() const { return history_; }
    int epoch() const { return static_cast<int>(history_.size()); }

    Batch make_batch(const std::vector<int>& centers);
    // Loss over one batch with gradients accumulated into the parameters.
    struct StepResult {
        double loss, graph, topic, sup;
        int pairs, labeled, words;
        ad::Matrix theta;  // centers x T
    };
    StepResult forward_backward(const Batch& batch, bool with_grad = true);

private:
    Model& model_;
    const DocumentGraph& graph_;
    std::vector<int> train_docs_;
    std::vector<std::vector<int>> adjacency_;
    TrainConfig config_;
    Adam adam_;
    std::mt19937_64 rng_;
    std::vector<EpochStats> history_;
};

// Dense docs x |V| count matrix for the given documents.
ad::Matrix count_matrix(const DocumentGraph& graph, const std::vector<int>& docs, int vocab_size);

}  // namespace hypertopic
