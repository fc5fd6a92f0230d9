#pragma once

// Evaluation: kNN classification with micro/macro F1, NPMI coherence,
// perplexity exponent and link-prediction AUC.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hypertopic/autodiff.hpp"
#include "hypertopic/corpus.hpp"
#include "hypertopic/manifold.hpp"

namespace hypertopic {

class Model;

// Majority vote over the kappa nearest training points; ties go to the
// smaller mean distance, then the lower label.
std::vector<int> knn_classify(const Manifold& m, const ad::Matrix& train, const std::vector<int>& train_labels,
                              const ad::Matrix& test, int kappa);

struct F1Scores {
    double micro = 0;
    double macro = 0;
};

// Macro averages over every class seen in gold or pred.
F1Scores f1_scores(const std::vector<int>& pred, const std::vector<int>& gold);

// Document co-occurrence probabilities for NPMI.
class CooccurrenceReference {
public:
    virtual ~CooccurrenceReference() = default;
    virtual double prob(int w) const = 0;
    virtual double joint(int a, int b) const = 0;
};

// Sliding windows over token sequences (window 0 = whole document), with
// additive smoothing: P = (count + s) / (windows + s).
class WindowReference : public CooccurrenceReference {
public:
    WindowReference(const std::vector<std::vector<int>>& docs, int vocab_size, int window = 10, double smoothing = 1.0);
    double prob(int w) const override;
    double joint(int a, int b) const override;
    long windows() const { return windows_; }

private:
    std::vector<std::vector<long>> occurs_;  // per word, ascending window ids
    long windows_ = 0;
    double smoothing_;
};

double npmi_pair(const CooccurrenceReference& ref, int a, int b);
// Mean over topics of the mean pairwise NPMI among each topic's words.
double npmi(const std::vector<std::vector<int>>& topic_words, const CooccurrenceReference& ref);

// Sum of -counts log d_hat over sum of counts; 0 when there are no words.
double perplexity_exponent(const ad::Matrix& d_hat, const ad::Matrix& counts);

// Pairwise AUC; ties count one half.
double auc(const std::vector<double>& positive_scores, const std::vector<double>& negative_scores);

// `count` distinct unlinked pairs among `docs`, uniformly at random.
std::vector<Edge> sample_non_edges(const std::vector<int>& docs, const std::vector<std::vector<int>>& adjacency,
                                   std::size_t count, std::uint64_t seed);

// AUC of -d^2 for positive edges against negative pairs; rows index `embs`.
double link_auc(const Manifold& m, const ad::Matrix& embs, const std::vector<Edge>& positives,
                const std::vector<Edge>& negatives);

// Top-k word indices of every column of beta (|V| x T); ties to lower index.
std::vector<std::vector<int>> top_words(const ad::Matrix& beta, int k);

struct EvalOptions {
    int kappa = 5;
    int top_k = 10;
    int npmi_window = 10;
    std::uint64_t seed = 7;
};

struct EvalReport {
    std::optional<double> micro_f1, macro_f1;
    std::optional<double> link_auc;
    double npmi = 0;
    double perplexity_exponent = 0;
    int test_docs = 0;
    int test_edges = 0;
    std::vector<int> topic_ids;
    std::vector<std::vector<std::string>> topic_words;

    std::string to_json() const;
    std::string to_table() const;
};

// Encodes every document without graph context, classifies test documents
// against training documents, scores test-test links, and measures
// coherence and held-out perplexity.
EvalReport evaluate(const Model& model, const DocumentGraph& graph, const Split& split, const EvalOptions& options);

}  // namespace hypertopic
