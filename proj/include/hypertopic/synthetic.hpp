#pragma once

// Generated corpora with planted structure, for tests, benchmarks and demos.

#include <cstdint>
#include <string>

#include "hypertopic/corpus.hpp"

namespace hypertopic {

// Two-level planted hierarchy: branches, each with subtopics. Every document
// belongs to one subtopic; its words mix general, branch and subtopic words.
// Edges only join documents of the same branch, mostly within a subtopic.
struct TwoLevelCorpusOptions {
    int docs = 200;
    int branches = 2;
    int subtopics = 2;        // per branch
    int general_words = 8;
    int branch_words = 16;    // per branch
    int subtopic_words = 15;  // per subtopic
    int min_length = 30;
    int max_length = 50;
    double general_share = 0.05;
    double branch_share = 0.25;  // the rest is subtopic words
    double zipf_exponent = 1.2;  // word rank skew within each group; 0 is uniform
    double p_same_subtopic = 0.9;
    double p_same_branch = 0.7;  // across subtopics within a branch
    std::uint64_t seed = 1;
};

struct PlantedCorpus {
    DocumentGraph graph;
    std::vector<int> branch;    // per document
    std::vector<int> subtopic;  // per document, global subtopic index
};

// Labels are the branch names; the vocabulary covers every generated word.
PlantedCorpus make_two_level_corpus(const TwoLevelCorpusOptions& options);

// Writes a citation-graph-shaped corpus: 1703 labeled documents over 9
// classes with 3234 distinct undirected links. The edge file also carries
// reversed duplicates and self-loops that a loader must discard.
struct CitationLikeOptions {
    int docs = 1703;
    int classes = 9;
    int links = 3234;
    int duplicate_lines = 200;
    int self_loops = 25;
    int min_length = 40;
    int max_length = 80;
    std::uint64_t seed = 3;
};

void write_citation_like(const std::string& docs_path, const std::string& edges_path,
                         const CitationLikeOptions& options = {});

}  // namespace hypertopic
