#pragma once

// Corpus and graph ingestion: tokenization, vocabulary, bag-of-words counts,
// undirected edges, tf-idf kNN edge induction and document-level splits.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hypertopic {

// Malformed input; `line` is 1-based, 0 when not tied to a line.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, std::string file = {}, std::size_t line = 0);
    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

// Lowercase, split on whitespace, strip leading/trailing punctuation.
std::vector<std::string> tokenize(std::string_view text);

struct Vocabulary {
    std::vector<std::string> words;
    std::unordered_map<std::string, int> index;

    int size() const { return static_cast<int>(words.size()); }
    int find(const std::string& word) const;  // -1 when absent
    static Vocabulary from_words(std::vector<std::string> words);
};

struct VocabOptions {
    int min_count = 1;
    int max_vocab = 0;  // 0 = unlimited
    std::vector<std::string> stopwords;
};

// Index order: descending frequency, then lexicographic.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs, const VocabOptions& options);

using Edge = std::pair<int, int>;  // document indices, first < second

struct Document {
    std::string id;
    std::optional<std::string> label;
    std::string text;
    std::vector<int> tokens;                  // in-vocabulary token ids in order
    std::vector<std::pair<int, int>> counts;  // (word, count), ascending word
    int length = 0;                           // total in-vocabulary tokens
    bool no_vocab_tokens = false;
};

struct DocumentGraph {
    std::vector<Document> docs;
    Vocabulary vocab;
    std::vector<Edge> edges;                  // sorted, unique, no self-loops
    std::vector<std::vector<int>> adjacency;  // sorted neighbor lists
    std::vector<std::string> label_names;     // sorted
    std::vector<int> labels;                  // per doc, -1 if unlabeled
    std::vector<std::string> warnings;

    int size() const { return static_cast<int>(docs.size()); }
    int num_labels() const { return static_cast<int>(label_names.size()); }
    bool has_labels() const;
    // Index of a document id, -1 when absent.
    int find(const std::string& id) const;

    // Normalizes pairs (order, duplicates, self-loops) and rebuilds adjacency.
    void set_edges(const std::vector<Edge>& raw);

    std::unordered_map<std::string, int> id_index;
};

struct RawDocument {
    std::string id;
    std::optional<std::string> label;
    std::string text;
};

// Builds a graph from parsed records, tokenizing and counting with a vocabulary
// built over all of them.
DocumentGraph make_graph(std::vector<RawDocument> records, const VocabOptions& options);
// Same, with a fixed vocabulary (out-of-vocabulary tokens are dropped).
DocumentGraph make_graph(std::vector<RawDocument> records, const Vocabulary& vocab);

// Documents: TSV "id<TAB>label<TAB>text" or "id<TAB>text", or JSON lines with
// keys id/label/text. Edges: whitespace-separated id pairs; '#' starts a
// comment. An empty edges_path means no edges.
std::vector<RawDocument> read_documents(const std::string& docs_path);
std::vector<std::pair<std::string, std::string>> read_edge_ids(const std::string& edges_path);

DocumentGraph load_corpus(const std::string& docs_path, const std::string& edges_path, const VocabOptions& options);
DocumentGraph load_corpus(const std::string& docs_path, const std::string& edges_path, const Vocabulary& vocab);

// Writes the TSV/edge-list pair that load_corpus reads back identically.
void save_corpus(const DocumentGraph& graph, const std::string& docs_path, const std::string& edges_path);

// Each document linked to its kappa most cosine-similar others under smoothed
// tf-idf; ties broken by lower index; result symmetrized.
std::vector<Edge> knn_edges(const DocumentGraph& graph, int kappa);

struct SplitFractions {
    double train = 0.72;
    double validation = 0.08;
    double test = 0.20;
};

enum class Role : std::uint8_t { train, validation, test };

struct Split {
    std::vector<int> train, validation, test;  // ascending document indices
    std::vector<Role> role;                    // per document
};

Split split_documents(const DocumentGraph& graph, const SplitFractions& fractions, std::uint64_t seed);

struct EdgePartition {
    std::vector<Edge> train;       // both endpoints in train
    std::vector<Edge> validation;  // both in validation
    std::vector<Edge> test;        // both in test
    std::vector<Edge> cross;       // endpoints in different parts; unused
};

EdgePartition partition_edges(const DocumentGraph& graph, const Split& split);

// Neighbor lists of `n` documents from an edge list.
std::vector<std::vector<int>> adjacency_from(int n, const std::vector<Edge>& edges);

}  // namespace hypertopic
