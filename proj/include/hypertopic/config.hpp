#pragma once

// Run configuration: defaults, file parsing (JSON or key=value), validation
// and the resolved echo written next to every artifact.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypertopic/corpus.hpp"
#include "hypertopic/eval.hpp"
#include "hypertopic/model.hpp"
#include "hypertopic/objective.hpp"

namespace hypertopic {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
    // paths
    std::string docs;
    std::string edges;
    std::string output = "run";

    ModelConfig model;
    TrainConfig train;
    EvalOptions eval;
    VocabOptions vocab;
    SplitFractions split;
    std::uint64_t split_seed = 13;
    int knn_kappa = 0;  // > 0 induces tf-idf kNN edges when no edge file is given
    bool flat_tree = false;

    // Applies one setting; throws ConfigError for unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    // JSON object (flat keys) or key=value lines; '#' comments allowed.
    void load_file(const std::string& path);
    void load_text(const std::string& text, const std::string& origin = "<config>");
    // Cross-field checks; folds ablation switches into the model config.
    void finalize();

    std::string to_json() const;
    static std::vector<std::string> keys();
};

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace hypertopic
