#pragma once

// Binary checkpoint: magic, version, a length-prefixed JSON header (model
// config, tree, vocabulary, run config, config hash) and named tensors stored
// as rows, cols and raw little-endian doubles. Identical state gives
// identical bytes.

#include <cstdint>
#include <string>

#include "hypertopic/corpus.hpp"
#include "hypertopic/model.hpp"

namespace hypertopic {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    Model model;
    Vocabulary vocab;
    std::string run_config;  // resolved run config JSON, may be empty
    std::vector<std::string> label_names;
    int epoch = 0;
    std::uint64_t config_hash = 0;
};

std::uint64_t model_config_hash(const ModelConfig& config);

void save_checkpoint(const std::string& path, const Model& model, const Vocabulary& vocab,
                     const std::vector<std::string>& label_names, const std::string& run_config, int epoch);

// Throws DataError on malformed files.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hypertopic
