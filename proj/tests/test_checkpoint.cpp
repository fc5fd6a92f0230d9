#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <unistd.h>

#include "hypertopic/checkpoint.hpp"
#include "model_check.hpp"

using namespace hypertopic;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
}

struct Scratch {
    fs::path dir = fs::temp_directory_path() / ("hypertopic_ckpt_" + std::to_string(::getpid()));
    Scratch() { fs::create_directories(dir); }
    ~Scratch() { fs::remove_all(dir); }
    std::string at(const char* name) const { return (dir / name).string(); }
};

Model grown_model(const DocumentGraph& g) {
    Model m(testing::tiny_config(2), g.vocab.size(), 3);
    TopicTree t = m.tree();
    t.add_child(t.root());
    m.set_tree(t);
    return m;
}

}  // namespace

TEST_CASE("checkpoint round trip restores parameters, tree and metadata") {
    Scratch s;
    const DocumentGraph g = testing::tiny_graph();
    const Model m = grown_model(g);
    save_checkpoint(s.at("a.ckpt"), m, g.vocab, g.label_names, "{\"dim\":4}", 7);
    const Checkpoint c = load_checkpoint(s.at("a.ckpt"));
    CHECK(c.epoch == 7);
    CHECK(c.run_config == "{\"dim\":4}");
    CHECK(c.label_names == g.label_names);
    CHECK(c.vocab.words == g.vocab.words);
    CHECK(c.config_hash == model_config_hash(m.config()));
    CHECK(c.model.tree().bfs_order() == m.tree().bfs_order());
    CHECK(c.model.tree().next_id() == m.tree().next_id());
    REQUIRE(c.model.params().all().size() == m.params().all().size());
    for (std::size_t i = 0; i < m.params().all().size(); ++i) {
        CHECK(c.model.params().all()[i].name == m.params().all()[i].name);
        CHECK(c.model.params().all()[i].value == m.params().all()[i].value);
    }
    CHECK(c.model.topic_word_matrix() == m.topic_word_matrix());
}

TEST_CASE("identical state gives identical bytes") {
    Scratch s;
    const DocumentGraph g = testing::tiny_graph();
    save_checkpoint(s.at("a.ckpt"), grown_model(g), g.vocab, g.label_names, "", 1);
    const Checkpoint c = load_checkpoint(s.at("a.ckpt"));
    save_checkpoint(s.at("b.ckpt"), c.model, c.vocab, c.label_names, c.run_config, c.epoch);
    CHECK(read_bytes(s.at("a.ckpt")) == read_bytes(s.at("b.ckpt")));
}

TEST_CASE("damaged checkpoints are rejected") {
    Scratch s;
    const DocumentGraph g = testing::tiny_graph();
    save_checkpoint(s.at("a.ckpt"), grown_model(g), g.vocab, g.label_names, "", 1);
    const std::string bytes = read_bytes(s.at("a.ckpt"));

    write_bytes(s.at("t.ckpt"), bytes.substr(0, bytes.size() - 9));
    CHECK_THROWS_AS(load_checkpoint(s.at("t.ckpt")), DataError);
    write_bytes(s.at("h.ckpt"), bytes.substr(0, 40));
    CHECK_THROWS_AS(load_checkpoint(s.at("h.ckpt")), DataError);
    write_bytes(s.at("x.ckpt"), bytes + "x");
    CHECK_THROWS_AS(load_checkpoint(s.at("x.ckpt")), DataError);
    write_bytes(s.at("m.ckpt"), "not a checkpoint at all");
    CHECK_THROWS_AS(load_checkpoint(s.at("m.ckpt")), DataError);
    CHECK_THROWS_AS(load_checkpoint(s.at("missing.ckpt")), DataError);

    std::string edited = bytes;
    const auto pos = edited.find("\"dim\":4");
    REQUIRE(pos != std::string::npos);
    edited[pos + 6] = '5';
    write_bytes(s.at("c.ckpt"), edited);
    try {
        load_checkpoint(s.at("c.ckpt"));
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("hash") != std::string::npos);
    }
}

TEST_CASE("config hash tracks the model config") {
    ModelConfig a = testing::tiny_config(0), b = a;
    CHECK(model_config_hash(a) == model_config_hash(b));
    b.curvature = 2.0;
    CHECK(model_config_hash(a) != model_config_hash(b));
}
