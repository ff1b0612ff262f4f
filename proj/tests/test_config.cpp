#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pclab/config.hpp"
#include "pclab/csv.hpp"
#include "pclab/errors.hpp"

using namespace pclab;

TEST_CASE("config: a full document parses into the expected fields") {
    const char* text = R"({
      "seed": 42,
      "threads": 2,
      "out": "run.csv",
      "net": {"layer_dims": [4, 8, 3], "activations": ["tanh", "identity"],
              "loss": "softmax-cross-entropy", "biases": false},
      "engine": {"variant": "fpa-pc", "gamma": 0.5, "rel_steps": 1.5, "alpha": 0.05},
      "sweep": {"gammas": [0.25, 1.0], "rel_steps": [0.5, 1.0]},
      "data": {"source": "synthetic", "n_train": 100, "d_in": 4, "classes": 3},
      "train": {"epochs": 2, "batch_size": 10},
      "bench": {"repetitions": 5, "t_c": 12}
    })";
    const RunConfig cfg = parse_run_config(text);
    CHECK(cfg.seed == 42);
    CHECK(cfg.threads == 2);
    CHECK(cfg.out_path == "run.csv");
    REQUIRE(cfg.has_net);
    CHECK(cfg.net.depth() == 2);
    CHECK(cfg.net.loss == LossKind::SoftmaxCrossEntropy);
    CHECK(!cfg.net.has_bias);
    REQUIRE(cfg.has_engine);
    CHECK(cfg.engine.variant == Variant::FpaPc);
    CHECK(cfg.engine.gamma == 0.5);
    REQUIRE(cfg.engine.rel_steps.has_value());
    // rel_steps = 1.5 on a depth-2 chain resolves to 3 inference steps.
    CHECK(cfg.resolved_steps(cfg.net) == 3);
    CHECK(cfg.sweep.gammas.size() == 2);
    CHECK(cfg.bench.t_c == 12);
}

TEST_CASE("config: unknown keys are rejected with their path") {
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"sede": 1})"),
                         doctest::Contains("sede"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_run_config(R"({"engine": {"gama": 0.5}})"),
        doctest::Contains("engine.gama"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_run_config(R"({"net": {"layer_dims": [2,2], "activations": ["tanh"],
                                     "losss": "x"}})"),
        doctest::Contains("net.losss"), ConfigError);
}

TEST_CASE("config: invalid values carry field paths") {
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"engine": {"gamma": -1}})"),
                         doctest::Contains("gamma"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_run_config(R"({"net": {"layer_dims": [2, 0], "activations": ["tanh"]}})"),
        doctest::Contains("net"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("not json at all"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("[1,2,3]"), ConfigError);
}

TEST_CASE("config: z-il coercion pins gamma and steps") {
    const RunConfig cfg = parse_run_config(R"({
      "net": {"layer_dims": [3, 3, 3, 3], "activations": ["tanh","tanh","identity"]},
      "engine": {"variant": "z-il", "gamma": 0.7, "steps": 99}
    })");
    const InferenceConfig icfg = cfg.inference_config(cfg.net);
    CHECK(icfg.gamma == 1.0);
    CHECK(icfg.steps == cfg.net.depth() - 1);
}

TEST_CASE("config: hash is stable for equal documents, differs across seeds") {
    const RunConfig a = parse_run_config(R"({"seed": 1, "threads": 1})");
    const RunConfig b = parse_run_config(R"({"threads": 1, "seed": 1})");
    const RunConfig c = parse_run_config(R"({"seed": 2, "threads": 1})");
    CHECK(config_hash(a) == config_hash(b));  // key order is canonicalised
    CHECK(config_hash(a) != config_hash(c));
    CHECK(config_hash_hex(a).size() == 16);
}

TEST_CASE("csv: RFC-4180 quoting") {
    CHECK(CsvWriter::quote("plain") == "plain");
    CHECK(CsvWriter::quote("with,comma") == "\"with,comma\"");
    CHECK(CsvWriter::quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(CsvWriter::quote("line\nbreak") == "\"line\nbreak\"");
}

TEST_CASE("csv: field formatting is deterministic") {
    CHECK(CsvWriter::format(1.0) == "1");
    CHECK(CsvWriter::format(0.5) == "0.5");
    CHECK(CsvWriter::format(true) == "true");
    CHECK(CsvWriter::format(long(-3)) == "-3");
    CHECK(CsvWriter::format("a,b") == "\"a,b\"");
}

TEST_CASE("csv: writes comments, header, rows in order") {
    const std::string path = "/tmp/pclab_csv_test.csv";
    {
        CsvWriter csv(path);
        csv.comment("meta=1");
        csv.header({"x", "label"});
        csv.row({1.5, std::string("a,b")});
    }
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    CHECK(buffer.str() == "# meta=1\nx,label\n1.5,\"a,b\"\n");
    std::remove(path.c_str());
}

TEST_CASE("csv: rejects rows before the header") {
    const std::string path = "/tmp/pclab_csv_order.csv";
    CsvWriter csv(path);
    CHECK_THROWS_AS(csv.row({1.0}), ParseError);
    std::remove(path.c_str());
}
