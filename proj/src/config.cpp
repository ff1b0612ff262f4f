#include "pclab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pclab/errors.hpp"

namespace pclab {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError(path.empty() ? message : path + ": " + message);
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
    }
}

template <class T>
T require(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) fail(path, std::string("missing required key '") + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(path + "." + key, e.what());
    }
}

template <class T>
T get_or(const json& obj, const std::string& path, const char* key, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(path + "." + key, e.what());
    }
}

ChainSpec parse_net(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path, {"layer_dims", "activations", "loss", "biases"});
    ChainSpec spec;
    spec.layer_dims = require<std::vector<int>>(obj, path, "layer_dims");
    const auto names = require<std::vector<std::string>>(obj, path, "activations");
    for (const auto& name : names) {
        try {
            spec.activations.push_back(activation_from_string(name));
        } catch (const std::exception& e) {
            fail(path + ".activations", e.what());
        }
    }
    const std::string loss = get_or<std::string>(obj, path, "loss", "squared-euclidean");
    try {
        spec.loss = loss_from_string(loss);
    } catch (const std::exception& e) {
        fail(path + ".loss", e.what());
    }
    spec.has_bias = get_or<bool>(obj, path, "biases", true);
    try {
        spec.validate();
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
    return spec;
}

RunConfig::Engine parse_engine(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path,
                        {"variant", "gamma", "steps", "rel_steps", "stop_tol",
                         "alpha", "k"});
    RunConfig::Engine engine;
    const std::string variant = get_or<std::string>(obj, path, "variant", "fpa-pc");
    try {
        engine.variant = variant_from_string(variant);
    } catch (const std::exception& e) {
        fail(path + ".variant", e.what());
    }
    engine.gamma = get_or<double>(obj, path, "gamma", 1.0);
    engine.steps = get_or<int>(obj, path, "steps", 0);
    if (obj.contains("rel_steps") && !obj.at("rel_steps").is_null())
        engine.rel_steps = require<double>(obj, path, "rel_steps");
    if (obj.contains("stop_tol") && !obj.at("stop_tol").is_null())
        engine.stop_tol = require<double>(obj, path, "stop_tol");
    engine.alpha = get_or<double>(obj, path, "alpha", 0.01);
    engine.k = get_or<double>(obj, path, "k", 1.0);
    if (!(engine.gamma > 0.0)) fail(path + ".gamma", "must be > 0");
    if (engine.steps < 0) fail(path + ".steps", "must be >= 0");
    if (engine.rel_steps && !(*engine.rel_steps >= 0.0))
        fail(path + ".rel_steps", "must be >= 0");
    if (!(engine.alpha > 0.0)) fail(path + ".alpha", "must be > 0");
    if (!(engine.k > 0.0)) fail(path + ".k", "must be > 0");
    return engine;
}

RunConfig::Sweep parse_sweep(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path, {"gammas", "rel_steps"});
    RunConfig::Sweep sweep;
    sweep.gammas = get_or<std::vector<double>>(obj, path, "gammas", {1.0});
    sweep.rel_steps = get_or<std::vector<double>>(obj, path, "rel_steps",
                                                  {0.25, 0.5, 0.75, 1.0, 1.5, 2.0});
    if (sweep.gammas.empty()) fail(path + ".gammas", "must not be empty");
    if (sweep.rel_steps.empty()) fail(path + ".rel_steps", "must not be empty");
    for (double g : sweep.gammas)
        if (!(g > 0.0)) fail(path + ".gammas", "entries must be > 0");
    for (double r : sweep.rel_steps)
        if (!(r >= 0.0)) fail(path + ".rel_steps", "entries must be >= 0");
    return sweep;
}

RunConfig::Data parse_data(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path,
                        {"source", "n_train", "n_val", "n_test", "d_in", "classes",
                         "task", "teacher_seed"});
    RunConfig::Data data;
    data.source = get_or<std::string>(obj, path, "source", "synthetic");
    if (data.source != "synthetic" && data.source != "mnist")
        fail(path + ".source", "must be 'synthetic' or 'mnist'");
    data.n_train = get_or<int>(obj, path, "n_train", data.n_train);
    data.n_val = get_or<int>(obj, path, "n_val", data.n_val);
    data.n_test = get_or<int>(obj, path, "n_test", data.n_test);
    data.d_in = get_or<int>(obj, path, "d_in", data.d_in);
    data.classes = get_or<int>(obj, path, "classes", data.classes);
    const std::string task = get_or<std::string>(obj, path, "task", "classification");
    if (task == "classification") data.task = Task::Classification;
    else if (task == "regression") data.task = Task::Regression;
    else fail(path + ".task", "must be 'classification' or 'regression'");
    data.teacher_seed = get_or<std::uint64_t>(obj, path, "teacher_seed", data.teacher_seed);
    if (data.n_train < 1 || data.n_val < 0 || data.n_test < 0)
        fail(path, "sample counts must be positive");
    return data;
}

RunConfig::Train parse_train(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path, {"epochs", "batch_size", "probe_cosine"});
    RunConfig::Train train;
    train.epochs = get_or<int>(obj, path, "epochs", train.epochs);
    train.batch_size = get_or<int>(obj, path, "batch_size", train.batch_size);
    train.probe_cosine = get_or<bool>(obj, path, "probe_cosine", false);
    if (train.epochs < 0) fail(path + ".epochs", "must be >= 0");
    if (train.batch_size < 1) fail(path + ".batch_size", "must be >= 1");
    return train;
}

RunConfig::Bench parse_bench(const json& obj, const std::string& path) {
    reject_unknown_keys(obj, path,
                        {"repetitions", "t_c", "cheap_gradient_constant",
                         "random_cost_vectors", "batch_rows", "measure"});
    RunConfig::Bench bench;
    bench.repetitions = get_or<int>(obj, path, "repetitions", bench.repetitions);
    bench.t_c = get_or<long>(obj, path, "t_c", bench.t_c);
    bench.cheap_gradient_constant =
        get_or<double>(obj, path, "cheap_gradient_constant", 3.0);
    bench.random_cost_vectors =
        get_or<int>(obj, path, "random_cost_vectors", bench.random_cost_vectors);
    bench.batch_rows = get_or<int>(obj, path, "batch_rows", bench.batch_rows);
    bench.measure = get_or<bool>(obj, path, "measure", true);
    if (bench.repetitions < 3) fail(path + ".repetitions", "must be >= 3");
    if (bench.cheap_gradient_constant < 1.0)
        fail(path + ".cheap_gradient_constant", "must be >= 1");
    if (bench.batch_rows < 1) fail(path + ".batch_rows", "must be >= 1");
    return bench;
}

}  // namespace

int RunConfig::resolved_steps(const ChainSpec& spec) const {
    if (engine.rel_steps)
        return static_cast<int>(std::lround(*engine.rel_steps * spec.depth()));
    return engine.steps;
}

InferenceConfig RunConfig::inference_config(const ChainSpec& spec) const {
    InferenceConfig cfg;
    cfg.variant = engine.variant;
    cfg.gamma = engine.gamma;
    cfg.steps = resolved_steps(spec);
    cfg.stop_tol = engine.stop_tol;
    cfg.alpha = engine.alpha;
    if (cfg.variant == Variant::Zil) {
        cfg.gamma = 1.0;
        cfg.steps = spec.depth() - 1;
    }
    return cfg;
}

Precisions RunConfig::precisions(const ChainSpec& spec) const {
    Precisions prec = Precisions::identity(spec);
    prec.output_scale = engine.k;
    return prec;
}

RunConfig parse_run_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");

    reject_unknown_keys(root, "",
                        {"seed", "threads", "out", "net", "engine", "sweep", "data",
                         "train", "bench"});

    RunConfig cfg;
    cfg.seed = get_or<std::uint64_t>(root, "", "seed", 1);
    cfg.threads = get_or<int>(root, "", "threads", 1);
    if (cfg.threads < 1) fail("threads", "must be >= 1");
    cfg.out_path = get_or<std::string>(root, "", "out", "");

    if (root.contains("net")) {
        cfg.net = parse_net(root.at("net"), "net");
        cfg.has_net = true;
    }
    if (root.contains("engine")) {
        cfg.engine = parse_engine(root.at("engine"), "engine");
        cfg.has_engine = true;
    }
    if (root.contains("sweep")) {
        cfg.sweep = parse_sweep(root.at("sweep"), "sweep");
        cfg.has_sweep = true;
    }
    if (root.contains("data")) {
        cfg.data = parse_data(root.at("data"), "data");
        cfg.has_data = true;
    }
    if (root.contains("train")) {
        cfg.train = parse_train(root.at("train"), "train");
        cfg.has_train = true;
    }
    if (root.contains("bench")) {
        cfg.bench = parse_bench(root.at("bench"), "bench");
        cfg.has_bench = true;
    }

    cfg.canonical_json = root.dump();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

std::uint64_t config_hash(const RunConfig& cfg) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : cfg.canonical_json) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash_hex(const RunConfig& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    return buf;
}

}  // namespace pclab
