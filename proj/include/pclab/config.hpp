#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pclab/data.hpp"
#include "pclab/engines.hpp"
#include "pclab/types.hpp"

namespace pclab {

// Everything needed to reproduce a run. Parsed strictly from JSON: unknown
// keys are hard errors reported with their path, so config typos cannot be
// silently absorbed.
struct RunConfig {
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_path;

    ChainSpec net;
    bool has_net = false;

    struct Engine {
        Variant variant = Variant::FpaPc;
        double gamma = 1.0;
        int steps = 0;
        std::optional<double> rel_steps;  // steps = round(rel * depth) when set
        std::optional<double> stop_tol;
        double alpha = 0.01;
        double k = 1.0;  // output-variance scale for VPC
    } engine;
    bool has_engine = false;

    struct Sweep {
        std::vector<double> gammas;
        std::vector<double> rel_steps;
    } sweep;
    bool has_sweep = false;

    struct Data {
        std::string source = "synthetic";  // "synthetic" or "mnist"
        int n_train = 2048;
        int n_val = 256;
        int n_test = 512;
        int d_in = 16;
        int classes = 4;
        Task task = Task::Classification;
        std::uint64_t teacher_seed = 7;
    } data;
    bool has_data = false;

    struct Train {
        int epochs = 5;
        int batch_size = 32;
        bool probe_cosine = false;
    } train;
    bool has_train = false;

    struct Bench {
        int repetitions = 9;
        long t_c = -1;  // default: 4 * depth, resolved at run time
        double cheap_gradient_constant = 3.0;
        int random_cost_vectors = 1000;
        int batch_rows = 8;
        bool measure = true;
    } bench;
    bool has_bench = false;

    // Canonical (sorted-key) dump of the JSON this config was parsed from.
    std::string canonical_json;

    // Resolved inference step count for the configured engine on `spec`.
    int resolved_steps(const ChainSpec& spec) const;

    InferenceConfig inference_config(const ChainSpec& spec) const;
    Precisions precisions(const ChainSpec& spec) const;
};

// Parses and validates; `text` must be a JSON object.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// FNV-1a over the canonical JSON; embedded in every output file header.
std::uint64_t config_hash(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

}  // namespace pclab
