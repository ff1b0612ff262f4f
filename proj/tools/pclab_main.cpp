// pclab: chain-network gradient engines (backprop, VPC, FPA-PC, Z-IL) with
// propagation tracing, cost modeling, and training experiments. Subcommands
// emit CSV with the run configuration echoed in '#' header lines.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pclab/analysis.hpp"
#include "pclab/checks.hpp"
#include "pclab/config.hpp"
#include "pclab/csv.hpp"
#include "pclab/data.hpp"
#include "pclab/engines.hpp"
#include "pclab/errors.hpp"
#include "pclab/train.hpp"

namespace {

using namespace pclab;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitDivergence = 3;

struct CliOverrides {
    std::string config_path;
    std::string out_path;
    int threads = 0;           // 0 = keep config value
    std::uint64_t seed = 0;
    bool seed_set = false;
};

RunConfig resolve_config(const CliOverrides& cli, const char* fallback_json) {
    RunConfig cfg = cli.config_path.empty() ? parse_run_config(fallback_json)
                                            : load_run_config(cli.config_path);
    if (cli.seed_set) cfg.seed = cli.seed;
    if (cli.threads > 0) cfg.threads = cli.threads;
    if (!cli.out_path.empty()) cfg.out_path = cli.out_path;
    return cfg;
}

void write_meta(CsvWriter& csv, const RunConfig& cfg) {
    csv.comment("config_hash=" + config_hash_hex(cfg));
    csv.comment("seed=" + std::to_string(cfg.seed));
    csv.comment("threads=" + std::to_string(cfg.threads));
    csv.comment("config=" + cfg.canonical_json);
}

struct SplitData {
    Dataset train;
    Dataset val;
    Dataset test;
};

SplitData datasets_from_config(const RunConfig& cfg) {
    SplitData out;
    if (cfg.data.source == "mnist") {
        const char* env = std::getenv("PC_LAB_DATA_DIR");
        const std::string dir = env ? env : ".";
        Dataset full = load_idx(dir + "/train-images-idx3-ubyte",
                                dir + "/train-labels-idx1-ubyte", Split::Train);
        auto [train, val] = split_validation(full, 10000);
        out.train = std::move(train);
        out.val = std::move(val);
        out.test = load_idx(dir + "/t10k-images-idx3-ubyte",
                            dir + "/t10k-labels-idx1-ubyte", Split::Test);
        return out;
    }
    const auto& d = cfg.data;
    Dataset pool = synthetic_dataset(d.teacher_seed, cfg.seed, d.n_train + d.n_val,
                                     d.d_in, d.classes, d.task);
    auto [train, val] = split_validation(pool, d.n_val);
    out.train = std::move(train);
    out.val = std::move(val);
    out.test = synthetic_dataset(d.teacher_seed, cfg.seed + 1, d.n_test, d.d_in,
                                 d.classes, d.task);
    out.test.split = Split::Test;
    return out;
}

Batch probe_batch(const SplitData& data, int rows) {
    std::vector<int> idx;
    for (int i = 0; i < std::min(rows, data.train.size()); ++i) idx.push_back(i);
    return data.train.batch_rows(idx);
}

void require_blocks(const RunConfig& cfg, bool net, bool engine, bool sweep,
                    bool train_block, const char* command) {
    if (net && !cfg.has_net)
        throw ConfigError(std::string(command) + " needs a 'net' config block");
    if (engine && !cfg.has_engine)
        throw ConfigError(std::string(command) + " needs an 'engine' config block");
    if (sweep && !cfg.has_sweep)
        throw ConfigError(std::string(command) + " needs a 'sweep' config block");
    if (train_block && !cfg.has_train)
        throw ConfigError(std::string(command) + " needs a 'train' config block");
}

int cmd_compare(const RunConfig& cfg) {
    require_blocks(cfg, true, true, true, false, "compare");
    if (cfg.out_path.empty()) throw ConfigError("compare needs an output path (--out)");
    if (cfg.engine.variant == Variant::Backprop)
        throw ConfigError("compare contrasts an iterative variant against backprop; "
                          "pick vpc, fpa-pc, or z-il");

    const ChainSpec& spec = cfg.net;
    const Parameters params = init_parameters(spec, cfg.seed);
    const SplitData data = datasets_from_config(cfg);
    const Batch probe = probe_batch(data, cfg.train.batch_size);
    const Precisions prec = cfg.precisions(spec);
    const int L = spec.depth();

    InferenceConfig base = cfg.inference_config(spec);
    const GradientSet reference = batch_gradient(spec, params, probe,
                                                 Variant::Backprop, prec, base,
                                                 cfg.threads);

    CsvWriter csv(cfg.out_path);
    write_meta(csv, cfg);
    csv.header({"depth", "width", "variant", "gamma", "steps", "rel_steps", "layer",
                "cosine", "zero_block_flag", "global_cosine", "seed"});

    int max_width = 0;
    for (int d : spec.layer_dims) max_width = std::max(max_width, d);

    for (double gamma : cfg.sweep.gammas) {
        for (double rel : cfg.sweep.rel_steps) {
            InferenceConfig icfg = base;
            icfg.gamma = gamma;
            icfg.steps = static_cast<int>(std::lround(rel * L));
            if (icfg.variant == Variant::Zil) {
                icfg.gamma = 1.0;
                icfg.steps = L - 1;
            }
            const GradientSet grads = batch_gradient(spec, params, probe,
                                                     icfg.variant, prec, icfg,
                                                     cfg.threads);
            const SimilarityReport sim = compare_gradients(grads, reference);
            const double global = sim.global_cosine.value_or(0.0);
            for (int l = 0; l < L; ++l) {
                const auto& layer = sim.layers[static_cast<std::size_t>(l)];
                csv.row({L, max_width, std::string(to_string(icfg.variant)), gamma,
                         long(icfg.steps), rel, l, layer.cosine.value_or(0.0),
                         layer.a_zero, global, long(cfg.seed)});
            }
        }
    }
    return kExitOk;
}

int cmd_trace(const RunConfig& cfg) {
    require_blocks(cfg, true, true, false, false, "trace");
    if (cfg.out_path.empty()) throw ConfigError("trace needs an output path (--out)");

    const ChainSpec& spec = cfg.net;
    const Parameters params = init_parameters(spec, cfg.seed);
    const SplitData data = datasets_from_config(cfg);
    const Vec input = data.train.inputs.row(0).transpose();
    const Vec target = data.train.targets.row(0).transpose();
    const int L = spec.depth();

    CsvWriter csv(cfg.out_path);
    write_meta(csv, cfg);
    csv.header({"variant", "layer", "first_nonzero_step", "expected", "match_flag",
                "zero_loss_warning"});

    for (Variant variant : {Variant::Vpc, Variant::FpaPc}) {
        InferenceConfig icfg = cfg.inference_config(spec);
        icfg.variant = variant;
        if (icfg.steps < L + 1) icfg.steps = L + 1;
        const TraceReport report =
            trace_first_nonzero(variant, spec, params, input, target, icfg);
        for (int l = 1; l <= L; ++l) {
            const int expected = l == L ? 0 : report.expected_step(l);
            const bool have = report.first_nonzero[l].has_value();
            csv.row({std::string(to_string(variant)), l,
                     have ? std::to_string(*report.first_nonzero[l]) : std::string("never"),
                     expected, have && *report.first_nonzero[l] == expected,
                     report.zero_loss_warning});
        }
    }
    return kExitOk;
}

int cmd_bench(const RunConfig& cfg) {
    require_blocks(cfg, true, false, false, false, "bench");
    if (cfg.out_path.empty()) throw ConfigError("bench needs an output path (--out)");

    const ChainSpec& spec = cfg.net;
    const Parameters params = init_parameters(spec, cfg.seed);
    const int L = spec.depth();
    const long t_c = cfg.bench.t_c >= 0 ? cfg.bench.t_c : 4L * L;

    Dataset rows = synthetic_dataset(cfg.data.teacher_seed, cfg.seed,
                                     cfg.bench.batch_rows, spec.input_dim(),
                                     spec.output_dim(),
                                     spec.loss == LossKind::SoftmaxCrossEntropy
                                         ? Task::Classification
                                         : Task::Regression);
    const Batch batch = rows.whole();
    const Precisions prec = Precisions::identity(spec);

    CsvWriter csv(cfg.out_path);
    write_meta(csv, cfg);
    csv.comment("t_c=" + std::to_string(t_c));
    csv.header({"variant", "modeled_time", "measured_median_s", "measured_iqr_s",
                "bound_satisfied"});

    const Variant variant =
        cfg.has_engine && cfg.engine.variant != Variant::Backprop ? cfg.engine.variant
                                                                  : Variant::FpaPc;
    for (Variant v : {Variant::Backprop, variant}) {
        const CostLedger model = cost_model(spec, v, t_c, cfg.bench.cheap_gradient_constant);
        double median = 0.0, iqr = 0.0;
        if (cfg.bench.measure) {
            InferenceConfig icfg;
            icfg.variant = v;
            icfg.gamma = v == Variant::Zil ? 1.0 : 0.5;
            icfg.steps = v == Variant::Zil ? L - 1 : static_cast<int>(t_c);
            const RuntimeStats stats =
                measure_runtime(v, spec, params, batch, prec, icfg,
                                cfg.bench.repetitions, cfg.threads);
            median = stats.median_s;
            iqr = stats.iqr_s;
        }
        csv.row({std::string(to_string(v)), model.modeled_time_variant, median, iqr,
                 model.bound_satisfied});
    }
    return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
    require_blocks(cfg, true, true, false, true, "train");
    if (cfg.out_path.empty()) throw ConfigError("train needs an output path (--out)");

    const ChainSpec& spec = cfg.net;
    const Parameters initial = init_parameters(spec, cfg.seed);
    const SplitData data = datasets_from_config(cfg);
    const Precisions prec = cfg.precisions(spec);
    const InferenceConfig icfg = cfg.inference_config(spec);

    TrainOptions options;
    options.epochs = cfg.train.epochs;
    options.alpha = cfg.engine.alpha;
    options.batch_size = cfg.train.batch_size;
    options.seed = cfg.seed;
    options.threads = cfg.threads;
    options.probe_cosine = cfg.train.probe_cosine;

    const TrainRunRecord record = train(spec, initial, data.train, data.val,
                                        data.test, cfg.engine.variant, prec, icfg,
                                        options);

    const double rel = cfg.engine.rel_steps
                           ? *cfg.engine.rel_steps
                           : static_cast<double>(icfg.steps) / spec.depth();

    CsvWriter csv(cfg.out_path);
    write_meta(csv, cfg);
    csv.header({"epoch", "variant", "rel_steps", "gamma", "val_acc", "val_loss",
                "probe_cosine", "test_acc", "status"});
    for (int e = 0; e < record.epochs_completed; ++e) {
        csv.row({e, std::string(to_string(record.variant)), rel, record.gamma,
                 e < static_cast<int>(record.val_accuracy.size())
                     ? std::to_string(record.val_accuracy[static_cast<std::size_t>(e)])
                     : std::string(""),
                 e < static_cast<int>(record.val_loss.size())
                     ? record.val_loss[static_cast<std::size_t>(e)]
                     : 0.0,
                 e < static_cast<int>(record.probe_cosine.size())
                     ? std::to_string(record.probe_cosine[static_cast<std::size_t>(e)])
                     : std::string(""),
                 std::string(""), std::string("")});
    }
    csv.row({long(record.epochs_completed), std::string(to_string(record.variant)),
             rel, record.gamma, std::string(""), record.test_loss, std::string(""),
             record.test_accuracy >= 0.0 ? std::to_string(record.test_accuracy)
                                         : std::string(""),
             record.status});

    if (record.status != "completed") {
        std::cerr << "train: " << record.status << "\n";
        return kExitDivergence;
    }
    return kExitOk;
}

int cmd_check(const RunConfig& cfg, bool inject_fault) {
    const std::vector<CheckResult> results = run_check_suite(cfg.seed, inject_fault);
    for (const auto& r : results) {
        std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << " (" << r.tolerance
                  << "): " << r.detail << "\n";
    }
    const bool ok = all_passed(results);
    std::cout << (ok ? "all checks passed" : "CHECK FAILURES PRESENT") << "\n";
    return ok ? kExitOk : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"predictive-coding vs backpropagation laboratory"};
    app.require_subcommand(1);

    CliOverrides cli;
    app.add_option("--config", cli.config_path, "JSON run configuration");
    app.add_option("--out", cli.out_path, "output CSV path (overrides config)");
    app.add_option("--threads", cli.threads, "worker threads (overrides config)");
    auto* seed_opt = app.add_option("--seed", cli.seed, "seed (overrides config)");

    auto* compare = app.add_subcommand("compare", "gradient cosine vs backprop over a sweep");
    auto* trace = app.add_subcommand("trace", "first non-zero error step per layer");
    auto* bench = app.add_subcommand("bench", "modeled and measured time comparison");
    auto* train_cmd = app.add_subcommand("train", "training run with per-epoch metrics");
    auto* check = app.add_subcommand("check", "run the invariant suite");
    for (auto* sub : {compare, trace, bench, train_cmd, check}) sub->fallthrough();
    bool inject_fault = false;
    check->add_flag("--inject-vjp-fault", inject_fault,
                    "testing only: flip VJP signs to prove the checks bite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }
    cli.seed_set = seed_opt->count() > 0;

    try {
        static const char* kCheckDefaults = "{\"seed\": 1}";
        const RunConfig cfg = resolve_config(cli, kCheckDefaults);
        if (compare->parsed()) return cmd_compare(cfg);
        if (trace->parsed()) return cmd_trace(cfg);
        if (bench->parsed()) return cmd_bench(cfg);
        if (train_cmd->parsed()) return cmd_train(cfg);
        if (check->parsed()) return cmd_check(cfg, inject_fault);
        throw ConfigError("no subcommand selected");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const DimensionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const DivergenceError& e) {
        std::cerr << "numeric divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const NumericOverflowError& e) {
        std::cerr << "numeric divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailure;
    }
}
