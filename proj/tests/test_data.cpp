#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "pclab/data.hpp"
#include "pclab/errors.hpp"
#include "pclab/fd_oracle.hpp"
#include "pclab/train.hpp"
#include "test_support.hpp"

using namespace pclab;
using namespace pclab::test;

namespace {

const std::string kFixtures = std::string(PCLAB_TEST_DIR) + "/fixtures";
const std::string kGolden = std::string(PCLAB_TEST_DIR) + "/golden";

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/pclab_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_idx: the two-image fixture round-trips exact pixel values") {
    const Dataset ds = load_idx(kFixtures + "/t2-images-idx3-ubyte",
                                kFixtures + "/t2-labels-idx1-ubyte");
    REQUIRE(ds.size() == 2);
    REQUIRE(ds.inputs.cols() == 4);
    const double expected0[] = {0.0, 64.0 / 255.0, 128.0 / 255.0, 1.0};
    const double expected1[] = {10.0 / 255.0, 20.0 / 255.0, 30.0 / 255.0, 40.0 / 255.0};
    for (int p = 0; p < 4; ++p) {
        CHECK(ds.inputs(0, p) == expected0[p]);
        CHECK(ds.inputs(1, p) == expected1[p]);
    }
    CHECK(ds.labels[0] == 3);
    CHECK(ds.labels[1] == 7);
    CHECK(ds.targets(0, 3) == 1.0);
    CHECK(ds.targets(1, 7) == 1.0);
    CHECK(ds.targets.row(0).sum() == 1.0);
}

TEST_CASE("load_idx: label out of range is a parse error") {
    CHECK_THROWS_WITH_AS(load_idx(kFixtures + "/t2-images-idx3-ubyte",
                                  kFixtures + "/badlabel-labels-idx1-ubyte"),
                         doctest::Contains("out of range"), ParseError);
}

TEST_CASE("load_idx: bad magic, truncation, and count mismatch are reported") {
    CHECK_THROWS_WITH_AS(load_idx(kFixtures + "/badmagic-images-idx3-ubyte",
                                  kFixtures + "/t2-labels-idx1-ubyte"),
                         doctest::Contains("bad magic"), ParseError);
    CHECK_THROWS_WITH_AS(load_idx(kFixtures + "/trunc-images-idx3-ubyte",
                                  kFixtures + "/t2-labels-idx1-ubyte"),
                         doctest::Contains("truncated"), ParseError);
    CHECK_THROWS_WITH_AS(load_idx(kFixtures + "/t2-images-idx3-ubyte",
                                  kFixtures + "/short-labels-idx1-ubyte"),
                         doctest::Contains("does not match"), ParseError);
    CHECK_THROWS_AS(load_idx(kFixtures + "/no-such-file",
                             kFixtures + "/t2-labels-idx1-ubyte"),
                    ParseError);
}

TEST_CASE("idx round-trip: byte-quantised data survives write-then-read") {
    Rng rng(31);
    const int n = 5, rows = 3, cols = 4;
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(n * rows * cols));
    for (auto& p : pixels) p = static_cast<std::uint8_t>(rng.below(256));
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng.below(10));

    TempFile img("rt-images"), lab("rt-labels");
    write_idx_images(img.path, pixels, n, rows, cols);
    write_idx_labels(lab.path, labels);
    const Dataset ds = load_idx(img.path, lab.path);

    REQUIRE(ds.size() == n);
    for (int i = 0; i < n; ++i) {
        CHECK(ds.labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i)]);
        for (int p = 0; p < rows * cols; ++p) {
            const auto byte = static_cast<std::uint8_t>(
                std::lround(ds.inputs(i, p) * 255.0));
            CHECK(byte == pixels[static_cast<std::size_t>(i * rows * cols + p)]);
        }
    }
}

TEST_CASE("synthetic_dataset: deterministic given its seeds") {
    const Dataset a = synthetic_dataset(5, 9, 32, 6, 3, Task::Classification);
    const Dataset b = synthetic_dataset(5, 9, 32, 6, 3, Task::Classification);
    CHECK((a.inputs - b.inputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.targets - b.targets).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.labels == b.labels);

    const Dataset c = synthetic_dataset(5, 10, 32, 6, 3, Task::Classification);
    CHECK((a.inputs - c.inputs).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("synthetic_dataset: n=4 regression fixture matches the frozen values") {
    const Dataset ds = synthetic_dataset(5, 9, 4, 3, 2, Task::Regression);
    std::ifstream golden(kGolden + "/synthetic_n4.txt");
    REQUIRE(golden.good());
    for (int i = 0; i < ds.size(); ++i) {
        for (int j = 0; j < ds.inputs.cols(); ++j) {
            double v = 0.0;
            golden >> v;
            CHECK(ds.inputs(i, j) == doctest::Approx(v).epsilon(1e-12));
        }
        for (int j = 0; j < ds.targets.cols(); ++j) {
            double v = 0.0;
            golden >> v;
            CHECK(ds.targets(i, j) == doctest::Approx(v).epsilon(1e-12));
        }
    }
}

TEST_CASE("synthetic_from_teacher: zero-weight teacher emits its bias") {
    ChainSpec teacher;
    teacher.layer_dims = {3, 2, 1};
    teacher.activations = {Activation::Tanh, Activation::Identity};
    teacher.has_bias = true;
    Parameters tp;
    tp.weights.push_back(Mat::Zero(2, 3));
    tp.weights.push_back(Mat::Zero(1, 2));
    tp.biases.push_back(Vec::Zero(2));
    tp.biases.push_back(Vec::Constant(1, 0.37));
    const Dataset ds = synthetic_from_teacher(teacher, tp, 11, 6, Task::Regression);
    for (int i = 0; i < ds.size(); ++i) CHECK(ds.targets(i, 0) == 0.37);
}

TEST_CASE("split_validation: keeps rows aligned and disjoint") {
    const Dataset full = synthetic_dataset(6, 12, 20, 4, 3, Task::Classification);
    const auto [train, val] = split_validation(full, 5);
    CHECK(train.size() == 15);
    CHECK(val.size() == 5);
    CHECK((val.inputs.row(0) - full.inputs.row(15)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(val.labels[0] == full.labels[15]);
    CHECK_THROWS_AS(split_validation(full, 20), ParseError);
}

TEST_CASE("finite_difference_grad: closed-form scalar chain") {
    // E = 0.5 (a b x - t)^2: dE/da = (a b x - t) b x, dE/db = (a b x - t) a x.
    ChainSpec spec;
    spec.layer_dims = {1, 1, 1};
    spec.activations = {Activation::Identity, Activation::Identity};
    spec.has_bias = false;
    const double a = 1.3, b = -0.7, x = 0.9, t = 0.4;
    Parameters params;
    params.weights.push_back(Mat::Constant(1, 1, a));
    params.weights.push_back(Mat::Constant(1, 1, b));

    const GradientSet g = finite_difference_grad(spec, params, Vec::Constant(1, x),
                                                 Vec::Constant(1, t), 1e-6);
    const double r = a * b * x - t;
    CHECK(rel_err(g.weights[0](0, 0), r * b * x) < 1e-8);
    CHECK(rel_err(g.weights[1](0, 0), r * a * x) < 1e-8);
}

TEST_CASE("finite_difference_grad: step-size sweep plateaus") {
    Rng rng(77);
    InstanceOptions options;
    options.min_depth = 3;
    options.max_depth = 3;
    options.max_width = 5;
    options.tanh_only = true;
    options.biases = true;
    const ChainInstance inst = make_random_instance(rng, options);
    const GradientSet g4 =
        finite_difference_grad(inst.spec, inst.params, inst.input, inst.target, 1e-4);
    const GradientSet g5 =
        finite_difference_grad(inst.spec, inst.params, inst.input, inst.target, 1e-5);
    const GradientSet g6 =
        finite_difference_grad(inst.spec, inst.params, inst.input, inst.target, 1e-6);
    CHECK(max_rel_err(g4, g5) < 1e-6);
    CHECK(max_rel_err(g5, g6) < 1e-6);
}

TEST_CASE("train: reproducible bit-for-bit for a fixed seed") {
    const Dataset pool = synthetic_dataset(7, 40, 128, 8, 3, Task::Classification);
    const auto [train_set, val_set] = split_validation(pool, 32);
    const Dataset test_set = synthetic_dataset(7, 41, 48, 8, 3, Task::Classification);

    ChainSpec spec;
    spec.layer_dims = {8, 12, 12, 3};
    spec.activations = {Activation::Tanh, Activation::Tanh, Activation::Identity};
    spec.loss = LossKind::SoftmaxCrossEntropy;
    spec.has_bias = true;
    const Parameters initial = init_parameters(spec, 99);

    InferenceConfig icfg;
    icfg.variant = Variant::Backprop;
    TrainOptions options;
    options.epochs = 3;
    options.alpha = 0.1;
    options.batch_size = 16;
    options.seed = 5;

    const TrainRunRecord r1 = train(spec, initial, train_set, val_set, test_set,
                                    Variant::Backprop, Precisions::identity(spec),
                                    icfg, options);
    const TrainRunRecord r2 = train(spec, initial, train_set, val_set, test_set,
                                    Variant::Backprop, Precisions::identity(spec),
                                    icfg, options);
    CHECK(r1.val_accuracy == r2.val_accuracy);
    CHECK(r1.val_loss == r2.val_loss);
    CHECK(r1.test_accuracy == r2.test_accuracy);
    CHECK(r1.test_loss == r2.test_loss);
    CHECK(r1.status == "completed");
}

TEST_CASE("train: loss decreases on a learnable regression task") {
    const Dataset pool = synthetic_dataset(8, 21, 160, 6, 2, Task::Regression);
    const auto [train_set, val_set] = split_validation(pool, 32);
    const Dataset test_set = synthetic_dataset(8, 22, 48, 6, 2, Task::Regression);

    ChainSpec spec;
    spec.layer_dims = {6, 16, 2};
    spec.activations = {Activation::Tanh, Activation::Identity};
    spec.loss = LossKind::SquaredEuclidean;
    spec.has_bias = true;
    const Parameters initial = init_parameters(spec, 3);

    InferenceConfig icfg;
    icfg.variant = Variant::Backprop;
    TrainOptions options;
    options.epochs = 8;
    options.alpha = 0.05;
    options.batch_size = 16;
    options.seed = 2;

    const TrainRunRecord record = train(spec, initial, train_set, val_set, test_set,
                                        Variant::Backprop, Precisions::identity(spec),
                                        icfg, options);
    REQUIRE(record.val_loss.size() == 8);
    CHECK(record.val_loss.back() < 0.5 * record.val_loss.front());
}

TEST_CASE("train: z-il trajectory shadows backprop at matching seeds") {
    const Dataset pool = synthetic_dataset(9, 31, 96, 6, 3, Task::Classification);
    const auto [train_set, val_set] = split_validation(pool, 24);
    const Dataset test_set = synthetic_dataset(9, 32, 32, 6, 3, Task::Classification);

    ChainSpec spec;
    spec.layer_dims = {6, 10, 10, 3};
    spec.activations = {Activation::Tanh, Activation::Tanh, Activation::Identity};
    spec.loss = LossKind::SquaredEuclidean;
    spec.has_bias = true;
    const Parameters initial = init_parameters(spec, 4);

    TrainOptions options;
    options.epochs = 3;
    options.alpha = 0.1;
    options.batch_size = 12;
    options.seed = 8;

    InferenceConfig bp_cfg;
    bp_cfg.variant = Variant::Backprop;
    Parameters bp_final;
    const TrainRunRecord bp = train(spec, initial, train_set, val_set, test_set,
                                    Variant::Backprop, Precisions::identity(spec),
                                    bp_cfg, options, &bp_final);

    InferenceConfig zil_cfg;
    zil_cfg.variant = Variant::Zil;
    zil_cfg.gamma = 1.0;
    zil_cfg.steps = spec.depth() - 1;
    Parameters zil_final;
    const TrainRunRecord zil = train(spec, initial, train_set, val_set, test_set,
                                     Variant::Zil, Precisions::identity(spec),
                                     zil_cfg, options, &zil_final);

    // Per-update agreement is ~1e-16, so whole-run trajectories track to well
    // below any decision threshold and the metric curves coincide.
    CHECK(bp.val_accuracy == zil.val_accuracy);
    CHECK(bp.test_accuracy == zil.test_accuracy);
    double worst = 0.0;
    for (std::size_t l = 0; l < bp_final.weights.size(); ++l)
        worst = std::max(worst,
                         (bp_final.weights[l] - zil_final.weights[l]).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-9);
}

TEST_CASE("train: divergence preserves a partial record") {
    const Dataset pool = synthetic_dataset(10, 33, 64, 4, 2, Task::Regression);
    const auto [train_set, val_set] = split_validation(pool, 16);

    ChainSpec spec;
    spec.layer_dims = {4, 8, 2};
    spec.activations = {Activation::Identity, Activation::Identity};
    spec.loss = LossKind::SquaredEuclidean;
    spec.has_bias = false;
    const Parameters initial = init_parameters(spec, 12);

    InferenceConfig icfg;
    icfg.variant = Variant::Backprop;
    TrainOptions options;
    options.epochs = 50;
    options.alpha = 1e6;  // guaranteed blow-up
    options.batch_size = 16;
    options.seed = 1;

    const TrainRunRecord record = train(spec, initial, train_set, val_set, val_set,
                                        Variant::Backprop, Precisions::identity(spec),
                                        icfg, options);
    CHECK(record.status != "completed");
    CHECK(record.epochs_completed < 50);
    CHECK(record.test_accuracy == -1.0);
}
