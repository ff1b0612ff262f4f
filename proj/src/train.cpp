#include "pclab/train.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "pclab/analysis.hpp"
#include "pclab/errors.hpp"
#include "pclab/rng.hpp"

namespace pclab {

double dataset_accuracy(const ChainSpec& spec, const Parameters& params,
                        const Dataset& ds) {
    if (!ds.classification())
        throw ConfigError("accuracy is defined for classification datasets only");
    int hits = 0;
    for (int i = 0; i < ds.size(); ++i) {
        const Vec p = predict(spec, params, ds.inputs.row(i).transpose());
        int best = 0;
        p.maxCoeff(&best);
        if (best == ds.labels[static_cast<std::size_t>(i)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

double dataset_mean_loss(const ChainSpec& spec, const Parameters& params,
                         const Dataset& ds) {
    double total = 0.0;
    for (int i = 0; i < ds.size(); ++i) {
        const Vec p = predict(spec, params, ds.inputs.row(i).transpose());
        total += loss_value(spec.loss, p, ds.targets.row(i).transpose());
    }
    return total / static_cast<double>(ds.size());
}

TrainRunRecord train(const ChainSpec& spec, const Parameters& initial,
                     const Dataset& train_set, const Dataset& val_set,
                     const Dataset& test_set, Variant variant,
                     const Precisions& prec, const InferenceConfig& icfg,
                     const TrainOptions& options, Parameters* final_params) {
    if (options.epochs < 0 || options.batch_size < 1)
        throw ConfigError("train needs epochs >= 0 and batch_size >= 1");
    initial.validate_against(spec);

    TrainRunRecord record;
    record.variant = variant;
    record.gamma = icfg.gamma;
    record.steps = icfg.steps;
    record.alpha = options.alpha;
    record.batch_size = options.batch_size;
    record.seed = options.seed;
    record.epochs_requested = options.epochs;

    Parameters params = initial;
    Rng shuffle_rng(options.seed);

    Batch probe;
    if (options.probe_cosine) {
        std::vector<int> rows(static_cast<std::size_t>(
            std::min(options.probe_rows, train_set.size())));
        std::iota(rows.begin(), rows.end(), 0);
        probe = train_set.batch_rows(rows);
    }

    std::vector<int> order(static_cast<std::size_t>(train_set.size()));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        try {
            for (int begin = 0; begin < train_set.size(); begin += options.batch_size) {
                const int end = std::min<int>(begin + options.batch_size, train_set.size());
                const std::vector<int> rows(order.begin() + begin, order.begin() + end);
                const Batch batch = train_set.batch_rows(rows);
                const GradientSet grads = batch_gradient(
                    spec, params, batch, variant, prec, icfg, options.threads);
                params = sgd_step(params, grads, options.alpha);
            }
        } catch (const DivergenceError& err) {
            std::ostringstream os;
            os << "diverged: " << err.what() << " (epoch " << epoch << ")";
            record.status = os.str();
            break;
        } catch (const NumericOverflowError& err) {
            std::ostringstream os;
            os << "diverged: " << err.what() << " (epoch " << epoch << ")";
            record.status = os.str();
            break;
        }

        if (val_set.size() > 0) {
            record.val_loss.push_back(dataset_mean_loss(spec, params, val_set));
            if (val_set.classification())
                record.val_accuracy.push_back(dataset_accuracy(spec, params, val_set));
        }
        if (options.probe_cosine) {
            // Same frozen batch, same frozen parameters, engine vs backprop:
            // a per-update comparison, not a trajectory one.
            const GradientSet gv = batch_gradient(spec, params, probe, variant,
                                                  prec, icfg, options.threads);
            const GradientSet gb = batch_gradient(spec, params, probe,
                                                  Variant::Backprop, prec, icfg,
                                                  options.threads);
            const SimilarityReport sim = compare_gradients(gv, gb);
            record.probe_cosine.push_back(sim.global_cosine.value_or(0.0));
        }
        record.epochs_completed = epoch + 1;
    }

    if (record.status == "completed" && test_set.size() > 0) {
        record.test_loss = dataset_mean_loss(spec, params, test_set);
        if (test_set.classification())
            record.test_accuracy = dataset_accuracy(spec, params, test_set);
    }
    if (final_params) *final_params = std::move(params);
    return record;
}

}  // namespace pclab
