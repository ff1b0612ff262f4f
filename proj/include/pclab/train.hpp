#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pclab/data.hpp"
#include "pclab/engines.hpp"

namespace pclab {

struct TrainOptions {
    int epochs = 1;
    double alpha = 0.01;
    int batch_size = 32;
    std::uint64_t seed = 0;
    int threads = 1;
    bool probe_cosine = false;  // per-epoch gradient cosine to backprop
    int probe_rows = 32;        // frozen probe batch (first rows of train set)
};

// Append-only record of one training run. Echoes enough of the configuration
// to make a row self-describing in the CSV outputs.
struct TrainRunRecord {
    std::vector<double> val_accuracy;   // per epoch (classification only)
    std::vector<double> val_loss;       // per epoch mean loss
    std::vector<double> probe_cosine;   // per epoch when enabled
    double test_accuracy = -1.0;
    double test_loss = -1.0;
    std::string status = "completed";   // or "diverged: ..."
    int epochs_completed = 0;

    // config echo
    Variant variant = Variant::Backprop;
    double gamma = 0.0;
    int steps = 0;
    double alpha = 0.0;
    int batch_size = 0;
    std::uint64_t seed = 0;
    int epochs_requested = 0;
};

double dataset_accuracy(const ChainSpec& spec, const Parameters& params,
                        const Dataset& ds);
double dataset_mean_loss(const ChainSpec& spec, const Parameters& params,
                         const Dataset& ds);

// Epoch loop of seeded shuffled minibatches: engine gradient, SGD step,
// per-epoch validation metrics, final test metrics. Divergence aborts the run
// and preserves the partial record.
TrainRunRecord train(const ChainSpec& spec, const Parameters& initial,
                     const Dataset& train_set, const Dataset& val_set,
                     const Dataset& test_set, Variant variant,
                     const Precisions& prec, const InferenceConfig& icfg,
                     const TrainOptions& options, Parameters* final_params = nullptr);

}  // namespace pclab
