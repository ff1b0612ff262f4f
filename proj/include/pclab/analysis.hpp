#pragma once

#include <optional>
#include <vector>

#include "pclab/engines.hpp"
#include "pclab/ledger.hpp"
#include "pclab/types.hpp"

namespace pclab {

// First inference step at which each error vector holds any bitwise non-zero
// entry. Slot l is valid for l = 1..L; the output slot reads 0 when the loss
// gradient is non-zero at assignment. nullopt means the error never left
// exact zero within the traced steps.
struct TraceReport {
    int depth = 0;
    std::vector<std::optional<int>> first_nonzero;
    bool zero_loss_warning = false;

    int expected_step(int layer) const { return depth - layer; }
};

// Runs VPC (identity precisions) or FPA dynamics for cfg.steps steps and
// records when each layer's error first becomes non-zero. Zero output loss
// leaves every entry at "never" and raises the warning flag, since the
// propagation bound assumes a non-zero loss gradient.
TraceReport trace_first_nonzero(Variant variant, const ChainSpec& spec,
                                const Parameters& params, const Vec& input,
                                const Vec& target, const InferenceConfig& cfg);

// Cost of one forward evaluation of layer l in multiply-add units:
// 2 * d_l * d_{l+1} for the affine map plus d_{l+1} activation ops.
std::vector<double> layer_cost_units(const ChainSpec& spec);

// Modeled times in units of w*C with w = 1. A gradient costs
// (constant - 1) forward-equivalents on top of the forward pass itself;
// the constant defaults to 3 and can be set to 5 for the conservative
// general-function value.
double modeled_time_backprop(const std::vector<double>& cost_units,
                             double cheap_gradient_constant = 3.0);
double modeled_time_variant(const std::vector<double>& cost_units, long t_c,
                            double cheap_gradient_constant = 3.0);

// Fills the modeled fields of a ledger for the given chain and variant.
// Iterative variants pay one forward pass plus t_c maximally-parallel
// inference steps, each as slow as the slowest layer VJP.
CostLedger cost_model(const ChainSpec& spec, Variant variant, long t_c,
                      double cheap_gradient_constant = 3.0);

// Cosine similarity between two gradient sets, per layer (weight block and
// bias flattened together) and over the full concatenation. Zero-norm sides
// are flagged rather than silently mapped to 0.
struct SimilarityReport {
    struct Layer {
        std::optional<double> cosine;
        bool a_zero = false;
        bool b_zero = false;
    };
    std::vector<Layer> layers;
    std::optional<double> global_cosine;
    bool a_zero_global = false;
    bool b_zero_global = false;
};

SimilarityReport compare_gradients(const GradientSet& a, const GradientSet& b);

// Wall-clock statistics for one engine configuration over a batch. One
// warm-up evaluation runs first and is excluded from the samples.
struct RuntimeStats {
    double median_s = 0.0;
    double iqr_s = 0.0;
    std::vector<double> samples_s;
    int threads = 1;
};

RuntimeStats measure_runtime(Variant variant, const ChainSpec& spec,
                             const Parameters& params, const Batch& batch,
                             const Precisions& prec, const InferenceConfig& cfg,
                             int repetitions, int threads = 1);

}  // namespace pclab
