#pragma once

#include <vector>

namespace pclab {

// Work/time accounting shared by the engines (counters) and the cost model
// (modeled fields). Engines take an optional ledger pointer and bump the
// counters; cost_model() fills in the modeled columns.
//
// "vjp" counters cover layer-level reverse evaluations only: input-cotangent
// VJPs plus output-cotangent (loss gradient) evaluations. The final
// per-parameter VJPs are tracked separately since they cost the same for
// every engine and happen exactly once.
struct CostLedger {
    std::vector<long> forward_evals;    // per layer, f_l applications
    std::vector<long> vjp_evals;        // per layer, input-cotangent VJPs
    long loss_evals = 0;                // scalar loss evaluations
    long output_cotangent_evals = 0;    // loss-gradient evaluations
    long param_vjp_evals = 0;           // parameter-cotangent VJPs
    long inference_steps = 0;
    bool early_stopped = false;

    // Modeled work/time, filled by cost_model().
    std::vector<double> cost_units;     // C_l per layer
    double cost_max = 0.0;              // C_max
    double modeled_time_backprop = 0.0;
    double modeled_time_variant = 0.0;
    bool bound_satisfied = false;

    void ensure_layers(int layers) {
        if (static_cast<int>(forward_evals.size()) < layers) forward_evals.resize(layers, 0);
        if (static_cast<int>(vjp_evals.size()) < layers) vjp_evals.resize(layers, 0);
    }

    long total_forward_evals() const {
        long n = 0;
        for (long c : forward_evals) n += c;
        return n;
    }

    // Layer-level reverse evaluations, the quantity the time model charges per
    // inference step.
    long total_vjp_evals() const {
        long n = output_cotangent_evals;
        for (long c : vjp_evals) n += c;
        return n;
    }
};

}  // namespace pclab
