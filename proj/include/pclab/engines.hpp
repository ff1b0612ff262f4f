#pragma once

#include <functional>
#include <optional>

#include "pclab/chain.hpp"
#include "pclab/ledger.hpp"
#include "pclab/types.hpp"

namespace pclab {

enum class Variant { Backprop, Vpc, FpaPc, Zil };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

// Diagonal precisions for the latent layers plus the output-variance scale k
// (Sigma_L = k * I). Slot l of inv_sigma is valid for l = 1..L-1; slot 0 is
// unused so indices line up with the latent layer numbering.
struct Precisions {
    std::vector<Vec> inv_sigma;
    double output_scale = 1.0;

    static Precisions identity(const ChainSpec& spec);
    void validate_against(const ChainSpec& spec) const;
};

// Inference-time state. x[0] is the (fixed) input; x[1..L-1] are the latent
// layers. e[1..L] are the prediction errors, e[L] being the output error
// under whichever convention the engine defines (VPC re-evaluates it at the
// current prediction, FPA freezes it at mu_L). e[0] is unused.
struct LatentState {
    std::vector<Vec> x;
    std::vector<Vec> e;
    int t = 0;
};

struct InferenceConfig {
    Variant variant = Variant::Vpc;
    double gamma = 0.1;              // inference step size
    int steps = 0;                   // T
    std::optional<double> stop_tol;  // early stop when max|dx| drops below
    double alpha = 0.01;             // SGD learning rate (training loop)
    bool zil_skip_wasted = false;    // skip updates above the scheduled layer

    void validate() const;
};

struct InferenceResult {
    LatentState state;
    GradientSet grads;
};

// Invoked with the settled state at t = 0 and again after every inference
// step, errors included. Used by the Theorem-1 tracer and by diagnostics;
// engines run identically with or without one.
using StepObserver = std::function<void(const LatentState&)>;

// Reverse accumulation: e_L = loss gradient at mu_L, e_l = VJP(mu_l, e_{l+1}),
// gradient block l = param VJP(mu_l, e_{l+1}). One layer-level reverse
// evaluation per layer. Optionally exposes the error vectors (errors_out[l]
// for l = 1..L).
GradientSet backprop(const ChainSpec& spec, const Parameters& params,
                     const ForwardTrace& trace, CostLedger* ledger = nullptr,
                     std::vector<Vec>* errors_out = nullptr);

// Standard (variational) PC inference: T synchronous gradient-flow steps on
// the latent layers starting from the feed-forward values, then parameter
// gradients evaluated at the settled latents. The output error is
// re-evaluated at f_{L-1}(x_{L-1,t}) every step and carries the 1/k scale.
InferenceResult vpc_inference(const ChainSpec& spec, const Parameters& params,
                              const Vec& input, const Vec& target,
                              const Precisions& prec, const InferenceConfig& cfg,
                              CostLedger* ledger = nullptr,
                              const StepObserver& observer = {});

// The large-output-variance limit computed both ways: scale Sigma_L by k and
// fold the compensating learning-rate factor k into the update, or scale the
// intermediate precisions by k with step size gamma/k and leave the learning
// rate alone. The two parameterisations agree to rounding; the constructor
// verifies this and keeps both for inspection.
struct VarianceScaledResult {
    GradientSet update;                 // output-scaling form, k folded in
    GradientSet update_precision_form;  // intermediate-precision form
    double form_gap;                    // max-abs difference between the two
};

VarianceScaledResult variance_scaled_update(const ChainSpec& spec,
                                            const Parameters& params,
                                            const Vec& input, const Vec& target,
                                            double k, const InferenceConfig& cfg);

// Fixed-prediction-assumption PC: predictions and Jacobian points frozen at
// the feed-forward values, output cotangent frozen at loss_error(mu_L).
// Errors are e_l = x_l - mu_l.
InferenceResult fpa_inference(const ChainSpec& spec, const Parameters& params,
                              const Vec& input, const Vec& target,
                              const InferenceConfig& cfg,
                              CostLedger* ledger = nullptr,
                              const StepObserver& observer = {});

// Zero-divergence inference learning: standard-PC dynamics with gamma = 1 and
// T = L-1 (both enforced), where the gradient block for theta_l is captured
// at step t = L-l-1, the moment its cotangent error first becomes non-zero.
// Layers above the front keep evolving (counted as work in the ledger) unless
// cfg.zil_skip_wasted is set.
GradientSet zil_run(const ChainSpec& spec, const Parameters& params,
                    const Vec& input, const Vec& target,
                    const InferenceConfig& cfg, CostLedger* ledger = nullptr);

// theta <- theta - alpha * grad, elementwise; returns new Parameters.
Parameters sgd_step(const Parameters& params, const GradientSet& grads,
                    double alpha);

// Per-row engine gradients averaged over the batch. Rows are processed in
// contiguous chunks (one per thread) and partial sums are reduced in chunk
// order, so a fixed (seed, threads) pair reproduces bitwise.
GradientSet batch_gradient(const ChainSpec& spec, const Parameters& params,
                           const Batch& batch, Variant variant,
                           const Precisions& prec, const InferenceConfig& cfg,
                           int threads = 1, CostLedger* ledger = nullptr);

namespace testing {
// Z-IL with the Requirement 2/3 enforcement disabled, for ablation studies
// only: runs the scheduled-capture dynamics at an arbitrary gamma/step count.
GradientSet zil_run_unchecked(const ChainSpec& spec, const Parameters& params,
                              const Vec& input, const Vec& target,
                              const InferenceConfig& cfg,
                              CostLedger* ledger = nullptr);
}  // namespace testing

}  // namespace pclab
