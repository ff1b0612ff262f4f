#include "pclab/engines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pclab/errors.hpp"
#include "pclab/parallel.hpp"

namespace pclab {
namespace {

constexpr double kDivergenceLimit = 1e12;

void check_divergence(const LatentState& state, int step) {
    for (std::size_t l = 1; l < state.x.size(); ++l) {
        const Vec& x = state.x[l];
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceLimit)
            throw DivergenceError("inference diverged at step " + std::to_string(step) +
                                      ", layer " + std::to_string(l),
                                  step, static_cast<int>(l));
    }
}

// Latent state initialised to the feed-forward values (Requirement 1).
LatentState init_state(const ChainSpec& spec, const ForwardTrace& trace) {
    LatentState state;
    const int L = spec.depth();
    state.x.assign(trace.mu.begin(), trace.mu.begin() + L);  // x_0..x_{L-1}
    state.e.resize(static_cast<std::size_t>(L) + 1);
    state.t = 0;
    return state;
}

// Recomputes all VPC errors at the current latent values:
// e_l = x_l - f_{l-1}(x_{l-1}) for l < L and e_L = (1/k) * loss gradient at
// the current prediction f_{L-1}(x_{L-1}).
void vpc_errors(const ChainSpec& spec, const Parameters& params,
                const Vec& target, const Precisions& prec, LatentState& state,
                CostLedger* ledger) {
    const int L = spec.depth();
    for (int l = 1; l < L; ++l)
        state.e[l] = state.x[l] - layer_apply(spec, params, l - 1, state.x[l - 1], ledger);
    const Vec prediction = layer_apply(spec, params, L - 1, state.x[L - 1], ledger);
    state.e[L] = loss_error(spec.loss, prediction, target, ledger) / prec.output_scale;
}

// The cotangent entering layer l's VJP: precision-weighted for latent layers,
// the (already 1/k-scaled) output error for the top.
Vec vpc_cotangent(const Precisions& prec, const LatentState& state, int next_layer,
                  int L) {
    if (next_layer == L) return state.e[L];
    return prec.inv_sigma[next_layer].cwiseProduct(state.e[next_layer]);
}

// One synchronous (Jacobi) step of the standard-PC gradient flow. All
// brackets are computed from the step-t errors before any latent is
// reassigned. Returns max|dx| over the layers that moved.
double vpc_step(const ChainSpec& spec, const Parameters& params,
                const Precisions& prec, double gamma, LatentState& state,
                CostLedger* ledger, int only_layer = -1) {
    const int L = spec.depth();
    std::vector<Vec> next_x(state.x.size());
    double max_dx = 0.0;
    for (int l = 1; l < L; ++l) {
        if (only_layer >= 0 && l != only_layer) continue;
        const Vec cot = vpc_cotangent(prec, state, l + 1, L);
        Vec bracket = prec.inv_sigma[l].cwiseProduct(state.e[l]) -
                      layer_vjp(spec, params, l, state.x[l], cot, ledger);
        next_x[l] = state.x[l] - gamma * bracket;
        if (bracket.size() > 0) max_dx = std::max(max_dx, gamma * bracket.cwiseAbs().maxCoeff());
    }
    for (int l = 1; l < L; ++l)
        if (next_x[l].size() > 0) state.x[l] = std::move(next_x[l]);
    state.t++;
    if (ledger) ledger->inference_steps++;
    return max_dx;
}

GradientSet vpc_parameter_grads(const ChainSpec& spec, const Parameters& params,
                                const Precisions& prec, const LatentState& state,
                                CostLedger* ledger) {
    const int L = spec.depth();
    GradientSet grads;
    for (int l = 0; l < L; ++l) {
        const Vec cot = vpc_cotangent(prec, state, l + 1, L);
        GradientBlock block = param_vjp(spec, params, l, state.x[l], cot, ledger);
        grads.weights.push_back(std::move(block.weight));
        if (block.bias) grads.biases.push_back(std::move(*block.bias));
    }
    return grads;
}

void require_variant(const InferenceConfig& cfg, Variant expected, const char* fn) {
    if (cfg.variant != expected)
        throw ConfigError(std::string(fn) + " called with variant " +
                          to_string(cfg.variant) + ", expected " + to_string(expected));
}

GradientSet zil_core(const ChainSpec& spec, const Parameters& params,
                     const Vec& input, const Vec& target, double gamma,
                     int steps, bool skip_wasted, CostLedger* ledger) {
    const ForwardTrace trace = forward(spec, params, input, target, ledger);
    const int L = spec.depth();
    const Precisions prec = Precisions::identity(spec);

    LatentState state = init_state(spec, trace);
    vpc_errors(spec, params, target, prec, state, ledger);

    GradientSet grads = GradientSet::zeros_like(spec);
    auto capture = [&](int l, const Vec& cot) {
        GradientBlock block = param_vjp(spec, params, l, state.x[l], cot, ledger);
        grads.weights[l] = std::move(block.weight);
        if (block.bias) grads.biases[l] = std::move(*block.bias);
    };

    // theta_{L-1} is due at t = 0: its cotangent e_L is assigned outright.
    capture(L - 1, state.e[L]);

    for (int t = 1; t <= steps; ++t) {
        const int scheduled = L - t;  // the layer whose error turns non-zero now
        vpc_step(spec, params, prec, gamma, state, ledger,
                 skip_wasted ? scheduled : -1);
        check_divergence(state, t);
        vpc_errors(spec, params, target, prec, state, ledger);
        if (scheduled >= 1) capture(scheduled - 1, state.e[scheduled]);
    }
    return grads;
}

}  // namespace

const char* to_string(Variant v) {
    switch (v) {
        case Variant::Backprop: return "backprop";
        case Variant::Vpc: return "vpc";
        case Variant::FpaPc: return "fpa-pc";
        case Variant::Zil: return "z-il";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "backprop") return Variant::Backprop;
    if (s == "vpc") return Variant::Vpc;
    if (s == "fpa-pc" || s == "fpa") return Variant::FpaPc;
    if (s == "z-il" || s == "zil") return Variant::Zil;
    throw ConfigError("unknown engine variant: " + s);
}

Precisions Precisions::identity(const ChainSpec& spec) {
    Precisions p;
    p.inv_sigma.resize(static_cast<std::size_t>(spec.depth()));
    for (int l = 1; l < spec.depth(); ++l)
        p.inv_sigma[l] = Vec::Ones(spec.layer_dims[l]);
    p.output_scale = 1.0;
    return p;
}

void Precisions::validate_against(const ChainSpec& spec) const {
    const int L = spec.depth();
    if (static_cast<int>(inv_sigma.size()) != L && L > 1)
        throw DimensionError("precision vector count must equal chain depth");
    for (int l = 1; l < L; ++l) {
        if (inv_sigma[l].size() != spec.layer_dims[l])
            throw DimensionError("precision length mismatch at layer " + std::to_string(l));
        if ((inv_sigma[l].array() <= 0.0).any())
            throw DimensionError("precisions must be positive at layer " + std::to_string(l));
    }
    if (!(output_scale > 0.0))
        throw DimensionError("output variance scale k must be positive");
}

void InferenceConfig::validate() const {
    if (!(gamma > 0.0)) throw ConfigError("inference step size gamma must be > 0");
    if (steps < 0) throw ConfigError("inference step count must be >= 0");
    if (stop_tol && !(*stop_tol > 0.0)) throw ConfigError("stop_tol must be > 0");
    if (!(alpha > 0.0)) throw ConfigError("learning rate alpha must be > 0");
}

GradientSet backprop(const ChainSpec& spec, const Parameters& params,
                     const ForwardTrace& trace, CostLedger* ledger,
                     std::vector<Vec>* errors_out) {
    const int L = spec.depth();
    std::vector<Vec> e(static_cast<std::size_t>(L) + 1);
    e[L] = loss_error(spec.loss, trace.prediction(), trace.target, ledger);
    for (int l = L - 1; l >= 1; --l)
        e[l] = layer_vjp(spec, params, l, trace.mu[l], e[l + 1], ledger);

    GradientSet grads;
    for (int l = 0; l < L; ++l) {
        GradientBlock block = param_vjp(spec, params, l, trace.mu[l], e[l + 1], ledger);
        grads.weights.push_back(std::move(block.weight));
        if (block.bias) grads.biases.push_back(std::move(*block.bias));
    }
    if (errors_out) *errors_out = std::move(e);
    return grads;
}

InferenceResult vpc_inference(const ChainSpec& spec, const Parameters& params,
                              const Vec& input, const Vec& target,
                              const Precisions& prec, const InferenceConfig& cfg,
                              CostLedger* ledger, const StepObserver& observer) {
    require_variant(cfg, Variant::Vpc, "vpc_inference");
    cfg.validate();
    prec.validate_against(spec);

    const ForwardTrace trace = forward(spec, params, input, target, ledger);
    LatentState state = init_state(spec, trace);
    vpc_errors(spec, params, target, prec, state, ledger);
    if (observer) observer(state);

    for (int t = 1; t <= cfg.steps; ++t) {
        const double max_dx = vpc_step(spec, params, prec, cfg.gamma, state, ledger);
        check_divergence(state, t);
        vpc_errors(spec, params, target, prec, state, ledger);
        if (observer) observer(state);
        if (cfg.stop_tol && max_dx < *cfg.stop_tol) {
            if (ledger) ledger->early_stopped = true;
            break;
        }
    }

    InferenceResult result;
    result.grads = vpc_parameter_grads(spec, params, prec, state, ledger);
    result.state = std::move(state);
    return result;
}

VarianceScaledResult variance_scaled_update(const ChainSpec& spec,
                                            const Parameters& params,
                                            const Vec& input, const Vec& target,
                                            double k, const InferenceConfig& cfg) {
    if (!(k >= 1.0)) throw ConfigError("variance scale k must be >= 1");

    // Form A: Sigma_L scaled by k (output error carries 1/k), learning-rate
    // factor k folded into the returned update.
    Precisions prec_a = Precisions::identity(spec);
    prec_a.output_scale = k;
    InferenceResult res_a = vpc_inference(spec, params, input, target, prec_a, cfg);
    GradientSet update_a = std::move(res_a.grads);
    scale(update_a, k);

    // Form B: intermediate precisions scaled by k, output untouched, step
    // size gamma/k. Same trajectory, same update, no folding.
    Precisions prec_b = Precisions::identity(spec);
    for (int l = 1; l < spec.depth(); ++l) prec_b.inv_sigma[l] *= k;
    InferenceConfig cfg_b = cfg;
    cfg_b.gamma = cfg.gamma / k;
    InferenceResult res_b = vpc_inference(spec, params, input, target, prec_b, cfg_b);

    VarianceScaledResult out;
    out.form_gap = max_abs_diff(update_a, res_b.grads);
    out.update = std::move(update_a);
    out.update_precision_form = std::move(res_b.grads);

    double magnitude = 1.0;
    for (const auto& w : out.update.weights)
        magnitude = std::max(magnitude, w.cwiseAbs().maxCoeff());
    if (out.form_gap > 1e-12 * magnitude)
        throw std::logic_error("variance-scaling parameterisations disagree: gap " +
                               std::to_string(out.form_gap));
    return out;
}

InferenceResult fpa_inference(const ChainSpec& spec, const Parameters& params,
                              const Vec& input, const Vec& target,
                              const InferenceConfig& cfg, CostLedger* ledger,
                              const StepObserver& observer) {
    require_variant(cfg, Variant::FpaPc, "fpa_inference");
    cfg.validate();

    const ForwardTrace trace = forward(spec, params, input, target, ledger);
    const int L = spec.depth();
    LatentState state = init_state(spec, trace);

    // Frozen output cotangent: the loss gradient at mu_L, never re-evaluated.
    const Vec e_out = loss_error(spec.loss, trace.prediction(), trace.target, ledger);

    auto refresh_errors = [&] {
        for (int l = 1; l < L; ++l) state.e[l] = state.x[l] - trace.mu[l];
        state.e[L] = e_out;
    };
    refresh_errors();
    if (observer) observer(state);

    auto cotangent = [&](int next_layer) -> Vec {
        if (next_layer == L) return e_out;
        return state.x[next_layer] - trace.mu[next_layer];
    };

    for (int t = 1; t <= cfg.steps; ++t) {
        std::vector<Vec> next_x(state.x.size());
        double max_dx = 0.0;
        for (int l = 1; l < L; ++l) {
            Vec u = (state.x[l] - trace.mu[l]) -
                    layer_vjp(spec, params, l, trace.mu[l], cotangent(l + 1), ledger);
            next_x[l] = state.x[l] - cfg.gamma * u;
            if (u.size() > 0) max_dx = std::max(max_dx, cfg.gamma * u.cwiseAbs().maxCoeff());
        }
        for (int l = 1; l < L; ++l) state.x[l] = std::move(next_x[l]);
        state.t++;
        if (ledger) ledger->inference_steps++;
        check_divergence(state, t);
        refresh_errors();
        if (observer) observer(state);
        if (cfg.stop_tol && max_dx < *cfg.stop_tol) {
            if (ledger) ledger->early_stopped = true;
            break;
        }
    }

    InferenceResult result;
    for (int l = 0; l < L; ++l) {
        GradientBlock block =
            param_vjp(spec, params, l, trace.mu[l], state.e[l + 1], ledger);
        result.grads.weights.push_back(std::move(block.weight));
        if (block.bias) result.grads.biases.push_back(std::move(*block.bias));
    }
    result.state = std::move(state);
    return result;
}

GradientSet zil_run(const ChainSpec& spec, const Parameters& params,
                    const Vec& input, const Vec& target,
                    const InferenceConfig& cfg, CostLedger* ledger) {
    require_variant(cfg, Variant::Zil, "zil_run");
    cfg.validate();
    const int L = spec.depth();
    if (cfg.gamma != 1.0)
        throw ConfigError("Z-IL requires inference step size gamma = 1 "
                          "(Requirement 2); got " + std::to_string(cfg.gamma) +
                          ". Any other value loses the backprop equivalence.");
    if (cfg.steps != L - 1)
        throw ConfigError("Z-IL requires exactly T = L-1 = " + std::to_string(L - 1) +
                          " inference steps so each layer updates at its distance "
                          "from the output (Requirement 3); got " +
                          std::to_string(cfg.steps) + ".");
    return zil_core(spec, params, input, target, cfg.gamma, cfg.steps,
                    cfg.zil_skip_wasted, ledger);
}

Parameters sgd_step(const Parameters& params, const GradientSet& grads, double alpha) {
    if (params.weights.size() != grads.weights.size() ||
        params.biases.size() != grads.biases.size())
        throw DimensionError("gradient set does not match parameter layout");
    Parameters next = params;
    for (std::size_t l = 0; l < next.weights.size(); ++l) {
        if (next.weights[l].rows() != grads.weights[l].rows() ||
            next.weights[l].cols() != grads.weights[l].cols())
            throw DimensionError("gradient block shape mismatch at layer " + std::to_string(l));
        next.weights[l] -= alpha * grads.weights[l];
    }
    for (std::size_t l = 0; l < next.biases.size(); ++l)
        next.biases[l] -= alpha * grads.biases[l];
    return next;
}

GradientSet batch_gradient(const ChainSpec& spec, const Parameters& params,
                           const Batch& batch, Variant variant,
                           const Precisions& prec, const InferenceConfig& cfg,
                           int threads, CostLedger* ledger) {
    if (batch.size() < 1) throw DimensionError("batch must contain at least one row");
    if (batch.inputs.rows() != batch.targets.rows())
        throw DimensionError("batch inputs/targets row mismatch");

    auto row_gradient = [&](int row, CostLedger* row_ledger) -> GradientSet {
        const Vec input = batch.inputs.row(row).transpose();
        const Vec target = batch.targets.row(row).transpose();
        switch (variant) {
            case Variant::Backprop: {
                const ForwardTrace trace = forward(spec, params, input, target, row_ledger);
                return backprop(spec, params, trace, row_ledger);
            }
            case Variant::Vpc:
                return vpc_inference(spec, params, input, target, prec, cfg, row_ledger).grads;
            case Variant::FpaPc:
                return fpa_inference(spec, params, input, target, cfg, row_ledger).grads;
            case Variant::Zil:
                return zil_run(spec, params, input, target, cfg, row_ledger);
        }
        throw ConfigError("unhandled engine variant");
    };

    const int n = batch.size();
    const int chunks = std::max(1, std::min(threads, n));
    std::vector<GradientSet> partial(static_cast<std::size_t>(chunks));
    std::vector<CostLedger> partial_ledger(static_cast<std::size_t>(chunks));

    parallel_chunks(n, chunks, [&](int chunk, int begin, int end) {
        GradientSet sum = GradientSet::zeros_like(spec);
        CostLedger* lg = ledger ? &partial_ledger[static_cast<std::size_t>(chunk)] : nullptr;
        for (int row = begin; row < end; ++row) {
            const GradientSet g = row_gradient(row, lg);
            axpy(sum, g);
        }
        partial[static_cast<std::size_t>(chunk)] = std::move(sum);
    });

    GradientSet total = GradientSet::zeros_like(spec);
    for (int c = 0; c < chunks; ++c) axpy(total, partial[static_cast<std::size_t>(c)]);
    scale(total, 1.0 / static_cast<double>(n));

    if (ledger) {
        ledger->ensure_layers(spec.depth());
        for (const CostLedger& lg : partial_ledger) {
            for (std::size_t l = 0; l < lg.forward_evals.size(); ++l)
                ledger->forward_evals[l] += lg.forward_evals[l];
            for (std::size_t l = 0; l < lg.vjp_evals.size(); ++l)
                ledger->vjp_evals[l] += lg.vjp_evals[l];
            ledger->loss_evals += lg.loss_evals;
            ledger->output_cotangent_evals += lg.output_cotangent_evals;
            ledger->param_vjp_evals += lg.param_vjp_evals;
            ledger->inference_steps += lg.inference_steps;
            ledger->early_stopped = ledger->early_stopped || lg.early_stopped;
        }
    }
    return total;
}

namespace testing {
GradientSet zil_run_unchecked(const ChainSpec& spec, const Parameters& params,
                              const Vec& input, const Vec& target,
                              const InferenceConfig& cfg, CostLedger* ledger) {
    cfg.validate();
    return zil_core(spec, params, input, target, cfg.gamma, cfg.steps,
                    cfg.zil_skip_wasted, ledger);
}
}  // namespace testing

}  // namespace pclab
