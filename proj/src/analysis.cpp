#include "pclab/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pclab/errors.hpp"

namespace pclab {
namespace {

bool any_nonzero(const Vec& v) {
    for (int i = 0; i < v.size(); ++i)
        if (v[i] != 0.0) return true;
    return false;
}

double flat_dot(const GradientSet& a, const GradientSet& b, int layer) {
    double d = a.weights[layer].cwiseProduct(b.weights[layer]).sum();
    if (!a.biases.empty()) d += a.biases[layer].dot(b.biases[layer]);
    return d;
}

}  // namespace

TraceReport trace_first_nonzero(Variant variant, const ChainSpec& spec,
                                const Parameters& params, const Vec& input,
                                const Vec& target, const InferenceConfig& cfg) {
    if (variant != Variant::Vpc && variant != Variant::FpaPc)
        throw ConfigError("trace_first_nonzero covers standard-PC and FPA dynamics only");

    const int L = spec.depth();
    TraceReport report;
    report.depth = L;
    report.first_nonzero.assign(static_cast<std::size_t>(L) + 1, std::nullopt);

    const ForwardTrace trace = forward(spec, params, input, target);
    const Vec out_err = loss_error(spec.loss, trace.prediction(), trace.target);
    if (!any_nonzero(out_err)) {
        // The propagation bound excludes the zero-gradient case: nothing ever
        // leaves exact zero.
        report.zero_loss_warning = true;
        return report;
    }

    StepObserver observer = [&](const LatentState& state) {
        for (int l = 1; l <= L; ++l) {
            if (!report.first_nonzero[l] && any_nonzero(state.e[l]))
                report.first_nonzero[l] = state.t;
        }
    };

    InferenceConfig run_cfg = cfg;
    run_cfg.variant = variant;
    if (variant == Variant::Vpc) {
        vpc_inference(spec, params, input, target, Precisions::identity(spec),
                      run_cfg, nullptr, observer);
    } else {
        fpa_inference(spec, params, input, target, run_cfg, nullptr, observer);
    }
    return report;
}

std::vector<double> layer_cost_units(const ChainSpec& spec) {
    std::vector<double> units;
    units.reserve(static_cast<std::size_t>(spec.depth()));
    for (int l = 0; l < spec.depth(); ++l) {
        const double din = spec.layer_dims[l];
        const double dout = spec.layer_dims[l + 1];
        units.push_back(2.0 * din * dout + dout);
    }
    return units;
}

double modeled_time_backprop(const std::vector<double>& cost_units,
                             double cheap_gradient_constant) {
    double total = 0.0;
    for (double c : cost_units) total += cheap_gradient_constant * c;
    return total;
}

double modeled_time_variant(const std::vector<double>& cost_units, long t_c,
                            double cheap_gradient_constant) {
    double forward = 0.0, cmax = 0.0;
    for (double c : cost_units) {
        forward += c;
        cmax = std::max(cmax, c);
    }
    return forward + static_cast<double>(t_c) * (cheap_gradient_constant - 1.0) * cmax;
}

CostLedger cost_model(const ChainSpec& spec, Variant variant, long t_c,
                      double cheap_gradient_constant) {
    if (t_c < 0) throw ConfigError("step count t_c must be >= 0");
    CostLedger ledger;
    ledger.cost_units = layer_cost_units(spec);
    ledger.cost_max = *std::max_element(ledger.cost_units.begin(), ledger.cost_units.end());
    ledger.modeled_time_backprop =
        modeled_time_backprop(ledger.cost_units, cheap_gradient_constant);
    ledger.modeled_time_variant =
        variant == Variant::Backprop
            ? ledger.modeled_time_backprop
            : modeled_time_variant(ledger.cost_units, t_c, cheap_gradient_constant);
    ledger.bound_satisfied = ledger.modeled_time_variant >= ledger.modeled_time_backprop;
    return ledger;
}

SimilarityReport compare_gradients(const GradientSet& a, const GradientSet& b) {
    if (a.weights.size() != b.weights.size() || a.biases.size() != b.biases.size())
        throw DimensionError("gradient sets have different block counts");
    const int L = static_cast<int>(a.weights.size());

    SimilarityReport report;
    double dot_all = 0.0, na_all = 0.0, nb_all = 0.0;
    for (int l = 0; l < L; ++l) {
        if (a.weights[l].rows() != b.weights[l].rows() ||
            a.weights[l].cols() != b.weights[l].cols())
            throw DimensionError("gradient block shape mismatch at layer " + std::to_string(l));
        const double dot = flat_dot(a, b, l);
        const double na = flat_dot(a, a, l);
        const double nb = flat_dot(b, b, l);
        SimilarityReport::Layer layer;
        layer.a_zero = na == 0.0;
        layer.b_zero = nb == 0.0;
        if (!layer.a_zero && !layer.b_zero)
            layer.cosine = dot / (std::sqrt(na) * std::sqrt(nb));
        report.layers.push_back(layer);
        dot_all += dot;
        na_all += na;
        nb_all += nb;
    }
    report.a_zero_global = na_all == 0.0;
    report.b_zero_global = nb_all == 0.0;
    if (!report.a_zero_global && !report.b_zero_global)
        report.global_cosine = dot_all / (std::sqrt(na_all) * std::sqrt(nb_all));
    return report;
}

RuntimeStats measure_runtime(Variant variant, const ChainSpec& spec,
                             const Parameters& params, const Batch& batch,
                             const Precisions& prec, const InferenceConfig& cfg,
                             int repetitions, int threads) {
    if (repetitions < 3) throw ConfigError("runtime measurement needs >= 3 repetitions");
    using clock = std::chrono::steady_clock;

    auto one_pass = [&] {
        batch_gradient(spec, params, batch, variant, prec, cfg, threads);
    };

    one_pass();  // warm-up, excluded

    RuntimeStats stats;
    stats.threads = threads;
    stats.samples_s.reserve(static_cast<std::size_t>(repetitions));
    for (int r = 0; r < repetitions; ++r) {
        const auto start = clock::now();
        one_pass();
        const auto stop = clock::now();
        stats.samples_s.push_back(std::chrono::duration<double>(stop - start).count());
    }

    std::vector<double> sorted = stats.samples_s;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    stats.median_s = n % 2 == 1 ? sorted[n / 2]
                                : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    stats.iqr_s = sorted[(3 * n) / 4] - sorted[n / 4];
    return stats;
}

}  // namespace pclab
