#include "pclab/checks.hpp"

#include <cmath>
#include <sstream>

#include "pclab/analysis.hpp"
#include "pclab/chain.hpp"
#include "pclab/engines.hpp"
#include "pclab/fd_oracle.hpp"
#include "pclab/instances.hpp"

namespace pclab {
namespace {

// Scale-aware gradcheck metric: |a-b| / max(1, |a|, |b|), maximised over all
// entries of all blocks.
double gradcheck_error(const GradientSet& a, const GradientSet& b) {
    double worst = 0.0;
    auto update = [&](double x, double y) {
        const double denom = std::max({1.0, std::abs(x), std::abs(y)});
        worst = std::max(worst, std::abs(x - y) / denom);
    };
    for (std::size_t l = 0; l < a.weights.size(); ++l)
        for (int r = 0; r < a.weights[l].rows(); ++r)
            for (int c = 0; c < a.weights[l].cols(); ++c)
                update(a.weights[l](r, c), b.weights[l](r, c));
    for (std::size_t l = 0; l < a.biases.size(); ++l)
        for (int i = 0; i < a.biases[l].size(); ++i)
            update(a.biases[l][i], b.biases[l][i]);
    return worst;
}

CheckResult check_finite_differences(Rng& rng) {
    CheckResult result{"backprop-vs-finite-differences", "rel err < 1e-6", false, ""};
    InstanceOptions options;
    options.max_depth = 5;
    options.max_width = 10;
    options.biases = true;
    double worst = 0.0;
    const int n = 25;
    for (int i = 0; i < n; ++i) {
        const ChainInstance inst = make_random_instance(rng, options);
        const ForwardTrace trace = forward(inst.spec, inst.params, inst.input, inst.target);
        const GradientSet analytic = backprop(inst.spec, inst.params, trace);
        const GradientSet numeric =
            finite_difference_grad(inst.spec, inst.params, inst.input, inst.target, 1e-5);
        worst = std::max(worst, gradcheck_error(analytic, numeric));
    }
    result.passed = worst < 1e-6;
    std::ostringstream os;
    os << n << " seeded nets, worst rel err " << worst;
    result.detail = os.str();
    return result;
}

CheckResult check_zil_equality(Rng& rng) {
    CheckResult result{"zil-vs-backprop", "max-abs-diff <= 1e-12", false, ""};
    InstanceOptions options;
    options.max_depth = 8;
    double worst = 0.0;
    const int n = 40;
    for (int i = 0; i < n; ++i) {
        const ChainInstance inst = make_random_instance(rng, options);
        const ForwardTrace trace = forward(inst.spec, inst.params, inst.input, inst.target);
        const GradientSet reference = backprop(inst.spec, inst.params, trace);
        InferenceConfig cfg;
        cfg.variant = Variant::Zil;
        cfg.gamma = 1.0;
        cfg.steps = inst.spec.depth() - 1;
        const GradientSet zil = zil_run(inst.spec, inst.params, inst.input, inst.target, cfg);
        worst = std::max(worst, max_abs_diff(zil, reference));
    }
    result.passed = worst <= 1e-12;
    std::ostringstream os;
    os << n << " seeded nets (depth 2-8), worst diff " << worst;
    result.detail = os.str();
    return result;
}

CheckResult check_fpa_step1(Rng& rng) {
    CheckResult result{"fpa-step1-vs-backprop", "max-abs-diff <= 1e-12", false, ""};
    InstanceOptions options;
    options.max_depth = 8;
    double worst = 0.0;
    const int n = 20;
    for (int i = 0; i < n; ++i) {
        const ChainInstance inst = make_random_instance(rng, options);
        const ForwardTrace trace = forward(inst.spec, inst.params, inst.input, inst.target);
        std::vector<Vec> bp_errors;
        const GradientSet reference =
            backprop(inst.spec, inst.params, trace, nullptr, &bp_errors);
        InferenceConfig cfg;
        cfg.variant = Variant::FpaPc;
        cfg.gamma = 1.0;
        cfg.steps = inst.spec.depth() - 1;
        const InferenceResult fpa =
            fpa_inference(inst.spec, inst.params, inst.input, inst.target, cfg);
        worst = std::max(worst, max_abs_diff(fpa.grads, reference));
        for (int l = 1; l <= inst.spec.depth(); ++l)
            worst = std::max(worst,
                             (fpa.state.e[l] - bp_errors[l]).cwiseAbs().maxCoeff());
    }
    result.passed = worst <= 1e-12;
    std::ostringstream os;
    os << n << " seeded nets, gradients and per-layer errors, worst diff " << worst;
    result.detail = os.str();
    return result;
}

CheckResult check_theorem1_trace(Rng& rng) {
    CheckResult result{"propagation-bound-trace", "first non-zero exactly at L-l", false, ""};
    InstanceOptions options;
    options.min_depth = 4;
    options.max_depth = 8;
    options.tanh_only = true;  // keep every Jacobian non-zero
    int checked = 0;
    bool ok = true;
    for (int i = 0; i < 6 && ok; ++i) {
        const ChainInstance inst = make_random_instance(rng, options);
        const int L = inst.spec.depth();
        for (double gamma : {0.25, 0.5, 1.0}) {
            for (Variant variant : {Variant::Vpc, Variant::FpaPc}) {
                InferenceConfig cfg;
                cfg.variant = variant;
                cfg.gamma = gamma;
                cfg.steps = L + 2;
                const TraceReport report = trace_first_nonzero(
                    variant, inst.spec, inst.params, inst.input, inst.target, cfg);
                if (report.zero_loss_warning) continue;
                for (int l = 1; l < L; ++l) {
                    ++checked;
                    if (!report.first_nonzero[l] || *report.first_nonzero[l] != L - l)
                        ok = false;
                }
                if (!report.first_nonzero[L] || *report.first_nonzero[L] != 0) ok = false;
            }
        }
    }
    result.passed = ok && checked > 0;
    std::ostringstream os;
    os << checked << " layer timings across VPC/FPA, gamma in {0.25,0.5,1}";
    result.detail = os.str();
    return result;
}

CheckResult check_complexity_bound(Rng& rng) {
    CheckResult result{"complexity-bound", "variant time >= backprop time for t_c >= L",
                       false, ""};
    const int n = 1000;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
        const int layers = 2 + rng.below(9);
        std::vector<double> costs(static_cast<std::size_t>(layers));
        for (double& c : costs) c = rng.uniform(0.1, 10.0);
        const long t_c = layers + rng.below(20);
        if (modeled_time_variant(costs, t_c) < modeled_time_backprop(costs)) ok = false;
    }
    // Equality must hold exactly for uniform costs at t_c = L.
    const std::vector<double> uniform(6, 4.0);
    if (modeled_time_variant(uniform, 6) != modeled_time_backprop(uniform)) ok = false;

    result.passed = ok;
    std::ostringstream os;
    os << n << " random cost vectors plus the uniform equality case";
    result.detail = os.str();
    return result;
}

CheckResult check_variance_scaling(Rng& rng) {
    CheckResult result{"variance-scaling-forms", "parameterisations equal to 1e-12", false, ""};
    InstanceOptions options;
    options.max_depth = 4;
    options.max_width = 8;
    options.tanh_only = true;
    options.mixed_losses = false;
    double worst = 0.0;
    const int n = 8;
    try {
        for (int i = 0; i < n; ++i) {
            const ChainInstance inst = make_random_instance(rng, options);
            InferenceConfig cfg;
            cfg.variant = Variant::Vpc;
            cfg.gamma = 0.1;
            cfg.steps = 60;
            for (double k : {1.0, 10.0, 100.0}) {
                const VarianceScaledResult scaled = variance_scaled_update(
                    inst.spec, inst.params, inst.input, inst.target, k, cfg);
                worst = std::max(worst, scaled.form_gap);
            }
        }
        result.passed = true;
    } catch (const std::exception& e) {
        result.passed = false;
        result.detail = e.what();
        return result;
    }
    std::ostringstream os;
    os << n << " seeded nets, k in {1,10,100}, worst gap " << worst;
    result.detail = os.str();
    return result;
}

}  // namespace

std::vector<CheckResult> run_check_suite(std::uint64_t seed, bool inject_vjp_fault) {
    struct FaultGuard {
        explicit FaultGuard(bool on) { testing::set_vjp_sign_fault(on); }
        ~FaultGuard() { testing::set_vjp_sign_fault(false); }
    } guard(inject_vjp_fault);

    Rng rng(seed);
    std::vector<CheckResult> results;
    results.push_back(check_finite_differences(rng));
    results.push_back(check_zil_equality(rng));
    results.push_back(check_fpa_step1(rng));
    results.push_back(check_theorem1_trace(rng));
    results.push_back(check_complexity_bound(rng));
    results.push_back(check_variance_scaling(rng));
    return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        if (!r.passed) return false;
    return true;
}

}  // namespace pclab
