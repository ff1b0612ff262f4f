#include "pclab/chain.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include "pclab/errors.hpp"

namespace pclab {
namespace {

std::atomic<bool> g_vjp_sign_fault{false};

void check_layer_index(const ChainSpec& spec, int layer) {
    if (layer < 0 || layer >= spec.depth())
        throw DimensionError("layer index " + std::to_string(layer) +
                             " out of range for depth " + std::to_string(spec.depth()));
}

void check_length(const Vec& v, int expected, const char* what, int layer) {
    if (v.size() != expected) {
        std::ostringstream os;
        os << what << " has length " << v.size() << ", expected " << expected
           << " at layer " << layer;
        throw DimensionError(os.str());
    }
}

Vec apply_activation(Activation a, const Vec& z) {
    switch (a) {
        case Activation::Identity: return z;
        case Activation::Tanh: return z.array().tanh().matrix();
        case Activation::Relu: return z.cwiseMax(0.0);
    }
    return z;
}

// g'(z); the relu subgradient at 0 is taken as 0.
Vec activation_derivative(Activation a, const Vec& z) {
    switch (a) {
        case Activation::Identity: return Vec::Ones(z.size());
        case Activation::Tanh: {
            Vec t = z.array().tanh().matrix();
            return (1.0 - t.array().square()).matrix();
        }
        case Activation::Relu:
            return (z.array() > 0.0).cast<double>().matrix();
    }
    return Vec::Ones(z.size());
}

Vec preactivation(const ChainSpec& spec, const Parameters& params, int layer,
                  const Vec& point) {
    Vec z = params.weights[layer] * point;
    if (spec.has_bias) z += params.biases[layer];
    return z;
}

Vec softmax(const Vec& p) {
    const double m = p.maxCoeff();
    Vec e = (p.array() - m).exp().matrix();
    return e / e.sum();
}

// Shape-only parameter check, cheap enough for per-sample calls. The full
// finite-entry scan lives in Parameters::validate_against.
void check_shapes(const ChainSpec& spec, const Parameters& params) {
    const int L = spec.depth();
    if (static_cast<int>(params.weights.size()) != L)
        throw DimensionError("weight count does not match chain depth");
    if (spec.has_bias && static_cast<int>(params.biases.size()) != L)
        throw DimensionError("bias count does not match chain depth");
    for (int l = 0; l < L; ++l) {
        if (params.weights[l].rows() != spec.layer_dims[l + 1] ||
            params.weights[l].cols() != spec.layer_dims[l])
            throw DimensionError("weight shape mismatch at layer " + std::to_string(l));
        if (spec.has_bias && params.biases[l].size() != spec.layer_dims[l + 1])
            throw DimensionError("bias length mismatch at layer " + std::to_string(l));
    }
}

void check_cross_entropy_target(const Vec& target) {
    double sum = 0.0;
    for (int i = 0; i < target.size(); ++i) {
        if (!(target[i] >= 0.0 && target[i] <= 1.0))
            throw DimensionError(
                "cross-entropy target entries must lie in [0,1]; entry " +
                std::to_string(i) + " is " + std::to_string(target[i]));
        sum += target[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw DimensionError("cross-entropy target must sum to 1, got " +
                             std::to_string(sum));
}

}  // namespace

namespace testing {
void set_vjp_sign_fault(bool enabled) { g_vjp_sign_fault.store(enabled); }
bool vjp_sign_fault() { return g_vjp_sign_fault.load(); }
}  // namespace testing

Vec layer_apply(const ChainSpec& spec, const Parameters& params, int layer,
                const Vec& point, CostLedger* ledger) {
    check_layer_index(spec, layer);
    check_length(point, spec.layer_dims[layer], "point", layer);
    if (ledger) {
        ledger->ensure_layers(spec.depth());
        ledger->forward_evals[layer]++;
    }
    return apply_activation(spec.activations[layer],
                            preactivation(spec, params, layer, point));
}

double loss_value(LossKind kind, const Vec& prediction, const Vec& target) {
    if (prediction.size() != target.size())
        throw DimensionError("prediction/target length mismatch in loss");
    switch (kind) {
        case LossKind::SquaredEuclidean:
            return 0.5 * (prediction - target).squaredNorm();
        case LossKind::SoftmaxCrossEntropy: {
            check_cross_entropy_target(target);
            // -sum t_i log softmax(p)_i, evaluated via the log-sum-exp shift.
            const double m = prediction.maxCoeff();
            const double lse =
                m + std::log((prediction.array() - m).exp().sum());
            return -(target.array() * (prediction.array() - lse)).sum();
        }
    }
    return 0.0;
}

Vec loss_error(LossKind kind, const Vec& prediction, const Vec& target,
               CostLedger* ledger) {
    if (prediction.size() != target.size())
        throw DimensionError("prediction/target length mismatch in loss gradient");
    if (ledger) ledger->output_cotangent_evals++;
    switch (kind) {
        case LossKind::SquaredEuclidean: return prediction - target;
        case LossKind::SoftmaxCrossEntropy:
            check_cross_entropy_target(target);
            return softmax(prediction) - target;
    }
    return Vec::Zero(prediction.size());
}

ForwardTrace forward(const ChainSpec& spec, const Parameters& params,
                     const Vec& input, const Vec& target, CostLedger* ledger) {
    check_shapes(spec, params);
    check_length(input, spec.input_dim(), "input", 0);
    check_length(target, spec.output_dim(), "target", spec.depth());

    ForwardTrace trace;
    trace.mu.reserve(static_cast<std::size_t>(spec.depth()) + 1);
    trace.mu.push_back(input);
    for (int l = 0; l < spec.depth(); ++l) {
        Vec next = layer_apply(spec, params, l, trace.mu.back(), ledger);
        if (!next.allFinite())
            throw NumericOverflowError(
                "non-finite value in forward pass at layer " + std::to_string(l), l);
        trace.mu.push_back(std::move(next));
    }
    trace.target = target;
    trace.loss = loss_value(spec.loss, trace.mu.back(), target);
    if (ledger) ledger->loss_evals++;
    if (!std::isfinite(trace.loss))
        throw NumericOverflowError("non-finite loss value", spec.depth());
    return trace;
}

Vec predict(const ChainSpec& spec, const Parameters& params, const Vec& input,
            CostLedger* ledger) {
    check_shapes(spec, params);
    check_length(input, spec.input_dim(), "input", 0);
    Vec v = input;
    for (int l = 0; l < spec.depth(); ++l) v = layer_apply(spec, params, l, v, ledger);
    return v;
}

Vec layer_vjp(const ChainSpec& spec, const Parameters& params, int layer,
              const Vec& point, const Vec& cotangent, CostLedger* ledger) {
    check_layer_index(spec, layer);
    check_length(point, spec.layer_dims[layer], "point", layer);
    check_length(cotangent, spec.layer_dims[layer + 1], "cotangent", layer);
    if (ledger) {
        ledger->ensure_layers(spec.depth());
        ledger->vjp_evals[layer]++;
    }
    const Vec z = preactivation(spec, params, layer, point);
    const Vec gz = activation_derivative(spec.activations[layer], z);
    Vec result = params.weights[layer].transpose() * gz.cwiseProduct(cotangent);
    if (g_vjp_sign_fault.load(std::memory_order_relaxed)) result = -result;
    return result;
}

GradientBlock param_vjp(const ChainSpec& spec, const Parameters& params,
                        int layer, const Vec& point, const Vec& cotangent,
                        CostLedger* ledger) {
    check_layer_index(spec, layer);
    check_length(point, spec.layer_dims[layer], "point", layer);
    check_length(cotangent, spec.layer_dims[layer + 1], "cotangent", layer);
    if (ledger) ledger->param_vjp_evals++;
    const Vec z = preactivation(spec, params, layer, point);
    const Vec scaled =
        activation_derivative(spec.activations[layer], z).cwiseProduct(cotangent);
    GradientBlock block;
    block.weight = scaled * point.transpose();
    if (spec.has_bias) block.bias = scaled;
    return block;
}

}  // namespace pclab
