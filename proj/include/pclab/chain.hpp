#pragma once

#include <optional>

#include "pclab/ledger.hpp"
#include "pclab/types.hpp"

namespace pclab {

// Feed-forward values of one chain evaluation. mu[0] is the input x_0 and
// mu[l] is the layer-l output, so mu has depth()+1 entries and mu.back() is
// the pre-loss prediction mu_L.
struct ForwardTrace {
    std::vector<Vec> mu;
    Vec target;
    double loss = 0.0;

    const Vec& prediction() const { return mu.back(); }
};

// One parameter-gradient block: d(loss)/d(theta_l) plus the bias part when
// the spec has biases.
struct GradientBlock {
    Mat weight;
    std::optional<Vec> bias;
};

// f_l applied at an arbitrary point (not necessarily mu_l).
Vec layer_apply(const ChainSpec& spec, const Parameters& params, int layer,
                const Vec& point, CostLedger* ledger = nullptr);

double loss_value(LossKind kind, const Vec& prediction, const Vec& target);

// Gradient of the scalar loss with respect to its prediction argument:
// (p - t) for the squared-Euclidean loss, softmax(p) - t for cross-entropy.
Vec loss_error(LossKind kind, const Vec& prediction, const Vec& target,
               CostLedger* ledger = nullptr);

ForwardTrace forward(const ChainSpec& spec, const Parameters& params,
                     const Vec& input, const Vec& target,
                     CostLedger* ledger = nullptr);

// Pre-loss prediction mu_L for an input, without needing a target.
Vec predict(const ChainSpec& spec, const Parameters& params, const Vec& input,
            CostLedger* ledger = nullptr);

// (df_l/dx)^T cotangent with the Jacobian evaluated at `point`. The Jacobian
// is never materialised: for g(Wx+b) this is W^T (g'(z) .* cotangent).
Vec layer_vjp(const ChainSpec& spec, const Parameters& params, int layer,
              const Vec& point, const Vec& cotangent,
              CostLedger* ledger = nullptr);

// (df_l/dtheta_l)^T cotangent evaluated at `point`:
// outer(g'(z) .* cotangent, point), plus g'(z) .* cotangent for the bias.
GradientBlock param_vjp(const ChainSpec& spec, const Parameters& params,
                        int layer, const Vec& point, const Vec& cotangent,
                        CostLedger* ledger = nullptr);

namespace testing {
// Fault-injection hook: flips the sign of every layer_vjp result. Exists so
// the check suite can demonstrate that a broken VJP is caught; never set in
// production code paths.
void set_vjp_sign_fault(bool enabled);
bool vjp_sign_fault();
}  // namespace testing

}  // namespace pclab
